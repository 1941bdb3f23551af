#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stuckat/bits.hpp"
#include "stuckat/errors.hpp"
#include "stuckat/gf2_matrix.hpp"
#include "stuckat/small_bias.hpp"

namespace stuckat {

/// All scheme constants shared by encoder and decoder. Blocks are B bits,
/// the memory holds M = floor(N/B) of them; each chain block spends
/// pointer_width + count_width bits on the link to the next chain block and
/// keeps `slack` spare rows as rank margin.
///
/// A profile may pin the generator seed (pinned_seed nonempty). A pinned
/// seed is part of the profile both sides load, so the side-channel
/// metadata shrinks to pointer + count bits. The nested metadata block of
/// the strong codec relies on this.
class param_profile {
public:
    std::size_t n = 0;
    unsigned c = 0;
    unsigned b = 0;
    std::size_t block_count = 0;
    unsigned pointer_width = 0;
    unsigned count_width = 0;
    unsigned slack = 0;
    int mu_log2 = 0;
    generator_params gen;
    bit_vector pinned_seed;
    unsigned meta_const = 0;  // K: meta_bits() <= K * c * ceil(log2 n)

    static param_profile standard(std::size_t n, unsigned c) {
        if (c < 3) raise(errc::bad_argument, "universal constant C must be >= 3");
        return custom(n, c, c * ceil_log2(n), -static_cast<int>(c * ceil_log2(n)), std::nullopt, {});
    }

    static param_profile custom(std::size_t n, unsigned c, unsigned b, int mu_log2, std::optional<unsigned> slack_opt,
                                bit_vector pinned) {
        if (n < 2 || b < 2 || b > n) raise(errc::bad_argument, "need 2 <= B <= N");
        param_profile p;
        p.n = n;
        p.c = c;
        p.b = b;
        p.block_count = n / b;
        p.pointer_width = ceil_log2(p.block_count + 1);
        p.count_width = ceil_log2(static_cast<std::uint64_t>(b) + 1);
        p.slack = slack_opt.value_or(p.pointer_width);
        p.mu_log2 = mu_log2;
        p.gen = derive_params(static_cast<std::size_t>(b) * n, b, mu_log2);
        if (!pinned.empty() && pinned.size() != p.gen.t) raise(errc::bad_argument, "pinned seed length != t");
        p.pinned_seed = std::move(pinned);
        const unsigned unit = c * ceil_log2(n);
        p.meta_const = unit ? (p.meta_bits_internal() + unit - 1) / unit : 0;
        p.code_ = std::make_shared<dual_distance_code>(p.gen.r, p.gen.k);
        return p;
    }

    unsigned seed_bits_in_meta() const { return pinned_seed.empty() ? gen.t : 0u; }
    unsigned meta_bits() const { return meta_bits_internal(); }
    unsigned per_block_overhead() const { return pointer_width + count_width; }
    unsigned eligibility_threshold() const { return pointer_width + count_width + slack; }

    const dual_distance_code& code() const { return *code_; }

private:
    unsigned meta_bits_internal() const { return seed_bits_in_meta() + pointer_width + count_width; }

    std::shared_ptr<dual_distance_code> code_;
};

struct memory_image {
    bit_vector cover;
    frozen_set frozen;

    std::size_t size() const { return cover.size(); }
};

/// Per-block budgets and the chain order of the planning pass.
struct block_plan {
    struct block_budget {
        std::uint32_t unfrozen = 0;
        std::uint32_t msg_bits = 0;    // m_i
        std::uint32_t total_bits = 0;  // mbar_i = m_i + p + q, or 0 for skipped blocks
    };
    std::vector<block_budget> blocks;
    std::vector<std::uint32_t> chain;  // 0-based ids of blocks with total_bits > 0, increasing
    std::size_t msg_len = 0;
};

/// Greedy left-to-right budget assignment. A block is usable when its
/// unfrozen count exceeds p+q+s; it then carries
/// m_i = min(unfrozen - (p+q+s), remaining) message bits plus the p+q link
/// bits. Usable blocks stay in the chain even after the message runs out,
/// carrying link bits only.
inline block_plan plan_blocks(const param_profile& profile, const frozen_set& frozen, std::size_t msg_len) {
    const bit_vector mask = frozen.to_mask(profile.n);
    block_plan plan;
    plan.msg_len = msg_len;
    plan.blocks.resize(profile.block_count);
    std::size_t remaining = msg_len;
    for (std::size_t i = 0; i < profile.block_count; ++i) {
        auto& blk = plan.blocks[i];
        blk.unfrozen = static_cast<std::uint32_t>(profile.b - mask.weight_range(i * profile.b, profile.b));
        if (blk.unfrozen > profile.eligibility_threshold()) {
            const std::size_t budget = blk.unfrozen - profile.eligibility_threshold();
            blk.msg_bits = static_cast<std::uint32_t>(std::min(budget, remaining));
            blk.total_bits = blk.msg_bits + profile.per_block_overhead();
            remaining -= blk.msg_bits;
            plan.chain.push_back(static_cast<std::uint32_t>(i));
        }
    }
    if (remaining > 0)
        raise(errc::message_too_long,
              "message of " + std::to_string(msg_len) + " bits exceeds capacity by " + std::to_string(remaining));
    return plan;
}

/// Largest message length plan_blocks accepts for this frozen pattern.
inline std::size_t plan_capacity(const param_profile& profile, const frozen_set& frozen) {
    const bit_vector mask = frozen.to_mask(profile.n);
    std::size_t cap = 0;
    for (std::size_t i = 0; i < profile.block_count; ++i) {
        const std::size_t unfrozen = profile.b - mask.weight_range(i * profile.b, profile.b);
        if (unfrozen > profile.eligibility_threshold()) cap += unfrozen - profile.eligibility_threshold();
    }
    return cap;
}

/// u = seed o Bin(first_block) o Bin(first_count), MSB first, no padding.
/// first_block is 1-based on the wire; 0 means the chain is empty.
struct side_metadata {
    bit_vector seed;            // empty when the profile pins the seed
    std::uint32_t first_block = 0;
    std::uint32_t first_count = 0;

    bit_vector serialize(const param_profile& profile) const {
        bit_vector u;
        if (profile.seed_bits_in_meta()) u.append(seed);
        u.append_uint(first_block, profile.pointer_width);
        u.append_uint(first_count, profile.count_width);
        return u;
    }

    static side_metadata parse(const param_profile& profile, const bit_vector& u) {
        if (u.size() != profile.meta_bits()) raise(errc::bad_format, "metadata length mismatch");
        side_metadata m;
        std::size_t pos = 0;
        if (profile.seed_bits_in_meta()) {
            m.seed = u.slice(0, profile.gen.t);
            pos = profile.gen.t;
        }
        m.first_block = static_cast<std::uint32_t>(u.read_uint(pos, profile.pointer_width));
        m.first_count = static_cast<std::uint32_t>(u.read_uint(pos + profile.pointer_width, profile.count_width));
        if (m.first_block > profile.block_count) raise(errc::malformed_chain, "first block beyond block count");
        return m;
    }
};

/// Supplies fresh seeds for encoder attempts. Deterministic given its state.
class seed_source {
public:
    explicit seed_source(std::uint64_t seed) : gen_(seed) {}

    bit_vector next(unsigned nbits) {
        bit_vector v(nbits);
        for (unsigned i = 0; i < nbits; i += 64) {
            const std::uint64_t word = gen_();
            for (unsigned j = 0; j < 64 && i + j < nbits; ++j) v.set(i + j, (word >> j) & 1u);
        }
        return v;
    }

private:
    std::mt19937_64 gen_;
};

struct sidechannel_encoding {
    bit_vector stored;
    side_metadata meta;
    block_plan plan;
    unsigned attempts = 0;
};

namespace detail {

struct block_context {
    std::vector<fixed_bit> fixed;           // frozen columns with cover values
    std::vector<std::uint32_t> free_cols;   // unfrozen columns
};

inline block_context make_block_context(const param_profile& profile, const bit_vector& cover,
                                        const bit_vector& frozen_mask, std::size_t block) {
    block_context ctx;
    const std::size_t base = block * profile.b;
    for (unsigned cidx = 0; cidx < profile.b; ++cidx) {
        if (frozen_mask.get(base + cidx))
            ctx.fixed.push_back({cidx, cover.get(base + cidx)});
        else
            ctx.free_cols.push_back(cidx);
    }
    return ctx;
}

}  // namespace detail

/// Side-channel encoder: solve one constrained linear system per chain
/// block against consecutive slices of the generator output. Fresh seeds
/// are drawn up to max_attempts times when a chain block's unfrozen-column
/// matrix is rank deficient; a pinned-seed profile gets exactly one
/// attempt.
inline sidechannel_encoding encode_with_sidechannel(const param_profile& profile, const memory_image& image,
                                                    const bit_vector& msg, seed_source& seeds,
                                                    unsigned max_attempts = 16) {
    if (image.cover.size() != profile.n) raise(errc::dimension_mismatch, "cover length != N");
    block_plan plan = plan_blocks(profile, image.frozen, msg.size());
    const bit_vector frozen_mask = image.frozen.to_mask(profile.n);

    std::vector<detail::block_context> ctx;
    ctx.reserve(plan.chain.size());
    for (std::uint32_t blk : plan.chain)
        ctx.push_back(detail::make_block_context(profile, image.cover, frozen_mask, blk));

    const bool pinned = !profile.pinned_seed.empty();
    const unsigned attempts_allowed = pinned ? 1 : std::max(1u, max_attempts);

    for (unsigned attempt = 1; attempt <= attempts_allowed; ++attempt) {
        const bit_vector seed = pinned ? profile.pinned_seed : seeds.next(profile.gen.t);
        seed_expander ex(profile.gen, profile.code(), seed);
        bit_vector stored = image.cover;
        std::size_t gen_offset = 0;
        std::size_t msg_offset = 0;
        bool ok = true;

        for (std::size_t j = 0; j < plan.chain.size() && ok; ++j) {
            const std::uint32_t blk = plan.chain[j];
            const auto& budget = plan.blocks[blk];
            const std::uint32_t next_block = (j + 1 < plan.chain.size()) ? plan.chain[j + 1] + 1 : 0;
            const std::uint32_t next_count = (j + 1 < plan.chain.size()) ? plan.blocks[plan.chain[j + 1]].msg_bits : 0;

            const gf2_matrix a =
                gf2_matrix::from_bits(budget.total_bits, profile.b,
                                      ex.slice(gen_offset, static_cast<std::size_t>(budget.total_bits) * profile.b));
            gen_offset += static_cast<std::size_t>(budget.total_bits) * profile.b;

            bit_vector target = msg.slice(msg_offset, budget.msg_bits);
            target.append_uint(next_block, profile.pointer_width);
            target.append_uint(next_count, profile.count_width);

            const constrained_solution sol = solve_constrained_detail(a, ctx[j].fixed, target);
            if (!sol.full_row_rank) {  // this seed cannot encode every possible target
                ok = false;
                break;
            }
            stored.splice(static_cast<std::size_t>(blk) * profile.b, sol.w);
            msg_offset += budget.msg_bits;
        }

        if (ok) {
            sidechannel_encoding out;
            out.stored = std::move(stored);
            out.meta.seed = profile.seed_bits_in_meta() ? seed : bit_vector();
            out.meta.first_block = plan.chain.empty() ? 0 : plan.chain.front() + 1;
            out.meta.first_count = plan.chain.empty() ? 0 : plan.blocks[plan.chain.front()].msg_bits;
            out.plan = std::move(plan);
            out.attempts = attempt;
            return out;
        }
    }
    raise(errc::rank_deficient,
          "no full-rank matrix set within " + std::to_string(attempts_allowed) + " seed attempt(s)");
}

/// Side-channel decoder: walk the chain from the metadata, multiplying
/// each block through its matrix slice and splitting the product into
/// message, next pointer and next count. Needs neither the frozen set nor
/// rho.
inline bit_vector decode_with_sidechannel(const param_profile& profile, const bit_vector& stored,
                                          const side_metadata& meta) {
    if (stored.size() != profile.n) raise(errc::dimension_mismatch, "stored length != N");
    bit_vector out;
    if (meta.first_block == 0) return out;

    const bit_vector& seed = profile.seed_bits_in_meta() ? meta.seed : profile.pinned_seed;
    seed_expander ex(profile.gen, profile.code(), seed);

    std::uint32_t cur = meta.first_block;  // 1-based
    std::uint32_t cur_count = meta.first_count;
    std::size_t gen_offset = 0;
    while (true) {
        if (cur > profile.block_count) raise(errc::malformed_chain, "pointer beyond block count");
        const std::size_t mbar = static_cast<std::size_t>(cur_count) + profile.per_block_overhead();
        if (gen_offset + mbar * profile.b > profile.gen.r)
            raise(errc::malformed_chain, "chain consumes more generator bits than exist");
        const gf2_matrix a = gf2_matrix::from_bits(mbar, profile.b, ex.slice(gen_offset, mbar * profile.b));
        gen_offset += mbar * profile.b;

        const bit_vector block = stored.slice(static_cast<std::size_t>(cur - 1) * profile.b, profile.b);
        const bit_vector product = mat_vec_mul(a, block);
        for (std::uint32_t i = 0; i < cur_count; ++i) out.append_bit(product.get(i));

        const std::uint32_t next =
            static_cast<std::uint32_t>(product.read_uint(cur_count, profile.pointer_width));
        const std::uint32_t next_count =
            static_cast<std::uint32_t>(product.read_uint(cur_count + profile.pointer_width, profile.count_width));
        if (next == 0) break;
        if (next <= cur) raise(errc::malformed_chain, "chain pointer does not advance");
        cur = next;
        cur_count = next_count;
    }
    return out;
}

/// Deterministic mode: scan seeds in lexicographic order (zero-extended
/// MSB first) and return the first one under which every chain block's
/// unfrozen-column matrix has full row rank.
inline bit_vector deterministic_seed_search(const param_profile& profile, const memory_image& image,
                                            const block_plan& plan, std::uint64_t budget) {
    if (budget < 1) raise(errc::bad_argument, "budget must be >= 1");
    const bit_vector frozen_mask = image.frozen.to_mask(profile.n);

    std::vector<std::vector<std::uint32_t>> block_free;
    block_free.reserve(plan.chain.size());
    for (std::uint32_t blk : plan.chain)
        block_free.push_back(detail::make_block_context(profile, image.cover, frozen_mask, blk).free_cols);

    std::uint64_t limit = budget;
    if (profile.gen.t < 64) limit = std::min<std::uint64_t>(limit, 1ull << profile.gen.t);

    for (std::uint64_t sv = 0; sv < limit; ++sv) {
        bit_vector seed(profile.gen.t);
        const unsigned low = std::min(profile.gen.t, 64u);
        for (unsigned i = 0; i < low; ++i) seed.set(profile.gen.t - 1 - i, (sv >> i) & 1u);
        seed_expander ex(profile.gen, profile.code(), seed);
        std::size_t gen_offset = 0;
        bool ok = true;
        for (std::size_t j = 0; j < plan.chain.size() && ok; ++j) {
            const std::uint32_t blk = plan.chain[j];
            const std::size_t mbar = plan.blocks[blk].total_bits;
            const gf2_matrix a = gf2_matrix::from_bits(mbar, profile.b, ex.slice(gen_offset, mbar * profile.b));
            gen_offset += mbar * profile.b;
            if (rank(a.select_columns(block_free[j])) < mbar) ok = false;
        }
        if (ok) return seed;
    }
    raise(errc::search_exhausted, "no full-rank seed within budget " + std::to_string(budget));
}

}  // namespace stuckat
