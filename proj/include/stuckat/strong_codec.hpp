#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stuckat/bits.hpp"
#include "stuckat/block_codec.hpp"
#include "stuckat/errors.hpp"

namespace stuckat {

/// Layout of the four regions the strong codec carves out of the memory:
/// v1 = [0, v2_begin), v2 = [v2_begin, v2_end) of length v2_len,
/// v3 = [v2_end, tail_begin), v4 = [tail_begin, n). v4 holds exactly the
/// profile's tail_unfrozen writable cells; v2 is a low-defect interval.
struct partition {
    std::uint32_t interval = 0;  // 1-based interval index i
    std::size_t v2_begin = 0;
    std::size_t v2_end = 0;
    std::size_t tail_begin = 0;  // j
};

/// Position of the nested metadata block v22 inside v2.
struct nested_layout {
    std::uint32_t window = 0;  // 0-based window index inside v2
    std::size_t v22_begin = 0;
    std::size_t v22_end = 0;
};

/// Constants of the no-side-channel construction. The nested profile pins
/// its generator seed, so the inner metadata u2 is only pointer+count bits
/// and the weight-residue modulus mod2 = 2^|u2| stays flippable at desk
/// scale. mod4 covers every (interval, window) pair.
class strong_profile {
public:
    std::size_t n = 0;
    unsigned c = 0;
    unsigned delta_den = 0;   // delta = 1/delta_den (v2_len is the block-aligned delta*N)
    std::size_t v2_len = 0;
    std::size_t len22 = 0;
    std::uint64_t mod2 = 0;
    std::uint64_t mod4 = 0;
    std::size_t tail_unfrozen = 0;  // ceil(N / floor(log2 N))
    double rho_max = 0.0;
    unsigned meta_const = 0;  // K realized by the outer metadata
    param_profile outer;
    param_profile inner;

    std::size_t interval_count() const { return n / v2_len; }
    std::size_t windows_per_v2() const { return v2_len / len22; }

    static strong_profile make(std::size_t n, unsigned c, unsigned delta_den, std::size_t len22, int outer_mu_log2,
                               std::optional<unsigned> outer_slack, std::optional<unsigned> inner_slack,
                               double rho_max, bit_vector inner_seed = {}, std::optional<unsigned> b_override = {},
                               bool require_capacity = true) {
        strong_profile sp;
        sp.n = n;
        sp.c = c;
        sp.delta_den = delta_den;
        sp.rho_max = rho_max;
        sp.len22 = len22;

        const unsigned b = b_override.value_or(c * ceil_log2(n));
        sp.outer = param_profile::custom(n, c, b, outer_mu_log2, outer_slack, {});
        sp.v2_len = ((n / delta_den) / b) * b;  // block aligned
        sp.tail_unfrozen = (n + floor_log2(n) - 1) / floor_log2(n);

        const unsigned b_in = c * ceil_log2(len22);
        if (len22 < b_in) raise(errc::bad_argument, "nested block too short for its own block structure");
        param_profile inner_plain =
            param_profile::custom(len22, c, b_in, -static_cast<int>(c * ceil_log2(len22)), inner_slack, {});
        if (inner_seed.empty()) inner_seed = derived_inner_seed(n, c, len22, inner_plain.gen.t);
        sp.inner = param_profile::custom(len22, c, b_in, inner_plain.mu_log2, inner_slack, std::move(inner_seed));

        if (sp.inner.meta_bits() >= 63) raise(errc::parameter_overflow, "nested metadata too wide for a weight modulus");
        sp.mod2 = 1ull << sp.inner.meta_bits();
        sp.mod4 = std::bit_ceil<std::uint64_t>(sp.interval_count() * sp.windows_per_v2());
        sp.meta_const = sp.outer.meta_const;
        sp.validate_structure();
        if (require_capacity) sp.validate_capacity();
        return sp;
    }

    /// Desk-scale default constants (N = 2^14 and up).
    static strong_profile desk_default(std::size_t n, unsigned c) {
        return make(n, c, 4, 512, -24, std::nullopt, 5u, 0.35);
    }

    /// Profile for partition/subblock studies only: encode-capacity checks
    /// are skipped, structural invariants still hold.
    static strong_profile partition_study(std::size_t n, unsigned c, unsigned delta_den, unsigned b,
                                          std::size_t len22, double rho_max) {
        return make(n, c, delta_den, len22, -8, std::nullopt, std::nullopt, rho_max, {}, b, false);
    }

    void validate_structure() const {
        if (v2_len < len22 || windows_per_v2() < 1) raise(errc::bad_argument, "v2 cannot hold the nested block");
        if (v2_len % outer.b) raise(errc::bad_argument, "v2 length not block aligned");
        if (2.0 * static_cast<double>(v2_len) / static_cast<double>(n) >= 1.0 - rho_max)
            raise(errc::bad_argument, "2*delta must be below 1 - rho_max");
        if (mod2 != (1ull << inner.meta_bits())) raise(errc::bad_argument, "mod2 != 2^|u2|");
        if (mod4 < interval_count() * windows_per_v2()) raise(errc::bad_argument, "mod4 below position-code range");
    }

    /// Feasibility at the declared defect ceiling. Worst-case frozen packing
    /// can still fail individual encodes; those surface as encoder errors.
    void validate_capacity() const {
        const double writable = 1.0 - rho_max;
        const double inner_block_budget =
            static_cast<double>(inner.b) * writable - static_cast<double>(inner.eligibility_threshold());
        const double inner_capacity = inner_block_budget > 0 ? inner_block_budget * static_cast<double>(inner.block_count) : 0;
        if (inner_capacity < static_cast<double>(outer.meta_bits()))
            raise(errc::bad_argument, "nested block cannot hold the outer metadata at rho_max");
        if (static_cast<double>(v2_len - len22) * writable < 2.0 * static_cast<double>(mod2))
            raise(errc::bad_argument, "v21/v23 too thin for the mod2 weight encoding at rho_max");
        if (tail_unfrozen < outer.b + 2 * mod4)
            raise(errc::bad_argument, "tail too thin for the mod4 weight encoding");
    }

    void validate() const {
        validate_structure();
        validate_capacity();
    }

private:
    static bit_vector derived_inner_seed(std::size_t n, unsigned c, std::size_t len22, unsigned t) {
        // Fixed function of the profile constants, so independently built
        // encoder and decoder profiles agree without negotiation.
        std::uint64_t x = 0x9e3779b97f4a7c15ull ^ (static_cast<std::uint64_t>(n) << 24) ^
                          (static_cast<std::uint64_t>(c) << 16) ^ static_cast<std::uint64_t>(len22);
        bit_vector seed(t);
        for (unsigned i = 0; i < t; i += 64) {
            x += 0x9e3779b97f4a7c15ull;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
            z ^= z >> 31;
            for (unsigned j = 0; j < 64 && i + j < t; ++j) seed.set(i + j, (z >> j) & 1u);
        }
        return seed;
    }
};

namespace detail {

/// count <= (rho + 2*delta) * span, evaluated in exact integer arithmetic:
/// count * n <= (|F| + 2*v2_len) * span.
inline bool within_defect_bound(std::uint64_t count, std::uint64_t span, std::uint64_t frozen_total,
                                std::uint64_t v2_len, std::uint64_t n) {
    return count * n <= (frozen_total + 2 * v2_len) * span;
}

inline std::size_t tail_start(const strong_profile& sp, const bit_vector& frozen_mask) {
    std::size_t count = 0;
    for (std::size_t j = sp.n; j-- > 0;) {
        if (!frozen_mask.get(j)) ++count;
        if (count == sp.tail_unfrozen) return j;
    }
    raise(errc::no_valid_interval, "fewer than tail_unfrozen writable cells in the memory");
}

inline std::vector<std::uint32_t> valid_intervals(const strong_profile& sp, const bit_vector& frozen_mask,
                                                  std::size_t frozen_total, std::size_t j) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 1; i <= sp.interval_count(); ++i) {
        const std::size_t begin = static_cast<std::size_t>(i) * sp.v2_len;
        const std::size_t end = begin + sp.v2_len;
        if (end > j) break;  // v2 must lie strictly left of v4
        const std::size_t cnt = frozen_mask.weight_range(begin, sp.v2_len);
        if (within_defect_bound(cnt, sp.v2_len, frozen_total, sp.v2_len, sp.n)) out.push_back(i);
    }
    return out;
}

inline std::vector<std::uint32_t> valid_windows(const strong_profile& sp, const bit_vector& frozen_mask,
                                                std::size_t frozen_total, std::size_t v2_begin) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t w = 0; w < sp.windows_per_v2(); ++w) {
        const std::size_t begin = v2_begin + static_cast<std::size_t>(w) * sp.len22;
        const std::size_t cnt = frozen_mask.weight_range(begin, sp.len22);
        if (within_defect_bound(cnt, sp.len22, frozen_total, sp.v2_len, sp.n)) out.push_back(w);
    }
    return out;
}

inline partition make_partition(const strong_profile& sp, std::uint32_t interval, std::size_t j) {
    partition p;
    p.interval = interval;
    p.v2_begin = static_cast<std::size_t>(interval) * sp.v2_len;
    p.v2_end = p.v2_begin + sp.v2_len;
    p.tail_begin = j;
    return p;
}

}  // namespace detail

/// Partition search: the maximal j whose suffix holds exactly tail_unfrozen
/// writable cells, then the smallest interval index i whose v2 candidate is
/// strictly left of j and within the (rho + 2*delta) defect bound.
inline partition find_partition(const strong_profile& sp, const frozen_set& frozen) {
    const bit_vector mask = frozen.to_mask(sp.n);
    const std::size_t j = detail::tail_start(sp, mask);
    const auto valid = detail::valid_intervals(sp, mask, frozen.size(), j);
    if (valid.empty()) raise(errc::no_valid_interval, "no interval satisfies the defect bound left of the tail");
    return detail::make_partition(sp, valid.front(), j);
}

/// Averaging-argument search inside v2: the smallest len22-aligned window
/// within the (rho + 2*delta) defect bound.
inline nested_layout find_subblock(const strong_profile& sp, const partition& part, const frozen_set& frozen) {
    const bit_vector mask = frozen.to_mask(sp.n);
    const auto valid = detail::valid_windows(sp, mask, frozen.size(), part.v2_begin);
    if (valid.empty()) raise(errc::no_valid_subblock, "no nested window satisfies the defect bound");
    nested_layout nl;
    nl.window = valid.front();
    nl.v22_begin = part.v2_begin + static_cast<std::size_t>(nl.window) * sp.len22;
    nl.v22_end = nl.v22_begin + sp.len22;
    return nl;
}

/// Bijective packing of (interval, window) into the mod4 residue.
inline std::uint64_t pack_position_code(const strong_profile& sp, std::uint32_t interval, std::uint32_t window) {
    if (interval < 1 || interval > sp.interval_count() || window >= sp.windows_per_v2())
        raise(errc::bad_argument, "position code out of range");
    return static_cast<std::uint64_t>(interval - 1) * sp.windows_per_v2() + window;
}

inline std::pair<std::uint32_t, std::uint32_t> unpack_position_code(const strong_profile& sp, std::uint64_t d) {
    if (d >= static_cast<std::uint64_t>(sp.interval_count()) * sp.windows_per_v2())
        raise(errc::invalid_position_code, "residue outside the (interval, window) range");
    return {static_cast<std::uint32_t>(d / sp.windows_per_v2() + 1),
            static_cast<std::uint32_t>(d % sp.windows_per_v2())};
}

struct strong_encode_stats {
    partition part;
    nested_layout nest;
    unsigned outer_attempts = 0;
    unsigned windows_tried = 0;
    std::uint64_t flips_mod2 = 0;
    std::uint64_t flips_mod4 = 0;
    std::uint64_t u_residue = 0;
    std::uint64_t d_residue = 0;
};

struct strong_encoding {
    bit_vector stored;
    strong_encode_stats stats;
};

/// The outer pass encodes the message over the whole memory with v2, v4
/// and the block containing j added to the frozen set; the nested pass
/// encodes the outer metadata u1 into the chosen window with the
/// pinned-seed profile and stores u2 as the v2 weight residue mod mod2;
/// finally the (interval, window) position goes into the total weight
/// residue mod mod4, flipping only writable cells at or beyond the first
/// block boundary after j.
///
/// On a rank or capacity failure inside the nested window the encoder
/// advances to the next valid window (the position code transmits the
/// choice), then to the next valid interval; the decoder is oblivious.
inline strong_encoding strong_encode(const strong_profile& sp, const memory_image& image, const bit_vector& msg,
                                     seed_source& seeds, unsigned max_attempts = 16) {
    if (image.cover.size() != sp.n) raise(errc::dimension_mismatch, "cover length != N");
    const bit_vector frozen_mask = image.frozen.to_mask(sp.n);
    const std::size_t j = detail::tail_start(sp, frozen_mask);
    const auto intervals = detail::valid_intervals(sp, frozen_mask, image.frozen.size(), j);
    if (intervals.empty()) raise(errc::no_valid_interval, "no interval satisfies the defect bound left of the tail");

    const std::size_t guard_block = j / sp.outer.b;
    const std::size_t flip_floor = std::min(sp.n, (guard_block + 1) * sp.outer.b);

    // MessageTooLong surfaces only when every interval rejects the length at
    // the planning stage; any deeper failure outranks it.
    std::optional<codec_error> last_plan;
    std::optional<codec_error> last;
    for (std::uint32_t interval : intervals) {
        const partition part = detail::make_partition(sp, interval, j);

        // outer pass: v2, v4 and the straddling block are off limits
        bit_vector aug_mask = frozen_mask;
        auto add_range = [&](std::size_t b, std::size_t e) {
            for (std::size_t pos = b; pos < e; ++pos) aug_mask.set(pos, true);
        };
        add_range(part.v2_begin, part.v2_end);
        add_range(guard_block * sp.outer.b, std::min(sp.n, (guard_block + 1) * sp.outer.b));
        add_range(j, sp.n);
        std::vector<std::uint32_t> aug;
        for (std::size_t pos = 0; pos < sp.n; ++pos)
            if (aug_mask.get(pos)) aug.push_back(static_cast<std::uint32_t>(pos));
        const frozen_set aug_frozen = frozen_set::from_indices(std::move(aug), sp.n);

        sidechannel_encoding outer_enc;
        try {
            outer_enc = encode_with_sidechannel(sp.outer, {image.cover, aug_frozen}, msg, seeds, max_attempts);
        } catch (const codec_error& e) {
            if (e.code() == errc::message_too_long)
                last_plan = e;
            else
                last = e;
            continue;
        }
        const bit_vector u1 = outer_enc.meta.serialize(sp.outer);

        // nested pass: encode u1, walking the valid windows in order
        const auto windows = detail::valid_windows(sp, frozen_mask, image.frozen.size(), part.v2_begin);
        if (windows.empty()) {
            last = codec_error(errc::no_valid_subblock, "no nested window satisfies the defect bound");
            continue;
        }
        unsigned tried = 0;
        for (std::uint32_t window : windows) {
            ++tried;
            nested_layout nest;
            nest.window = window;
            nest.v22_begin = part.v2_begin + static_cast<std::size_t>(window) * sp.len22;
            nest.v22_end = nest.v22_begin + sp.len22;

            std::vector<std::uint32_t> sub;
            for (std::size_t pos = nest.v22_begin; pos < nest.v22_end; ++pos)
                if (frozen_mask.get(pos)) sub.push_back(static_cast<std::uint32_t>(pos - nest.v22_begin));
            const memory_image nested_image{image.cover.slice(nest.v22_begin, sp.len22),
                                            frozen_set::from_indices(std::move(sub), sp.len22)};

            sidechannel_encoding inner_enc;
            try {
                inner_enc = encode_with_sidechannel(sp.inner, nested_image, u1, seeds, 1);
            } catch (const codec_error& e) {
                last = e;
                continue;
            }

            bit_vector stored = outer_enc.stored;
            stored.splice(nest.v22_begin, inner_enc.stored);

            // v2 weight residue carries u2; flips stay in v21/v23
            const bit_vector u2 = inner_enc.meta.serialize(sp.inner);
            const std::uint64_t u_val = u2.to_uint();
            bit_vector v2_mask(sp.v2_len);
            for (std::size_t pos = 0; pos < sp.v2_len; ++pos)
                v2_mask.set(pos, frozen_mask.get(part.v2_begin + pos) ||
                                     (part.v2_begin + pos >= nest.v22_begin && part.v2_begin + pos < nest.v22_end));
            bit_vector v2_before = stored.slice(part.v2_begin, sp.v2_len);
            bit_vector v2_after = flip_to_residue(v2_before, v2_mask, sp.mod2, u_val % sp.mod2);
            const std::uint64_t flips2 = v2_before.hamming_distance(v2_after);
            stored.splice(part.v2_begin, v2_after);

            // total weight residue carries the position code
            const std::uint64_t d = pack_position_code(sp, interval, window);
            bit_vector flip4_mask(sp.n, true);
            for (std::size_t pos = flip_floor; pos < sp.n; ++pos)
                if (!frozen_mask.get(pos)) flip4_mask.set(pos, false);
            bit_vector sealed = flip_to_residue(stored, flip4_mask, sp.mod4, d % sp.mod4);
            const std::uint64_t flips4 = stored.hamming_distance(sealed);

            strong_encoding out;
            out.stored = std::move(sealed);
            out.stats.part = part;
            out.stats.nest = nest;
            out.stats.outer_attempts = outer_enc.attempts;
            out.stats.windows_tried = tried;
            out.stats.flips_mod2 = flips2;
            out.stats.flips_mod4 = flips4;
            out.stats.u_residue = u_val;
            out.stats.d_residue = d;
            return out;
        }
    }
    if (last) throw *last;
    if (last_plan) throw *last_plan;
    raise(errc::no_valid_interval, "strong encode found no workable layout");
}

/// The stored vector alone determines (interval, window) from the total
/// weight, u2 from the v2 weight, u1 from the nested chain, and the message
/// from the outer chain. Neither the frozen set nor rho appears.
inline bit_vector strong_decode(const strong_profile& sp, const bit_vector& stored) {
    if (stored.size() != sp.n) raise(errc::dimension_mismatch, "stored length != N");
    const std::uint64_t d = stored.weight() % sp.mod4;
    const auto [interval, window] = unpack_position_code(sp, d);

    const std::size_t v2_begin = static_cast<std::size_t>(interval) * sp.v2_len;
    if (v2_begin + sp.v2_len > sp.n) raise(errc::invalid_position_code, "interval beyond memory");
    const std::size_t v22_begin = v2_begin + static_cast<std::size_t>(window) * sp.len22;

    const std::uint64_t u_val = stored.weight_range(v2_begin, sp.v2_len) % sp.mod2;
    const bit_vector u2 = bit_vector::from_uint(u_val, sp.inner.meta_bits());
    const side_metadata meta2 = side_metadata::parse(sp.inner, u2);

    const bit_vector u1 = decode_with_sidechannel(sp.inner, stored.slice(v22_begin, sp.len22), meta2);
    if (u1.size() != sp.outer.meta_bits())
        raise(errc::malformed_chain, "nested chain recovered " + std::to_string(u1.size()) + " metadata bits, need " +
                                         std::to_string(sp.outer.meta_bits()));
    const side_metadata meta1 = side_metadata::parse(sp.outer, u1);
    return decode_with_sidechannel(sp.outer, stored, meta1);
}

/// Largest message the strong encoder accepts: the best outer-pass capacity
/// over the intervals its retry loop may pick.
inline std::size_t strong_capacity(const strong_profile& sp, const frozen_set& frozen) {
    const bit_vector mask = frozen.to_mask(sp.n);
    std::size_t j;
    std::vector<std::uint32_t> intervals;
    try {
        j = detail::tail_start(sp, mask);
        intervals = detail::valid_intervals(sp, mask, frozen.size(), j);
    } catch (const codec_error&) {
        return 0;
    }
    const std::size_t guard_block = j / sp.outer.b;
    std::size_t best = 0;
    for (std::uint32_t interval : intervals) {
        const partition part = detail::make_partition(sp, interval, j);
        std::vector<std::uint32_t> aug;
        for (std::size_t pos = 0; pos < sp.n; ++pos) {
            const bool in_v2 = pos >= part.v2_begin && pos < part.v2_end;
            const bool in_guard = pos >= guard_block * sp.outer.b && pos < (guard_block + 1) * sp.outer.b;
            const bool in_tail = pos >= j;
            if (in_v2 || in_guard || in_tail || mask.get(pos)) aug.push_back(static_cast<std::uint32_t>(pos));
        }
        best = std::max(best, plan_capacity(sp.outer, frozen_set::from_indices(std::move(aug), sp.n)));
    }
    return best;
}

}  // namespace stuckat
