#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "stuckat/bits.hpp"
#include "stuckat/errors.hpp"
#include "stuckat/gf2_field.hpp"
#include "stuckat/gf2_matrix.hpp"

namespace stuckat {

/// Parameters of the seeded generator g: {0,1}^t -> {0,1}^r whose output is
/// mu-almost k-wise independent. mu is a power of two, mu = 2^mu_log2.
///
/// The inner dimension is h = k*ceil(log2 r). The seed splits into two
/// elements of GF(2^(t/2)); a field of size at least h/mu is required for
/// the k-wise bias to come out below mu (each parity of up to k output bits
/// is <P(x),y> for a nonzero polynomial P of degree < h, so its bias is at
/// most (h-1)/2^(t/2+1)), hence t = 2*ceil(log2(h/mu)).
struct generator_params {
    std::size_t r = 0;
    unsigned k = 0;
    int mu_log2 = 0;
    unsigned h = 0;
    unsigned t = 0;
};

inline generator_params derive_params(std::size_t r, unsigned k, int mu_log2) {
    if (r < 2) raise(errc::bad_argument, "generator output length must be >= 2");
    if (k < 1 || k > r) raise(errc::bad_argument, "independence order must satisfy 1 <= k <= r");
    if (mu_log2 >= 0) raise(errc::bad_argument, "mu must satisfy 0 < mu < 1");
    generator_params p;
    p.r = r;
    p.k = k;
    p.mu_log2 = mu_log2;
    const std::uint64_t h = static_cast<std::uint64_t>(k) * ceil_log2(r);
    if (h > (1u << 30)) raise(errc::parameter_overflow, "inner dimension too large");
    p.h = static_cast<unsigned>(h);
    const unsigned e = static_cast<unsigned>(-mu_log2);
    p.t = 2 * (e + ceil_log2(h));
    if (p.t / 2 > 126) raise(errc::parameter_overflow, "seed length exceeds supported field degree");
    return p;
}

/// r x h generator matrix whose every <=k rows are linearly independent:
/// row j is the binary expansion of (a_j^0, a_j^1, ..., a_j^(k-1)) over
/// GF(2^s), s = ceil(log2 r), with a_j the j-th field element. Any k rows
/// form a Vandermonde system on distinct points, so no nontrivial GF(2)
/// combination of up to k rows vanishes.
///
/// Rows are materialized lazily; codecs usually touch only a prefix.
class dual_distance_code {
public:
    dual_distance_code(std::size_t r, unsigned k)
        : r_(r),
          k_(k),
          s_(ceil_log2(r)),
          stride_((static_cast<std::size_t>(k) * s_ + 63) / 64),
          fs_(static_cast<int>(s_)),
          chunks_((r + chunk_rows - 1) / chunk_rows) {
        if (r < 2) raise(errc::bad_argument, "code length must be >= 2");
        if (k < 1) raise(errc::bad_argument, "dual distance must be >= 1");
    }

    std::size_t length() const noexcept { return r_; }
    unsigned dual_distance() const noexcept { return k_; }
    unsigned inner_bits() const noexcept { return static_cast<unsigned>(k_ * s_); }
    std::size_t stride() const noexcept { return stride_; }

    /// Materialize rows [0, n). Chunk slots are preallocated so concurrent
    /// readers that have already ensured their prefix never observe a move.
    void ensure_rows(std::size_t n) const {
        if (n > r_) raise(errc::bad_argument, "row index beyond code length");
        std::lock_guard<std::mutex> lk(mu_);
        for (std::size_t j = built_; j < n; ++j) {
            auto& chunk = chunks_[j / chunk_rows];
            if (!chunk) chunk = std::make_unique<std::uint64_t[]>(chunk_rows * stride_);
            std::uint64_t* row = chunk.get() + (j % chunk_rows) * stride_;
            std::fill(row, row + stride_, 0);
            const gf2e::elem alpha = static_cast<gf2e::elem>(j);
            gf2e::elem e = 1;
            for (unsigned bl = 0; bl < k_; ++bl) {
                const std::size_t off = static_cast<std::size_t>(bl) * s_;
                const std::uint64_t bits = static_cast<std::uint64_t>(e);
                row[off >> 6] ^= bits << (off & 63u);
                if ((off & 63u) + s_ > 64) row[(off >> 6) + 1] ^= bits >> (64 - (off & 63u));
                e = fs_.mul(e, alpha);
            }
        }
        if (n > built_) built_ = n;
    }

    std::size_t rows_built() const {
        std::lock_guard<std::mutex> lk(mu_);
        return built_;
    }

    /// Valid only for rows already covered by a prior ensure_rows call.
    const std::uint64_t* row(std::size_t j) const {
        return chunks_[j / chunk_rows].get() + (j % chunk_rows) * stride_;
    }

    /// Full matrix for tests and direct inspection.
    gf2_matrix matrix() const {
        ensure_rows(r_);
        gf2_matrix m(r_, inner_bits());
        for (std::size_t j = 0; j < r_; ++j) {
            const std::uint64_t* rj = row(j);
            for (unsigned c = 0; c < inner_bits(); ++c) m.set(j, c, (rj[c >> 6] >> (c & 63u)) & 1u);
        }
        return m;
    }

private:
    static constexpr std::size_t chunk_rows = 4096;

    std::size_t r_;
    unsigned k_, s_;
    std::size_t stride_;
    gf2e::field fs_;
    mutable std::mutex mu_;
    mutable std::vector<std::unique_ptr<std::uint64_t[]>> chunks_;
    mutable std::size_t built_ = 0;
};

struct dual_distance_matrix {
    gf2_matrix matrix;
    unsigned guaranteed_dual_distance;
};

inline dual_distance_matrix build_dual_distance_matrix(std::size_t r, unsigned k) {
    dual_distance_code code(r, k);
    return {code.matrix(), k};
}

inline gf2e::elem field_elem_from_bits(const bit_vector& bits, std::size_t pos, unsigned w) {
    gf2e::elem x = 0;
    for (unsigned i = 0; i < w; ++i) x = (x << 1) | static_cast<unsigned>(bits.get(pos + i));
    return x;
}

/// Incremental evaluation of g(seed): the h inner-product bits are fixed by
/// the seed, output bits are produced on demand as <row_j, b>.
class seed_expander {
public:
    seed_expander(const generator_params& params, const dual_distance_code& code, const bit_vector& seed)
        : params_(params), code_(&code) {
        if (seed.size() != params.t) raise(errc::dimension_mismatch, "seed length != t");
        if (code.length() != params.r || code.inner_bits() != params.h)
            raise(errc::dimension_mismatch, "code does not match generator params");
        const unsigned w = params.t / 2;
        const gf2e::elem x = field_elem_from_bits(seed, 0, w);
        const gf2e::elem y = field_elem_from_bits(seed, w, w);
        gf2e::field f(static_cast<int>(w));
        b_.assign(code.stride(), 0);
        gf2e::elem cur = 1;  // x^0, also for x = 0
        for (unsigned i = 0; i < params.h; ++i) {
            if (gf2e::parity(cur & y)) b_[i >> 6] |= 1ull << (i & 63u);
            cur = f.mul(cur, x);
        }
        out_ = bit_vector(0);
    }

    /// Output bits [0, nbits), extending the cached prefix as needed.
    const bit_vector& prefix(std::size_t nbits) {
        if (nbits > params_.r) raise(errc::bad_argument, "prefix beyond generator output length");
        if (out_.size() >= nbits) return out_;
        code_->ensure_rows(nbits);
        for (std::size_t j = out_.size(); j < nbits; ++j) {
            const std::uint64_t* row = code_->row(j);
            std::uint64_t acc = 0;
            for (std::size_t i = 0; i < b_.size(); ++i) acc ^= row[i] & b_[i];
            out_.append_bit(std::popcount(acc) & 1u);
        }
        return out_;
    }

    bit_vector slice(std::size_t pos, std::size_t len) { return prefix(pos + len).slice(pos, len); }

private:
    generator_params params_;
    const dual_distance_code* code_;
    std::vector<std::uint64_t> b_;
    bit_vector out_;
};

inline bit_vector expand_seed(const generator_params& params, const dual_distance_code& code, const bit_vector& seed) {
    seed_expander ex(params, code, seed);
    return ex.prefix(params.r);
}

inline bit_vector expand_seed_prefix(const generator_params& params, const dual_distance_code& code,
                                     const bit_vector& seed, std::size_t nbits) {
    seed_expander ex(params, code, seed);
    return ex.prefix(nbits);
}

}  // namespace stuckat
