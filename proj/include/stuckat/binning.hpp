#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stuckat/bits.hpp"
#include "stuckat/block_codec.hpp"
#include "stuckat/errors.hpp"

namespace stuckat {

struct bin_label {
    unsigned level = 0;       // i in [1, L]
    std::uint64_t msg = 0;    // (n/(l+1))*i bits

    friend bool operator==(const bin_label&, const bin_label&) = default;
};

/// Random assignment of {0,1}^N into labeled bins B_{i,m}: every vector gets
/// level i uniform over [L] and a uniform message of (N/(L+1))*i bits, so
/// Pr[label = (i,m)] = 1 / (L * 2^((N/(L+1))*i)). Materialized in full; this
/// is a desk-scale ground-truth oracle, not a usable code.
class bin_table {
public:
    static bin_table build(unsigned n, unsigned l, std::uint64_t rng_seed) {
        if (n > 20) raise(errc::bad_argument, "bin table limited to N <= 20");
        if (l < 1 || (n % (l + 1)) != 0) raise(errc::bad_argument, "need L >= 1 and (L+1) | N");
        bin_table t;
        t.n_ = n;
        t.l_ = l;
        t.chunk_ = n / (l + 1);
        t.seed_ = rng_seed;
        t.labels_.resize(std::size_t{1} << n);
        std::mt19937_64 rng(rng_seed);
        for (auto& packed : t.labels_) {
            const unsigned level = static_cast<unsigned>(rng() % l) + 1;
            const unsigned width = t.chunk_ * level;
            const std::uint64_t msg = rng() & ((width < 64 ? (1ull << width) : 0ull) - 1);
            packed = (msg << 5) | level;
        }
        return t;
    }

    unsigned n() const noexcept { return n_; }
    unsigned l() const noexcept { return l_; }
    unsigned chunk() const noexcept { return chunk_; }
    std::uint64_t rng_seed() const noexcept { return seed_; }

    bin_label label_of(std::uint32_t vec) const {
        const std::uint64_t packed = labels_[vec];
        return {static_cast<unsigned>(packed & 31u), packed >> 5};
    }

    /// Lexicographically smallest u with label (level, msg) agreeing with the
    /// cover on the frozen positions.
    bit_vector encode(const memory_image& image, unsigned level, const bit_vector& msg) const {
        if (image.cover.size() != n_) raise(errc::dimension_mismatch, "cover length != N");
        if (level < 1 || level > l_) raise(errc::bad_argument, "level out of range");
        if (msg.size() != static_cast<std::size_t>(chunk_) * level)
            raise(errc::bad_argument, "message length != (N/(L+1))*level");
        const bin_label want{level, msg.to_uint()};

        std::vector<std::uint32_t> free_pos;
        std::uint32_t base = 0;
        for (unsigned i = 0; i < n_; ++i) {
            const std::uint32_t bit = 1u << (n_ - 1 - i);  // MSB-first value of position i
            if (image.frozen.contains(i)) {
                if (image.cover.get(i)) base |= bit;
            } else {
                free_pos.push_back(bit);
            }
        }
        const std::size_t nf = free_pos.size();
        for (std::uint64_t c = 0; c < (std::uint64_t{1} << nf); ++c) {
            std::uint32_t u = base;
            for (std::size_t i = 0; i < nf; ++i)
                if ((c >> (nf - 1 - i)) & 1u) u |= free_pos[i];
            if (label_of(u) == want) return bit_vector::from_uint(u, n_);
        }
        raise(errc::not_encodable, "no vector in bin (" + std::to_string(level) + ", ...) matches the frozen pattern");
    }

    std::pair<unsigned, bit_vector> decode(const bit_vector& stored) const {
        if (stored.size() != n_) raise(errc::dimension_mismatch, "stored length != N");
        const bin_label lab = label_of(static_cast<std::uint32_t>(stored.to_uint()));
        return {lab.level, bit_vector::from_uint(lab.msg, chunk_ * lab.level)};
    }

    /// Largest level j with (1-rho)*N >= j*N/(L+1) + eps*N/2, the level the
    /// encoder of the existential construction would pick.
    static unsigned pick_level(unsigned n, unsigned l, double rho, double eps) {
        const double writable = (1.0 - rho) * n;
        unsigned best = 0;
        for (unsigned jv = 1; jv <= l; ++jv)
            if (writable >= static_cast<double>(jv) * n / (l + 1) + eps * n / 2.0) best = jv;
        if (best == 0) raise(errc::bad_argument, "no level fits this defect fraction");
        return best;
    }

private:
    unsigned n_ = 0, l_ = 0, chunk_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<std::uint64_t> labels_;
};

inline bin_table build_bin_table(unsigned n, unsigned l, std::uint64_t rng_seed) {
    return bin_table::build(n, l, rng_seed);
}

}  // namespace stuckat
