#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <mutex>

#include "stuckat/errors.hpp"

namespace stuckat::gf2e {

using elem = unsigned __int128;

inline int degree(elem a) {
    if (a == 0) return -1;
    const std::uint64_t hi = static_cast<std::uint64_t>(a >> 64);
    if (hi) return 64 + (63 - std::countl_zero(hi));
    return 63 - std::countl_zero(static_cast<std::uint64_t>(a));
}

inline bool parity(elem a) {
    return (std::popcount(static_cast<std::uint64_t>(a)) + std::popcount(static_cast<std::uint64_t>(a >> 64))) & 1;
}

/// 256-bit carryless product as four 64-bit limbs, limb 0 lowest.
using wide = std::array<std::uint64_t, 4>;

inline elem clmul64(std::uint64_t a, std::uint64_t b) {
    elem r = 0;
    while (b) {
        const int i = std::countr_zero(b);
        r ^= static_cast<elem>(a) << i;
        b &= b - 1;
    }
    return r;
}

inline wide clmul(elem a, elem b) {
    const std::uint64_t a0 = static_cast<std::uint64_t>(a), a1 = static_cast<std::uint64_t>(a >> 64);
    const std::uint64_t b0 = static_cast<std::uint64_t>(b), b1 = static_cast<std::uint64_t>(b >> 64);
    const elem ll = clmul64(a0, b0);
    const elem lh = clmul64(a0, b1) ^ clmul64(a1, b0);
    const elem hh = clmul64(a1, b1);
    wide w{};
    w[0] = static_cast<std::uint64_t>(ll);
    w[1] = static_cast<std::uint64_t>(ll >> 64) ^ static_cast<std::uint64_t>(lh);
    w[2] = static_cast<std::uint64_t>(lh >> 64) ^ static_cast<std::uint64_t>(hh);
    w[3] = static_cast<std::uint64_t>(hh >> 64);
    return w;
}

inline bool wide_bit(const wide& w, int i) { return (w[i >> 6] >> (i & 63)) & 1u; }

inline void wide_xor_shifted(wide& w, elem f, int shift) {
    const int limb = shift >> 6, off = shift & 63;
    std::uint64_t parts[3];
    parts[0] = static_cast<std::uint64_t>(f) << off;
    parts[1] = off ? static_cast<std::uint64_t>(f >> (64 - off)) : static_cast<std::uint64_t>(f >> 64);
    parts[2] = off ? static_cast<std::uint64_t>(f >> (128 - off)) : 0;
    for (int i = 0; i < 3; ++i)
        if (limb + i < 4) w[limb + i] ^= parts[i];
}

/// Reduce a carryless product modulo f (deg f = w, w <= 126).
inline elem reduce(wide p, elem f, int w) {
    int top = -1;
    for (int limb = 3; limb >= 0 && top < 0; --limb)
        if (p[limb]) top = 64 * limb + 63 - std::countl_zero(p[limb]);
    for (int i = top; i >= w; --i)
        if (wide_bit(p, i)) wide_xor_shifted(p, f, i - w);
    return static_cast<elem>(p[0]) | (static_cast<elem>(p[1]) << 64);
}

inline elem poly_mulmod(elem a, elem b, elem f, int w) { return reduce(clmul(a, b), f, w); }

inline elem poly_mod(elem a, elem b) {
    const int db = degree(b);
    int da = degree(a);
    while (da >= db) {
        a ^= b << (da - db);
        da = degree(a);
    }
    return a;
}

inline elem poly_gcd(elem a, elem b) {
    while (b != 0) {
        elem t = poly_mod(a, b);
        a = b;
        b = t;
    }
    return a;
}

/// Rabin irreducibility test for a degree-w binary polynomial.
inline bool is_irreducible(elem f, int w) {
    if (w == 1) return true;
    const elem x = 2;
    // x^(2^w) == x (mod f)
    elem cur = x;
    for (int i = 0; i < w; ++i) cur = poly_mulmod(cur, cur, f, w);
    if (cur != x) return false;
    auto coprime_at = [&](int p) {
        elem c = x;
        for (int i = 0; i < w / p; ++i) c = poly_mulmod(c, c, f, w);
        return poly_gcd(c ^ x, f) == 1;
    };
    int n = w;
    for (int p = 2; p * p <= n; ++p) {
        if (n % p) continue;
        if (!coprime_at(p)) return false;
        while (n % p == 0) n /= p;
    }
    if (n > 1 && !coprime_at(n)) return false;
    return true;
}

/// Lexicographically least irreducible polynomial of degree w, i.e. the one
/// whose below-leading coefficient string has the smallest integer value.
/// Both sides of a codec derive the same field from the degree alone.
inline elem least_irreducible(int w) {
    if (w < 1 || w > 126) raise(errc::parameter_overflow, "field degree out of supported range [1,126]");
    static std::map<int, elem> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(w);
    if (it != cache.end()) return it->second;
    for (elem c = 1;; c += 2) {  // constant term must be 1
        const elem f = (static_cast<elem>(1) << w) | c;
        if (is_irreducible(f, w)) {
            cache[w] = f;
            return f;
        }
    }
}

/// GF(2^w) with the library's fixed modulus for that degree.
class field {
public:
    explicit field(int w) : w_(w), f_(least_irreducible(w)) {}

    int degree_bits() const noexcept { return w_; }
    elem modulus() const noexcept { return f_; }

    elem mul(elem a, elem b) const { return poly_mulmod(a, b, f_, w_); }

private:
    int w_;
    elem f_;
};

}  // namespace stuckat::gf2e
