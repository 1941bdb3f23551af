#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "stuckat/errors.hpp"

namespace stuckat {

/// Dynamically sized bit string. Bit 0 is the *first* bit of the string;
/// all integer <-> bit-string conversions are most-significant-bit first,
/// so a vector compares lexicographically the way its MSB-first integer
/// value compares numerically.
class bit_vector {
public:
    bit_vector() = default;

    explicit bit_vector(std::size_t n, bool fill = false) : size_(n), words_(word_count(n), fill ? ~0ull : 0ull) {
        trim();
    }

    static bit_vector from_string(std::string_view s) {
        bit_vector v(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '1')
                v.set(i, true);
            else if (s[i] != '0')
                raise(errc::bad_format, "bit string may contain only 0/1");
        }
        return v;
    }

    /// MSB-first integer of `width` bits.
    static bit_vector from_uint(std::uint64_t value, unsigned width) {
        bit_vector v(width);
        for (unsigned i = 0; i < width; ++i) v.set(i, (value >> (width - 1 - i)) & 1u);
        return v;
    }

    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }

    bool get(std::size_t i) const { return (words_[i >> 6] >> (i & 63u)) & 1u; }

    void set(std::size_t i, bool v) {
        const std::uint64_t m = 1ull << (i & 63u);
        if (v)
            words_[i >> 6] |= m;
        else
            words_[i >> 6] &= ~m;
    }

    void flip(std::size_t i) { words_[i >> 6] ^= 1ull << (i & 63u); }

    std::size_t weight() const noexcept {
        std::size_t w = 0;
        for (std::uint64_t x : words_) w += static_cast<std::size_t>(std::popcount(x));
        return w;
    }

    void append_bit(bool v) {
        if ((size_ & 63u) == 0) words_.push_back(0);
        if (v) words_[size_ >> 6] |= 1ull << (size_ & 63u);
        ++size_;
    }

    void append(const bit_vector& other) {
        for (std::size_t i = 0; i < other.size_; ++i) append_bit(other.get(i));
    }

    /// Append `width` bits of `value`, MSB first.
    void append_uint(std::uint64_t value, unsigned width) {
        for (unsigned i = 0; i < width; ++i) append_bit((value >> (width - 1 - i)) & 1u);
    }

    /// Read `width` bits starting at `pos`, MSB first.
    std::uint64_t read_uint(std::size_t pos, unsigned width) const {
        std::uint64_t v = 0;
        for (unsigned i = 0; i < width; ++i) v = (v << 1) | static_cast<std::uint64_t>(get(pos + i));
        return v;
    }

    /// Whole vector as an MSB-first integer (size() must be <= 64).
    std::uint64_t to_uint() const {
        if (size_ > 64) raise(errc::parameter_overflow, "bit string too long for a 64-bit value");
        return read_uint(0, static_cast<unsigned>(size_));
    }

    bit_vector slice(std::size_t pos, std::size_t len) const {
        bit_vector out(len);
        for (std::size_t i = 0; i < len; ++i) out.set(i, get(pos + i));
        return out;
    }

    /// Overwrite [pos, pos+v.size()) with v.
    void splice(std::size_t pos, const bit_vector& v) {
        for (std::size_t i = 0; i < v.size(); ++i) set(pos + i, v.get(i));
    }

    std::size_t weight_range(std::size_t pos, std::size_t len) const {
        std::size_t w = 0;
        for (std::size_t i = pos; i < pos + len; ++i) w += get(i);
        return w;
    }

    std::string to_string() const {
        std::string s(size_, '0');
        for (std::size_t i = 0; i < size_; ++i)
            if (get(i)) s[i] = '1';
        return s;
    }

    friend bool operator==(const bit_vector& a, const bit_vector& b) {
        return a.size_ == b.size_ && a.words_ == b.words_;
    }

    friend bit_vector operator+(const bit_vector& a, const bit_vector& b) {
        bit_vector out = a;
        out.append(b);
        return out;
    }

    std::size_t hamming_distance(const bit_vector& other) const {
        std::size_t d = 0;
        for (std::size_t i = 0; i < words_.size(); ++i)
            d += static_cast<std::size_t>(std::popcount(words_[i] ^ other.words_[i]));
        return d;
    }

    const std::uint64_t* words() const noexcept { return words_.data(); }
    std::size_t word_count() const noexcept { return words_.size(); }

private:
    static std::size_t word_count(std::size_t bits) { return (bits + 63) / 64; }

    void trim() {
        if (size_ & 63u) words_.back() &= (1ull << (size_ & 63u)) - 1;
    }

    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

inline std::size_t weight(const bit_vector& v) { return v.weight(); }

/// Set of unwritable positions, stored 0-based and strictly increasing.
/// File formats and documentation use 1-based positions to match the usual
/// [N] index convention; the conversion happens at the I/O boundary.
class frozen_set {
public:
    frozen_set() = default;

    static frozen_set from_indices(std::vector<std::uint32_t> idx, std::size_t n) {
        std::sort(idx.begin(), idx.end());
        if (std::adjacent_find(idx.begin(), idx.end()) != idx.end())
            raise(errc::bad_argument, "duplicate frozen index");
        if (!idx.empty() && idx.back() >= n) raise(errc::bad_argument, "frozen index out of range");
        frozen_set f;
        f.idx_ = std::move(idx);
        return f;
    }

    std::size_t size() const noexcept { return idx_.size(); }
    const std::vector<std::uint32_t>& indices() const noexcept { return idx_; }

    bool contains(std::uint32_t i) const { return std::binary_search(idx_.begin(), idx_.end(), i); }

    /// 1 where frozen.
    bit_vector to_mask(std::size_t n) const {
        bit_vector m(n);
        for (std::uint32_t i : idx_) m.set(i, true);
        return m;
    }

private:
    std::vector<std::uint32_t> idx_;
};

/// Flip at most d writable bits of v so that weight(result) == x (mod d).
/// `frozen_mask` has 1 on positions that may not change. Deterministic rule:
/// the majority value among writable positions is flipped (ties go to 1),
/// lowest indices first; flipping r zeros raises the weight by r, flipping
/// r ones lowers it by r. With 2d writable positions the majority side can
/// always absorb the at most d-1 flips; below that the minority side is
/// tried as a fallback before giving up.
inline bit_vector flip_to_residue(const bit_vector& v, const bit_vector& frozen_mask, std::uint64_t d,
                                  std::uint64_t x) {
    if (d == 0 || x >= d) raise(errc::bad_argument, "residue must satisfy x < d");
    if (frozen_mask.size() != v.size()) raise(errc::dimension_mismatch, "mask length mismatch");

    std::size_t free_total = 0, free_ones = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (frozen_mask.get(i)) continue;
        ++free_total;
        free_ones += v.get(i);
    }
    const std::size_t free_zeros = free_total - free_ones;

    const std::uint64_t y = v.weight() % d;
    const std::uint64_t need_ones = (y + d - x) % d;   // flips of 1s lower the weight
    const std::uint64_t need_zeros = (x + d - y) % d;  // flips of 0s raise it

    bool flip_ones = free_ones >= free_zeros;
    if (flip_ones && need_ones > free_ones) flip_ones = false;
    if (!flip_ones && need_zeros > free_zeros) {
        if (need_ones <= free_ones)
            flip_ones = true;
        else
            raise(errc::insufficient_unfrozen,
                  "cannot reach the residue with " + std::to_string(free_total) + " unfrozen positions");
    }
    const std::uint64_t need = flip_ones ? need_ones : need_zeros;

    bit_vector out = v;
    std::uint64_t done = 0;
    for (std::size_t i = 0; i < v.size() && done < need; ++i) {
        if (frozen_mask.get(i)) continue;
        if (v.get(i) == flip_ones) {
            out.flip(i);
            ++done;
        }
    }
    return out;
}

inline bit_vector flip_to_residue(const bit_vector& v, const frozen_set& frozen, std::uint64_t d, std::uint64_t x) {
    return flip_to_residue(v, frozen.to_mask(v.size()), d, x);
}

inline unsigned ceil_log2(std::uint64_t x) {
    if (x <= 1) return 0;
    return static_cast<unsigned>(std::bit_width(x - 1));
}

inline unsigned floor_log2(std::uint64_t x) { return static_cast<unsigned>(std::bit_width(x)) - 1; }

}  // namespace stuckat
