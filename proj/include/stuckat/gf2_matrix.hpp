#pragma once

#include <bit>
#include <cstdint>
#include <cstddef>
#include <utility>
#include <vector>

#include "stuckat/bits.hpp"
#include "stuckat/errors.hpp"

namespace stuckat {

/// Dense GF(2) matrix, one row per contiguous word run.
class gf2_matrix {
public:
    gf2_matrix() = default;

    gf2_matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), stride_((cols + 63) / 64), w_(rows * stride_, 0) {}

    /// Row-major fill from a flat bit string (bit r*cols+c -> entry (r,c)).
    static gf2_matrix from_bits(std::size_t rows, std::size_t cols, const bit_vector& bits) {
        if (bits.size() != rows * cols) raise(errc::dimension_mismatch, "bit count != rows*cols");
        gf2_matrix a(rows, cols);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) a.set(r, c, bits.get(r * cols + c));
        return a;
    }

    static gf2_matrix identity(std::size_t n) {
        gf2_matrix a(n, n);
        for (std::size_t i = 0; i < n; ++i) a.set(i, i, true);
        return a;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    bool get(std::size_t r, std::size_t c) const { return (row(r)[c >> 6] >> (c & 63u)) & 1u; }

    void set(std::size_t r, std::size_t c, bool v) {
        const std::uint64_t m = 1ull << (c & 63u);
        if (v)
            row(r)[c >> 6] |= m;
        else
            row(r)[c >> 6] &= ~m;
    }

    std::uint64_t* row(std::size_t r) { return w_.data() + r * stride_; }
    const std::uint64_t* row(std::size_t r) const { return w_.data() + r * stride_; }
    std::size_t stride() const noexcept { return stride_; }

    void xor_row(std::size_t dst, std::size_t src) {
        std::uint64_t* d = row(dst);
        const std::uint64_t* s = row(src);
        for (std::size_t i = 0; i < stride_; ++i) d[i] ^= s[i];
    }

    void swap_rows(std::size_t a, std::size_t b) {
        if (a == b) return;
        std::uint64_t* x = row(a);
        std::uint64_t* y = row(b);
        for (std::size_t i = 0; i < stride_; ++i) std::swap(x[i], y[i]);
    }

    gf2_matrix select_columns(const std::vector<std::uint32_t>& cols) const {
        gf2_matrix out(rows_, cols.size());
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols.size(); ++c) out.set(r, c, get(r, cols[c]));
        return out;
    }

    gf2_matrix transposed() const {
        gf2_matrix out(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) out.set(c, r, get(r, c));
        return out;
    }

    friend bool operator==(const gf2_matrix& a, const gf2_matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.w_ == b.w_;
    }

private:
    std::size_t rows_ = 0, cols_ = 0, stride_ = 0;
    std::vector<std::uint64_t> w_;
};

/// GF(2) row rank by forward elimination.
inline std::size_t rank(gf2_matrix a) {
    std::size_t r = 0;
    for (std::size_t c = 0; c < a.cols() && r < a.rows(); ++c) {
        std::size_t piv = r;
        while (piv < a.rows() && !a.get(piv, c)) ++piv;
        if (piv == a.rows()) continue;
        a.swap_rows(r, piv);
        for (std::size_t i = 0; i < a.rows(); ++i)
            if (i != r && a.get(i, c)) a.xor_row(i, r);
        ++r;
    }
    return r;
}

inline bit_vector mat_vec_mul(const gf2_matrix& a, const bit_vector& v) {
    if (v.size() != a.cols()) raise(errc::dimension_mismatch, "vector length != matrix cols");
    bit_vector out(a.rows());
    const std::size_t nw = std::min<std::size_t>(a.stride(), v.word_count());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const std::uint64_t* row = a.row(r);
        std::uint64_t acc = 0;
        for (std::size_t i = 0; i < nw; ++i) acc ^= row[i] & v.words()[i];
        out.set(r, std::popcount(acc) & 1u);
    }
    return out;
}

/// One fixed-column constraint: w[column] must equal `value`.
struct fixed_bit {
    std::uint32_t column;
    bool value;
};

struct constrained_solution {
    bit_vector w;         ///< solution over all columns
    bool full_row_rank;   ///< restricted-to-free-columns matrix has rank == rows
    bool solvable;
};

/// Solve A*w = target over GF(2) subject to w[c] = value for each fixed column.
/// Free variables that are not pivots are set to 0, which pins a unique,
/// reproducible solution. When the system is inconsistent, `solvable` is
/// false and `w` is empty.
inline constrained_solution solve_constrained_detail(const gf2_matrix& a, const std::vector<fixed_bit>& fixed,
                                                     const bit_vector& target) {
    if (target.size() != a.rows()) raise(errc::dimension_mismatch, "target length != rows");
    std::vector<char> is_fixed(a.cols(), 0);
    std::vector<char> fixed_val(a.cols(), 0);
    for (const auto& f : fixed) {
        if (f.column >= a.cols()) raise(errc::bad_argument, "fixed column out of range");
        is_fixed[f.column] = 1;
        fixed_val[f.column] = f.value;
    }

    std::vector<std::uint32_t> free_cols;
    free_cols.reserve(a.cols());
    for (std::uint32_t c = 0; c < a.cols(); ++c)
        if (!is_fixed[c]) free_cols.push_back(c);

    // Residual target after moving fixed columns to the right-hand side.
    bit_vector rhs = target;
    for (std::size_t r = 0; r < a.rows(); ++r) {
        bool acc = rhs.get(r);
        for (const auto& f : fixed)
            if (f.value && a.get(r, f.column)) acc = !acc;
        rhs.set(r, acc);
    }

    // Augmented elimination over the free columns.
    gf2_matrix m(a.rows(), free_cols.size() + 1);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < free_cols.size(); ++c) m.set(r, c, a.get(r, free_cols[c]));
        m.set(r, free_cols.size(), rhs.get(r));
    }

    std::vector<std::int64_t> pivot_of_row(a.rows(), -1);
    std::size_t rr = 0;
    for (std::size_t c = 0; c < free_cols.size() && rr < a.rows(); ++c) {
        std::size_t piv = rr;
        while (piv < a.rows() && !m.get(piv, c)) ++piv;
        if (piv == a.rows()) continue;
        m.swap_rows(rr, piv);
        for (std::size_t i = 0; i < a.rows(); ++i)
            if (i != rr && m.get(i, c)) m.xor_row(i, rr);
        pivot_of_row[rr] = static_cast<std::int64_t>(c);
        ++rr;
    }

    constrained_solution out;
    out.full_row_rank = (rr == a.rows());
    out.solvable = true;
    for (std::size_t r = rr; r < a.rows(); ++r)
        if (m.get(r, free_cols.size())) out.solvable = false;
    if (!out.solvable) return out;

    out.w = bit_vector(a.cols());
    for (const auto& f : fixed) out.w.set(f.column, f.value);
    for (std::size_t r = 0; r < rr; ++r)
        if (m.get(r, free_cols.size())) out.w.set(free_cols[static_cast<std::size_t>(pivot_of_row[r])], true);
    return out;
}

/// Spec-facing wrapper: throws RankDeficient only when no solution exists.
inline bit_vector solve_constrained(const gf2_matrix& a, const std::vector<fixed_bit>& fixed,
                                    const bit_vector& target) {
    constrained_solution s = solve_constrained_detail(a, fixed, target);
    if (!s.solvable) raise(errc::rank_deficient, "constrained system has no solution");
    return s.w;
}

}  // namespace stuckat
