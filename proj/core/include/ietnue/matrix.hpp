// Dense square matrices over exact integers, with the few exact-linear-algebra
// operations the construction needs: products, column access, determinants,
// and rational linear solves. Dimensions stay tiny (2 or 4); entries grow huge.
#pragma once

#include <string>
#include <vector>

#include "ietnue/rational.hpp"

namespace ietnue {

class Matrix {
public:
    explicit Matrix(int dim) : dim_(dim), a_(static_cast<std::size_t>(dim) * dim, BigInt(0)) {
        if (dim <= 0) throw DomainError("Matrix: dimension must be positive");
    }

    static Matrix identity(int dim) {
        Matrix m(dim);
        for (int i = 0; i < dim; ++i) m.at(i, i) = 1;
        return m;
    }

    /// I + E_{ij} (0-based), the elementary transvection.
    static Matrix elementary(int dim, int i, int j) {
        Matrix m = identity(dim);
        m.at(i, j) += 1;
        return m;
    }

    /// Build from rows; validates squareness.
    static Matrix from_rows(const std::vector<std::vector<long>>& rows) {
        const int d = static_cast<int>(rows.size());
        Matrix m(d);
        for (int i = 0; i < d; ++i) {
            if (static_cast<int>(rows[i].size()) != d)
                throw DomainError("Matrix: ragged rows");
            for (int j = 0; j < d; ++j) m.at(i, j) = rows[i][j];
        }
        return m;
    }

    int dim() const { return dim_; }
    BigInt& at(int i, int j) { return a_[static_cast<std::size_t>(i) * dim_ + j]; }
    const BigInt& at(int i, int j) const { return a_[static_cast<std::size_t>(i) * dim_ + j]; }

    std::vector<BigInt> column(int j) const {
        std::vector<BigInt> c(dim_);
        for (int i = 0; i < dim_; ++i) c[i] = at(i, j);
        return c;
    }

    BigInt column_sum(int j) const {
        BigInt s = 0;
        for (int i = 0; i < dim_; ++i) s += at(i, j);
        return s;
    }

    bool operator==(const Matrix& o) const { return dim_ == o.dim_ && a_ == o.a_; }

    Matrix operator*(const Matrix& o) const {
        if (dim_ != o.dim_) throw DomainError("Matrix: dimension mismatch");
        Matrix out(dim_);
        for (int i = 0; i < dim_; ++i)
            for (int k = 0; k < dim_; ++k) {
                const BigInt& aik = at(i, k);
                if (aik == 0) continue;
                for (int j = 0; j < dim_; ++j) out.at(i, j) += aik * o.at(k, j);
            }
        return out;
    }

    std::vector<BigInt> operator*(const std::vector<BigInt>& v) const;
    std::vector<Rational> operator*(const std::vector<Rational>& v) const;

    /// Exact determinant (fraction-free Bareiss elimination).
    BigInt determinant() const;

    /// Max absolute entry; the operator norm surrogate used throughout.
    BigInt max_abs_entry() const;

    bool is_nonnegative() const;

    /// "a b / c d" style one-line rendering for logs and error messages.
    std::string to_string() const;

private:
    int dim_;
    std::vector<BigInt> a_; // row-major
};

/// Solve M u = v exactly over the rationals. Throws CheckError if M is
/// singular. Used to run an induction chain backwards (refining a length
/// vector into the coordinates of a deeper stage).
std::vector<Rational> solve_exact(const Matrix& m, const std::vector<Rational>& v);

/// Rectangular selections must be square here: picks rows[i], cols[j].
Matrix submatrix(const Matrix& m, const std::vector<int>& rows, const std::vector<int>& cols);

} // namespace ietnue
