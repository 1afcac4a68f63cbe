#include "ietnue/matrix.hpp"

#include <sstream>

namespace ietnue {

std::vector<BigInt> Matrix::operator*(const std::vector<BigInt>& v) const {
    if (static_cast<int>(v.size()) != dim_) throw DomainError("Matrix*vec: size mismatch");
    std::vector<BigInt> out(dim_, BigInt(0));
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
            if (at(i, j) != 0) out[i] += at(i, j) * v[j];
    return out;
}

std::vector<Rational> Matrix::operator*(const std::vector<Rational>& v) const {
    if (static_cast<int>(v.size()) != dim_) throw DomainError("Matrix*vec: size mismatch");
    std::vector<Rational> out(dim_, Rational(0));
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
            if (at(i, j) != 0) out[i] += Rational(at(i, j)) * v[j];
    return out;
}

BigInt Matrix::determinant() const {
    // Fraction-free Bareiss elimination: all divisions are exact.
    Matrix work(*this);
    const int n = dim_;
    BigInt prev = 1;
    int sign = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (work.at(k, k) == 0) {
            int pivot = -1;
            for (int i = k + 1; i < n; ++i)
                if (work.at(i, k) != 0) { pivot = i; break; }
            if (pivot < 0) return 0;
            for (int j = 0; j < n; ++j) std::swap(work.at(k, j), work.at(pivot, j));
            sign = -sign;
        }
        for (int i = k + 1; i < n; ++i) {
            for (int j = k + 1; j < n; ++j) {
                BigInt num = work.at(i, j) * work.at(k, k) - work.at(i, k) * work.at(k, j);
                mpz_divexact(work.at(i, j).get_mpz_t(), num.get_mpz_t(), prev.get_mpz_t());
            }
            work.at(i, k) = 0;
        }
        prev = work.at(k, k);
    }
    return sign > 0 ? work.at(n - 1, n - 1) : BigInt(-work.at(n - 1, n - 1));
}

BigInt Matrix::max_abs_entry() const {
    BigInt best = 0;
    for (const BigInt& x : a_) {
        BigInt v = x >= 0 ? x : BigInt(-x);
        if (v > best) best = v;
    }
    return best;
}

bool Matrix::is_nonnegative() const {
    for (const BigInt& x : a_)
        if (x < 0) return false;
    return true;
}

std::string Matrix::to_string() const {
    std::ostringstream out;
    for (int i = 0; i < dim_; ++i) {
        if (i) out << " / ";
        for (int j = 0; j < dim_; ++j) {
            if (j) out << ' ';
            out << at(i, j).get_str();
        }
    }
    return out.str();
}

Matrix submatrix(const Matrix& m, const std::vector<int>& rows, const std::vector<int>& cols) {
    if (rows.size() != cols.size() || rows.empty())
        throw DomainError("submatrix: selection must be square and nonempty");
    Matrix out(static_cast<int>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (rows[i] < 0 || rows[i] >= m.dim() || cols[j] < 0 || cols[j] >= m.dim())
                throw DomainError("submatrix: index out of range");
            out.at(static_cast<int>(i), static_cast<int>(j)) = m.at(rows[i], cols[j]);
        }
    return out;
}

std::vector<Rational> solve_exact(const Matrix& m, const std::vector<Rational>& v) {
    const int n = m.dim();
    if (static_cast<int>(v.size()) != n) throw DomainError("solve_exact: size mismatch");
    // Rational Gaussian elimination with partial (first-nonzero) pivoting.
    std::vector<std::vector<Rational>> aug(n, std::vector<Rational>(n + 1));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) aug[i][j] = Rational(m.at(i, j));
        aug[i][n] = v[i];
    }
    for (int k = 0; k < n; ++k) {
        int pivot = -1;
        for (int i = k; i < n; ++i)
            if (aug[i][k] != 0) { pivot = i; break; }
        if (pivot < 0) throw CheckError("solve_exact: singular matrix");
        std::swap(aug[k], aug[pivot]);
        for (int i = k + 1; i < n; ++i) {
            if (aug[i][k] == 0) continue;
            const Rational f = aug[i][k] / aug[k][k];
            for (int j = k; j <= n; ++j) aug[i][j] -= f * aug[k][j];
        }
    }
    std::vector<Rational> x(n);
    for (int i = n - 1; i >= 0; --i) {
        Rational s = aug[i][n];
        for (int j = i + 1; j < n; ++j) s -= aug[i][j] * x[j];
        x[i] = s / aug[i][i];
    }
    return x;
}

} // namespace ietnue
