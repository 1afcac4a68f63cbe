// Nonnegative unimodular 2x2 matrices as words in the two shears
//   L = [[1,0],[1,1]]   (lower),   U = [[1,1],[0,1]]   (upper).
// Every nonnegative determinant-1 matrix is a unique such word (Stern-Brocot);
// the decomposition, balance predicates, and column-angle formulas here drive
// the block construction and the growth counting.
#pragma once

#include <vector>

#include "ietnue/matrix.hpp"
#include "ietnue/rational.hpp"

namespace ietnue {

enum class Shear { Lower, Upper };

Matrix shear_lower();                    // [[1,0],[1,1]]
Matrix shear_upper();                    // [[1,1],[0,1]]
Matrix shear_lower_pow(const BigInt& n); // [[1,0],[n,1]]
Matrix shear_upper_pow(const BigInt& n); // [[1,n],[0,1]]

/// Alternating word first^{e0} * other^{e1} * ...; all exponents >= 1.
struct ShearWord {
    Shear first = Shear::Lower;
    std::vector<BigInt> exponents;

    Shear generator_at(std::size_t i) const {
        const bool even = (i % 2 == 0);
        return even == (first == Shear::Lower) ? Shear::Lower : Shear::Upper;
    }
    bool operator==(const ShearWord&) const = default;
};

/// Unique shear word of a nonnegative determinant-1 matrix (empty word for
/// the identity). Throws DomainError for anything else.
ShearWord decompose(const Matrix& a);
Matrix recompose(const ShearWord& word);

/// Exponents padded to the fixed shape L^{p0} U^{p1} L^{p2} ... L^{p_{2m}}
/// (odd length, lower shear first and last, zeros allowed only at the ends).
std::vector<BigInt> lower_first_exponents(const ShearWord& word);

/// Column sums (a+c, b+d) and their ratio; the norm is the larger column sum.
BigInt column_norm(const Matrix& a, int j);
BigInt matrix_norm(const Matrix& a);
Rational column_ratio(const Matrix& a);

/// Balanced: column-sum ratio within [1/D, D].
bool is_balanced(const Matrix& a, const Rational& d_bound);

/// Exact squared sine of the angle between the two column directions:
/// det(a)^2 / (|c0|^2 |c1|^2) with Euclidean squared column norms.
Rational sin2_column_angle(const Matrix& a);

/// All nonnegative determinant-1 matrices with matrix_norm <= max_norm that
/// are D-balanced, in depth-first word order (identity first).
std::vector<Matrix> enumerate_balanced(const BigInt& max_norm, const Rational& d_bound);

/// Count of the same set without materializing it.
BigInt count_balanced(const BigInt& max_norm, const Rational& d_bound);

} // namespace ietnue
