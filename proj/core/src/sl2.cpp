#include "ietnue/sl2.hpp"

#include <functional>

#include "ietnue/errors.hpp"

namespace ietnue {

Matrix shear_lower() { return Matrix::from_rows({{1, 0}, {1, 1}}); }
Matrix shear_upper() { return Matrix::from_rows({{1, 1}, {0, 1}}); }

Matrix shear_lower_pow(const BigInt& n) {
    if (n < 0) throw DomainError("shear_lower_pow: negative exponent");
    Matrix m = Matrix::identity(2);
    m.at(1, 0) = n;
    return m;
}

Matrix shear_upper_pow(const BigInt& n) {
    if (n < 0) throw DomainError("shear_upper_pow: negative exponent");
    Matrix m = Matrix::identity(2);
    m.at(0, 1) = n;
    return m;
}

ShearWord decompose(const Matrix& a) {
    if (a.dim() != 2) throw DomainError("decompose: need a 2x2 matrix");
    if (!a.is_nonnegative()) throw DomainError("decompose: entries must be nonnegative");
    if (a.determinant() != 1) throw DomainError("decompose: determinant must be 1");

    // Peel the leftmost shear power greedily: L^q divides on the left iff the
    // bottom row dominates the top one, U^q iff the reverse. Exactly one
    // applies for any matrix other than the identity.
    Matrix w = a;
    ShearWord word;
    bool first_set = false;
    while (!(w.at(0, 0) == 1 && w.at(0, 1) == 0 && w.at(1, 0) == 0 && w.at(1, 1) == 1)) {
        const BigInt &ta = w.at(0, 0), &tb = w.at(0, 1);
        const BigInt &bc = w.at(1, 0), &bd = w.at(1, 1);
        const bool lower_ok = bc >= ta && bd >= tb; // w = L * w'
        const bool upper_ok = ta >= bc && tb >= bd; // w = U * w'
        if (lower_ok == upper_ok)
            throw DomainError("decompose: matrix is not a shear word");
        BigInt q;
        if (lower_ok) {
            // Largest q with bottom - q*top still nonnegative.
            q = -1;
            if (ta > 0) q = bc / ta;
            if (tb > 0) { const BigInt q2 = bd / tb; if (q < 0 || q2 < q) q = q2; }
            // Do not peel past the identity: cap so the remainder stays valid.
            w.at(1, 0) = bc - q * ta;
            w.at(1, 1) = bd - q * tb;
        } else {
            q = -1;
            if (bc > 0) q = ta / bc;
            if (bd > 0) { const BigInt q2 = tb / bd; if (q < 0 || q2 < q) q = q2; }
            w.at(0, 0) = ta - q * bc;
            w.at(0, 1) = tb - q * bd;
        }
        if (q <= 0) throw DomainError("decompose: matrix is not a shear word");
        if (!first_set) {
            word.first = lower_ok ? Shear::Lower : Shear::Upper;
            first_set = true;
        }
        word.exponents.push_back(q);
    }
    return word;
}

Matrix recompose(const ShearWord& word) {
    Matrix out = Matrix::identity(2);
    for (std::size_t i = 0; i < word.exponents.size(); ++i) {
        const BigInt& e = word.exponents[i];
        if (e < 1) throw DomainError("recompose: exponents must be >= 1");
        out = out * (word.generator_at(i) == Shear::Lower ? shear_lower_pow(e)
                                                          : shear_upper_pow(e));
    }
    return out;
}

std::vector<BigInt> lower_first_exponents(const ShearWord& word) {
    std::vector<BigInt> padded;
    if (word.first == Shear::Upper) padded.push_back(0);
    for (const BigInt& e : word.exponents) padded.push_back(e);
    if (padded.size() % 2 == 0) padded.push_back(0);
    return padded;
}

BigInt column_norm(const Matrix& a, int j) {
    BigInt s = 0;
    for (int i = 0; i < a.dim(); ++i) {
        const BigInt& v = a.at(i, j);
        s += v >= 0 ? v : BigInt(-v);
    }
    return s;
}

BigInt matrix_norm(const Matrix& a) {
    BigInt best = 0;
    for (int j = 0; j < a.dim(); ++j) {
        BigInt s = column_norm(a, j);
        if (s > best) best = s;
    }
    return best;
}

Rational column_ratio(const Matrix& a) {
    const BigInt s0 = column_norm(a, 0);
    const BigInt s1 = column_norm(a, 1);
    if (s1 == 0) throw DomainError("column_ratio: zero column");
    Rational r(s0, s1);
    r.canonicalize();
    return r;
}

bool is_balanced(const Matrix& a, const Rational& d_bound) {
    if (d_bound < 1) throw DomainError("is_balanced: bound must be >= 1");
    const Rational r = column_ratio(a);
    return r >= 1 / d_bound && r <= d_bound;
}

Rational sin2_column_angle(const Matrix& a) {
    if (a.dim() != 2) throw DomainError("sin2_column_angle: need a 2x2 matrix");
    const BigInt det = a.determinant();
    BigInt n0 = a.at(0, 0) * a.at(0, 0) + a.at(1, 0) * a.at(1, 0);
    BigInt n1 = a.at(0, 1) * a.at(0, 1) + a.at(1, 1) * a.at(1, 1);
    if (n0 == 0 || n1 == 0) throw DomainError("sin2_column_angle: zero column");
    Rational out(det * det, n0 * n1);
    out.canonicalize();
    return out;
}

namespace {

void walk_balanced(const Matrix& a, const BigInt& max_norm, const Rational& d_bound,
                   const std::function<void(const Matrix&)>& emit) {
    if (matrix_norm(a) > max_norm) return;
    if (is_balanced(a, d_bound)) emit(a);
    // Children append one shear on the right; both strictly grow the norm, so
    // the recursion terminates.  Unique words mean no matrix repeats.
    walk_balanced(a * shear_lower(), max_norm, d_bound, emit);
    walk_balanced(a * shear_upper(), max_norm, d_bound, emit);
}

} // namespace

std::vector<Matrix> enumerate_balanced(const BigInt& max_norm, const Rational& d_bound) {
    if (max_norm < 1) throw DomainError("enumerate_balanced: norm bound must be >= 1");
    std::vector<Matrix> out;
    walk_balanced(Matrix::identity(2), max_norm, d_bound,
                  [&out](const Matrix& m) { out.push_back(m); });
    return out;
}

BigInt count_balanced(const BigInt& max_norm, const Rational& d_bound) {
    if (max_norm < 1) throw DomainError("count_balanced: norm bound must be >= 1");
    BigInt n = 0;
    walk_balanced(Matrix::identity(2), max_norm, d_bound,
                  [&n](const Matrix&) { n += 1; });
    return n;
}

} // namespace ietnue
