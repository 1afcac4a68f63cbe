// Shear-word decomposition, balance predicates, column angles, and the
// balanced-matrix census. Brute-force oracles pin the census at small norms.
#include <doctest.h>

#include <set>
#include <string>

#include "ietnue/rng.hpp"
#include "ietnue/sl2.hpp"

using namespace ietnue;

namespace {

Rational rat(long num, long den = 1) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

std::string key_of(const Matrix& m) { return m.to_string(); }

// Every nonnegative determinant-1 matrix with both column sums <= max_norm,
// found by scanning entry quadruples directly.
std::set<std::string> brute_force_census(long max_norm, const Rational& d_bound) {
    std::set<std::string> out;
    for (long a = 0; a <= max_norm; ++a)
        for (long b = 0; b <= max_norm; ++b)
            for (long c = 0; c <= max_norm; ++c)
                for (long d = 0; d <= max_norm; ++d) {
                    if (a * d - b * c != 1) continue;
                    if (a + c > max_norm || b + d > max_norm) continue;
                    const Matrix m = Matrix::from_rows({{a, b}, {c, d}});
                    if (is_balanced(m, d_bound)) out.insert(key_of(m));
                }
    return out;
}

} // namespace

TEST_CASE("shear powers have the closed form") {
    CHECK(shear_lower_pow(3) == Matrix::from_rows({{1, 0}, {3, 1}}));
    CHECK(shear_upper_pow(4) == Matrix::from_rows({{1, 4}, {0, 1}}));
    CHECK(shear_lower_pow(0) == Matrix::identity(2));
    CHECK_THROWS_AS(shear_lower_pow(-1), DomainError);
}

TEST_CASE("decompose recovers hand-checked words") {
    // [[2,1],[1,1]] = U * L.
    const ShearWord w = decompose(Matrix::from_rows({{2, 1}, {1, 1}}));
    CHECK(w.first == Shear::Upper);
    CHECK(w.exponents == std::vector<BigInt>{BigInt(1), BigInt(1)});
    CHECK(recompose(w) == Matrix::from_rows({{2, 1}, {1, 1}}));

    const ShearWord l3 = decompose(shear_lower_pow(3));
    CHECK(l3.first == Shear::Lower);
    CHECK(l3.exponents == std::vector<BigInt>{BigInt(3)});

    const ShearWord empty = decompose(Matrix::identity(2));
    CHECK(empty.exponents.empty());
    CHECK(recompose(empty) == Matrix::identity(2));

    CHECK_THROWS_AS(decompose(Matrix::from_rows({{1, 2}, {3, 4}})), DomainError);
    CHECK_THROWS_AS(decompose(Matrix::from_rows({{0, 1}, {1, 0}})), DomainError);
    CHECK_THROWS_AS(decompose(Matrix::from_rows({{2, -1}, {-1, 1}})), DomainError);
    CHECK_THROWS_AS(decompose(Matrix::identity(3)), DomainError);
}

TEST_CASE("random words round-trip through decompose") {
    SeededRng rng(7);
    for (int trial = 0; trial < 60; ++trial) {
        ShearWord word;
        word.first = rng.uniform_u64(0, 1) ? Shear::Lower : Shear::Upper;
        const int parts = static_cast<int>(rng.uniform_u64(0, 6));
        for (int i = 0; i < parts; ++i)
            word.exponents.push_back(BigInt(rng.uniform_u64(1, 9)));
        const Matrix m = recompose(word);
        const ShearWord back = decompose(m);
        CHECK(recompose(back) == m);
        if (!word.exponents.empty()) {
            CHECK(back.exponents == word.exponents);
            CHECK(back.first == word.first);
        }
    }
}

TEST_CASE("lower-first padding yields the fixed odd shape") {
    // U^2 L^3 pads to L^0 U^2 L^3; L^2 U^1 pads to L^2 U^1 L^0.
    ShearWord w1{Shear::Upper, {BigInt(2), BigInt(3)}};
    CHECK(lower_first_exponents(w1) == std::vector<BigInt>{BigInt(0), BigInt(2), BigInt(3)});
    ShearWord w2{Shear::Lower, {BigInt(2), BigInt(1)}};
    CHECK(lower_first_exponents(w2) == std::vector<BigInt>{BigInt(2), BigInt(1), BigInt(0)});
    ShearWord empty{Shear::Lower, {}};
    CHECK(lower_first_exponents(empty) == std::vector<BigInt>{BigInt(0)});
}

TEST_CASE("norms, ratios, and balance") {
    const Matrix m = Matrix::from_rows({{2, 1}, {1, 1}});
    CHECK(column_norm(m, 0) == 3);
    CHECK(column_norm(m, 1) == 2);
    CHECK(matrix_norm(m) == 3);
    CHECK(column_ratio(m) == rat(3, 2));
    CHECK(is_balanced(m, rat(2)));
    CHECK_FALSE(is_balanced(shear_lower_pow(5), rat(2)));
    CHECK(is_balanced(Matrix::identity(2), rat(2)));
    CHECK_THROWS_AS(is_balanced(m, rat(1, 2)), DomainError);
}

TEST_CASE("column angle formula") {
    CHECK(sin2_column_angle(Matrix::from_rows({{2, 1}, {1, 1}})) == rat(1, 10));
    CHECK(sin2_column_angle(Matrix::identity(2)) == rat(1));
    // Angle shrinks like the inverse fourth power of the norm for balanced
    // matrices: sin^2 * (s0*s1)^2 stays within [1, 4].
    for (const Matrix& m : enumerate_balanced(BigInt(64), rat(2))) {
        if (matrix_norm(m) < 2) continue;
        const Rational v =
            sin2_column_angle(m) * Rational(column_norm(m, 0) * column_norm(m, 1)) *
            Rational(column_norm(m, 0) * column_norm(m, 1));
        CHECK(v >= 1);
        CHECK(v <= 4);
    }
}

TEST_CASE("balanced census matches brute force at small norms") {
    for (long r = 1; r <= 5; ++r) {
        const std::set<std::string> brute = brute_force_census(r, rat(2));
        std::set<std::string> walked;
        for (const Matrix& m : enumerate_balanced(BigInt(r), rat(2)))
            walked.insert(key_of(m));
        CHECK(walked == brute);
        CHECK(count_balanced(BigInt(r), rat(2)) == BigInt(static_cast<long>(brute.size())));
    }
    // Looser balance admits more matrices.
    CHECK(count_balanced(BigInt(5), rat(3)) >= count_balanced(BigInt(5), rat(2)));
}

TEST_CASE("census entries are unique and well-formed") {
    const std::vector<Matrix> all = enumerate_balanced(BigInt(20), rat(2));
    std::set<std::string> seen;
    for (const Matrix& m : all) {
        CHECK(m.determinant() == 1);
        CHECK(m.is_nonnegative());
        CHECK(matrix_norm(m) <= 20);
        CHECK(is_balanced(m, rat(2)));
        CHECK(seen.insert(key_of(m)).second);
    }
    CHECK(all.front() == Matrix::identity(2));
}

TEST_CASE("census grows roughly quadratically") {
    const BigInt c128 = count_balanced(BigInt(128), rat(2));
    const BigInt c256 = count_balanced(BigInt(256), rat(2));
    // Doubling the norm bound should roughly quadruple the census.
    CHECK(c256 > 2 * c128);
    CHECK(c256 < 8 * c128);
}

TEST_CASE("appending U*L balances any nonnegative word") {
    SeededRng rng(99);
    const Matrix ul = shear_upper() * shear_lower();
    for (int trial = 0; trial < 40; ++trial) {
        ShearWord word;
        word.first = rng.uniform_u64(0, 1) ? Shear::Lower : Shear::Upper;
        const int parts = static_cast<int>(rng.uniform_u64(0, 5));
        for (int i = 0; i < parts; ++i)
            word.exponents.push_back(BigInt(rng.uniform_u64(1, 20)));
        const Matrix a = recompose(word) * ul;
        const Rational ratio = column_ratio(a);
        CHECK(ratio > 1);
        CHECK(ratio < 2);
    }
}
