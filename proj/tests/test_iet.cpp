// Exact-arithmetic foundations: rationals, permutations, matrices, and the
// interval exchange map itself. Expected values are hand-computed.
#include <doctest.h>

#include <random>

#include "ietnue/iet.hpp"
#include "ietnue/matrix.hpp"
#include "ietnue/permutation.hpp"
#include "ietnue/rational.hpp"
#include "ietnue/rng.hpp"

using namespace ietnue;

namespace {

Rational rat(long num, long den = 1) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

IntervalExchange quarter_reversal() {
    return IntervalExchange({rat(1, 4), rat(1, 4), rat(1, 4), rat(1, 4)},
                            Permutation::parse("4321"));
}

} // namespace

TEST_CASE("rational helpers") {
    CHECK(parse_rational("3/6") == rat(1, 2));
    CHECK(parse_rational("-2/4") == rat(-1, 2));
    CHECK(parse_rational("7") == rat(7));
    CHECK_THROWS_AS(parse_rational("1/0"), DomainError);
    CHECK_THROWS_AS(parse_rational("abc"), DomainError);
    CHECK_THROWS_AS(parse_rational(""), DomainError);

    CHECK(to_string(rat(-1, 2)) == "-1/2");
    CHECK(to_string(rat(5)) == "5");

    CHECK(log10_approx(pow10(100)) == doctest::Approx(100.0));
    CHECK(log10_approx(rat(1, 1000)) == doctest::Approx(-3.0));
    CHECK_THROWS_AS(log10_approx(BigInt(0)), DomainError);

    // Reference vectors for the 64-bit FNV-1a parameters.
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hash_hex(0xcbf29ce484222325ULL) == "cbf29ce484222325");
}

TEST_CASE("seeded rng determinism and ranges") {
    SeededRng rng(42);
    SeededRng rng2(42);
    CHECK(rng.next_u64() == rng2.next_u64());

    for (int i = 0; i < 200; ++i) {
        const std::uint64_t v = rng.uniform_u64(10, 13);
        CHECK(v >= 10);
        CHECK(v <= 13);
    }
    const BigInt lo = pow10(30);
    const BigInt hi = 2 * pow10(30);
    for (int i = 0; i < 50; ++i) {
        const BigInt v = rng.uniform_bigint(lo, hi);
        CHECK(v >= lo);
        CHECK(v <= hi);
    }
    CHECK_THROWS_AS(rng.uniform_bigint(hi, lo), DomainError);
}

TEST_CASE("permutation parsing, inversion, irreducibility") {
    const Permutation p = Permutation::parse("4321");
    CHECK(p.size() == 4);
    CHECK(p.image(0) == 3);
    CHECK(p.preimage(3) == 0);
    CHECK(p.to_string() == "4321");
    CHECK(Permutation::parse("4,3,2,1") == p);
    CHECK(p.inverse() == p);

    // Inversion pairs inside the order-4 reversal class.
    CHECK(Permutation::parse("4132").inverse() == Permutation::parse("2431"));
    CHECK(Permutation::parse("4213").inverse() == Permutation::parse("3241"));
    CHECK(Permutation::parse("3142").inverse() == Permutation::parse("2413"));

    CHECK(Permutation::parse("4321").is_irreducible());
    CHECK(Permutation::parse("3142").is_irreducible());
    CHECK_FALSE(Permutation::parse("1234").is_irreducible());
    CHECK_FALSE(Permutation::parse("2134").is_irreducible());

    CHECK_THROWS_AS(Permutation::parse("4322"), DomainError);
    CHECK_THROWS_AS(Permutation::parse(""), DomainError);
    CHECK_THROWS_AS(Permutation::parse("0ximp"), DomainError);
}

TEST_CASE("matrix arithmetic, determinant, exact solve") {
    const Matrix id4 = Matrix::identity(4);
    const Matrix k1 = Matrix::from_rows({{1, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}, {0, 1, 0, 0}});
    CHECK(k1 * id4 == k1);
    CHECK(id4 * k1 == k1);
    CHECK(k1.determinant() == 1);

    const Matrix e41 = Matrix::elementary(4, 3, 0);
    CHECK(e41.at(3, 0) == 1);
    CHECK(e41.determinant() == 1);

    const Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});
    CHECK(m.determinant() == -2);
    CHECK(Matrix::from_rows({{1, 2}, {2, 4}}).determinant() == 0);
    CHECK(m.max_abs_entry() == 4);
    CHECK(m.column_sum(0) == 4);
    CHECK(m.column(1) == std::vector<BigInt>{BigInt(2), BigInt(4)});

    const Matrix a = Matrix::from_rows({{2, 1}, {1, 1}});
    const std::vector<Rational> u = solve_exact(a, {rat(3), rat(2)});
    CHECK(u[0] == rat(1));
    CHECK(u[1] == rat(1));
    CHECK_THROWS_AS(solve_exact(Matrix::from_rows({{1, 2}, {2, 4}}), {rat(1), rat(1)}),
                    CheckError);

    // Products of nonnegative unimodular matrices stay exact at huge sizes.
    Matrix pow = Matrix::identity(2);
    for (int i = 0; i < 300; ++i) pow = pow * a;
    CHECK(pow.determinant() == 1);
    CHECK(pow.is_nonnegative());
    CHECK(log10_approx(pow.max_abs_entry()) > 100.0);
}

TEST_CASE("interval exchange evaluation") {
    const IntervalExchange t = quarter_reversal();
    CHECK(t.total() == rat(1));
    CHECK(t.apply(rat(1, 8)) == rat(7, 8));
    CHECK(t.interval_of(rat(1, 8)) == 0);
    CHECK(t.interval_of(rat(3, 4)) == 3);
    CHECK_THROWS_AS(t.interval_of(rat(-1, 8)), DomainError);
    CHECK_THROWS_AS(t.interval_of(rat(1)), DomainError);

    const IntervalExchange ident({rat(1, 4), rat(1, 4), rat(1, 4), rat(1, 4)},
                                 Permutation::parse("1234"));
    CHECK(ident.apply(rat(1, 8)) == rat(1, 8));

    const IntervalExchange rot({rat(1, 2), rat(1, 2)}, Permutation::parse("21"));
    CHECK(rot.apply(rat(3, 4)) == rat(1, 4));

    CHECK_THROWS_AS(IntervalExchange({rat(0), rat(1)}, Permutation::parse("21")),
                    DomainError);
    CHECK_THROWS_AS(IntervalExchange({rat(1)}, Permutation::parse("21")), DomainError);
}

TEST_CASE("inverse undoes the exchange exactly") {
    const IntervalExchange t({rat(2, 7), rat(1, 7), rat(3, 7), rat(1, 7)},
                             Permutation::parse("3142"));
    const IntervalExchange tinv = t.inverse();
    for (long num = 0; num < 28; ++num) {
        const Rational x = rat(num, 28);
        CHECK(tinv.apply(t.apply(x)) == x);
        CHECK(t.apply_inverse(t.apply(x)) == x);
    }

    // Randomized round trips on random exchanges.
    SeededRng rng(20240815);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Rational> lengths;
        for (int j = 0; j < 4; ++j)
            lengths.push_back(rat(static_cast<long>(rng.uniform_u64(1, 40)), 41));
        const IntervalExchange s(lengths, Permutation::parse("4321"));
        const Rational span = s.total();
        for (int k = 0; k < 10; ++k) {
            Rational x = Rational(static_cast<long>(rng.uniform_u64(0, 999))) / 1000 * span;
            x.canonicalize();
            CHECK(s.apply_inverse(s.apply(x)) == x);
        }
    }
}

TEST_CASE("normalization preserves shape") {
    const IntervalExchange t({rat(2), rat(6)}, Permutation::parse("21"));
    const IntervalExchange n = t.normalized();
    CHECK(n.total() == rat(1));
    CHECK(n.length(0) == rat(1, 4));
    CHECK(n.permutation() == t.permutation());
}

TEST_CASE("orbit visit counts and frequencies") {
    const IntervalExchange rot({rat(1, 2), rat(1, 2)}, Permutation::parse("21"));
    const std::vector<BigInt> counts = orbit_visit_counts(rot, rat(0), 4);
    CHECK(counts == std::vector<BigInt>{BigInt(2), BigInt(2)});

    const std::vector<Rational> freq = orbit_frequencies(rot, rat(0), 4);
    CHECK(freq[0] == rat(1, 2));
    CHECK(freq[1] == rat(1, 2));

    // Frequencies always sum to one.
    const IntervalExchange t({rat(55, 123), rat(34, 123), rat(21, 123), rat(13, 123)},
                             Permutation::parse("4321"));
    const std::vector<Rational> f = orbit_frequencies(t, rat(1, 1000), 500);
    Rational sum = 0;
    for (const Rational& v : f) sum += v;
    CHECK(sum == rat(1));

    CHECK_THROWS_AS(orbit_frequencies(rot, rat(0), 0), DomainError);
}

TEST_CASE("orbit bit budget guards runaway arithmetic") {
    const IntervalExchange t({rat(355, 1130), rat(775, 1130)}, Permutation::parse("21"));
    // A 41-bit denominator against a 16-bit budget trips immediately.
    CHECK_THROWS_AS(orbit_visit_counts(t, rat(1, (1L << 40) + 1), 10, 16), ResourceError);
}

TEST_CASE("iet json round trip") {
    const IntervalExchange t({rat(2, 7), rat(1, 7), rat(3, 7), rat(1, 7)},
                             Permutation::parse("3142"));
    const std::string text = to_json_string(t);
    const IntervalExchange back = iet_from_json_string(text);
    CHECK(back.permutation() == t.permutation());
    for (int j = 0; j < t.size(); ++j) CHECK(back.length(j) == t.length(j));

    CHECK_THROWS_AS(iet_from_json_string("{"), DomainError);
    CHECK_THROWS_AS(iet_from_json_string("{}"), DomainError);
}
