// Ladder closed forms, block assembly, scale profiles, chain sampling, and
// the chain cache. The load-bearing assertions replay every closed form
// against the raw step dynamics, so none of these matrices is hand-entered
// without an independent derivation.
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "ietnue/paths.hpp"

using namespace ietnue;

namespace {

Rational rat(long num, long den = 1) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

const Permutation kRoot = Permutation::parse("4321");

Matrix corner(const Matrix& a, const BigInt& r) {
    return a * shear_upper_pow(r) * shear_lower();
}

Matrix swap_conj(const Matrix& m) {
    const Matrix j = Matrix::from_rows({{0, 1}, {1, 0}});
    return j * m * j;
}

} // namespace

TEST_CASE("ladder closed forms replay against the step dynamics") {
    for (const LadderKind kind :
         {LadderKind::Lower1, LadderKind::Upper1, LadderKind::Lower2, LadderKind::Upper2}) {
        for (long n = 0; n <= 5; ++n) {
            const PathProduct p = path_matrix(kRoot, ladder_word(kind, n));
            CHECK(p.end == kRoot);
            CHECK(p.matrix == ladder_matrix(kind, BigInt(n)));
        }
    }
}

TEST_CASE("ladder frozen entries") {
    const Matrix u1_2 = ladder_matrix(LadderKind::Upper1, 2);
    CHECK(u1_2 == Matrix::from_rows({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 3, 2}, {1, 1, 1, 1}}));
    CHECK(ladder_matrix(LadderKind::Lower1, 1) ==
          Matrix::from_rows({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {1, 1, 1, 1}}));
    CHECK(ladder_matrix(LadderKind::Lower2, 3) ==
          Matrix::from_rows({{1, 3, 3, 3}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}));
    CHECK(ladder_matrix(LadderKind::Upper2, 2) ==
          Matrix::from_rows({{1, 1, 1, 1}, {2, 3, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}));

    // Degenerate overlaps between the families.
    CHECK(ladder_matrix(LadderKind::Upper1, 0) == ladder_matrix(LadderKind::Lower1, 1));
    CHECK(ladder_matrix(LadderKind::Upper2, 0) == ladder_matrix(LadderKind::Lower2, 1));

    CHECK_THROWS_AS(ladder_matrix(LadderKind::Lower1, -1), DomainError);
}

TEST_CASE("the two ladder families are order-reversal mirrors") {
    Matrix rev(4);
    for (int i = 0; i < 4; ++i) rev.at(i, 3 - i) = 1;
    for (long n = 0; n <= 4; ++n) {
        CHECK(rev * ladder_matrix(LadderKind::Lower1, n) * rev ==
              ladder_matrix(LadderKind::Lower2, n));
        CHECK(rev * ladder_matrix(LadderKind::Upper1, n) * rev ==
              ladder_matrix(LadderKind::Upper2, n));
    }
}

TEST_CASE("block assembly: identity word and worked example") {
    CHECK(block_matrix(Matrix::identity(2), 5, BlockSide::Lower) ==
          ladder_matrix(LadderKind::Upper1, 5));

    // A = U*L, r = 3: two upper ladders U1(1)*U1(3).
    const Matrix a = Matrix::from_rows({{2, 1}, {1, 1}});
    const Matrix b = block_matrix(a, 3, BlockSide::Lower);
    CHECK(b == Matrix::from_rows({{1, 0, 0, 0}, {0, 1, 0, 0}, {1, 1, 9, 7}, {2, 2, 5, 4}}));
    CHECK(b == ladder_matrix(LadderKind::Upper1, 1) * ladder_matrix(LadderKind::Upper1, 3));

    CHECK_THROWS_AS(block_matrix(a, 0, BlockSide::Lower), DomainError);
    // L*U ends with the upper shear: no ladder word realizes it.
    CHECK_THROWS_AS(block_matrix(shear_lower() * shear_upper(), 3, BlockSide::Lower),
                    DomainError);
}

TEST_CASE("block corner laws") {
    SeededRng rng(314159);
    const ScaleProfile tiny = ScaleProfile::tiny();
    for (int trial = 0; trial < 25; ++trial) {
        const ChainSpec spec = sample_chain(tiny, 2, rng);
        for (const ChainBlock& blk : spec.blocks) {
            const Matrix q = corner(blk.a, blk.r);
            const Matrix lower = block_matrix(blk.a, blk.r, BlockSide::Lower);
            CHECK(submatrix(lower, {2, 3}, {2, 3}) == q);
            CHECK(submatrix(lower, {0, 1}, {0, 1}) == Matrix::identity(2));
            CHECK(submatrix(lower, {0, 1}, {2, 3}).max_abs_entry() == 0);
            const Matrix x = submatrix(lower, {2, 3}, {0, 1});
            CHECK(x.at(0, 0) == x.at(0, 1)); // the shift columns agree
            CHECK(x.at(1, 0) == x.at(1, 1));

            const Matrix upper = block_matrix(blk.a, blk.r, BlockSide::Upper);
            CHECK(submatrix(upper, {0, 1}, {0, 1}) == swap_conj(q));
            CHECK(submatrix(upper, {2, 3}, {2, 3}) == Matrix::identity(2));
            CHECK(submatrix(upper, {2, 3}, {0, 1}).max_abs_entry() == 0);
            const Matrix y = submatrix(upper, {0, 1}, {2, 3});
            CHECK(y.at(0, 0) == y.at(0, 1));
            CHECK(y.at(1, 0) == y.at(1, 1));

            CHECK(lower.determinant() == 1);
            CHECK(upper.determinant() == 1);
        }
    }
}

TEST_CASE("block words replay against true orbits") {
    const Matrix a = Matrix::from_rows({{2, 1}, {1, 1}});
    for (const BlockSide side : {BlockSide::Lower, BlockSide::Upper}) {
        const std::vector<RauzyMove> word = block_word(a, 2, side);
        const PathProduct p = path_matrix(kRoot, word);
        CHECK(p.end == kRoot);
        CHECK(p.matrix == block_matrix(a, 2, side));

        // Push an interior cone point through the real dynamics: the word
        // must be followed move-for-move and land on the chosen coordinates.
        const std::vector<Rational> deep = {rat(1), rat(2), rat(3), rat(4)};
        const std::vector<Rational> lengths = p.matrix * deep;
        const ReplayResult replay =
            apply_move_word(IntervalExchange(lengths, kRoot), word);
        CHECK(replay.final_exchange.permutation() == kRoot);
        for (int i = 0; i < 4; ++i) CHECK(replay.final_exchange.length(i) == deep[i]);
    }
}

TEST_CASE("profile presets expose the advertised ranges") {
    const ScaleProfile full = ScaleProfile::full();
    CHECK(full.a_exponent.eval_floor(3) == 6);
    CHECK(full.r_exponent.eval_floor(3) == 19);
    CHECK(full.a_range(3) == std::pair<BigInt, BigInt>{pow10(6), 2 * pow10(6)});
    CHECK(full.r_range(3) == std::pair<BigInt, BigInt>{pow10(19), 2 * pow10(19)});
    CHECK(full.a_window(3).first == BigInt(1600000));
    CHECK(full.a_window(3).second == BigInt(2000000));

    const ScaleProfile desk = ScaleProfile::desk();
    CHECK(desk.a_range(3) == std::pair<BigInt, BigInt>{BigInt(10), BigInt(20)});
    CHECK(desk.a_range(6) == std::pair<BigInt, BigInt>{BigInt(10), BigInt(20)});
    CHECK(desk.a_window(3) == std::pair<BigInt, BigInt>{BigInt(14), BigInt(17)});
    CHECK(desk.r_exponent.eval_floor(3) == 19);

    const ScaleProfile tiny = ScaleProfile::tiny();
    CHECK(tiny.a_range(3) == std::pair<BigInt, BigInt>{BigInt(4), BigInt(8)});
    CHECK(tiny.r_range(3) == std::pair<BigInt, BigInt>{BigInt(32), BigInt(64)});

    // The count-fit profile halves the full exponents (rounded down).
    const ScaleProfile fractal = ScaleProfile::fractal();
    CHECK(fractal.a_exponent.eval_floor(3) == 3);
    CHECK(fractal.r_exponent.eval_floor(3) == 9);
    CHECK(fractal.a_exponent.eval_floor(4) == 6);
}

TEST_CASE("profile lookup and json round trip") {
    CHECK(ScaleProfile::by_name("full").name == "full");
    CHECK(ScaleProfile::by_name("desk").name == "desk");
    CHECK(ScaleProfile::by_name("tiny").base == 2);
    CHECK(ScaleProfile::by_name("fractal_desk").name == "fractal");
    CHECK_THROWS_AS(ScaleProfile::by_name("nope"), DomainError);

    const ScaleProfile p = ScaleProfile::desk();
    const ScaleProfile q = ScaleProfile::from_json(p.to_json());
    CHECK(q.to_json() == p.to_json());

    namespace fs = std::filesystem;
    const fs::path file = fs::temp_directory_path() / "ietnue_profile_test.json";
    { std::ofstream out(file); out << p.to_json(); }
    const ScaleProfile r = ScaleProfile::by_name("custom:" + file.string());
    CHECK(r.to_json() == p.to_json());
    fs::remove(file);
    CHECK_THROWS_AS(ScaleProfile::by_name("custom:/nonexistent/x.json"), DomainError);
}

TEST_CASE("chain sampling is deterministic and in range") {
    const ScaleProfile full = ScaleProfile::full();
    SeededRng rng1(2024);
    SeededRng rng2(2024);
    const ChainSpec s1 = sample_chain(full, 2, rng1);
    const ChainSpec s2 = sample_chain(full, 2, rng2);
    CHECK(s1.to_json() == s2.to_json());
    CHECK(s1.content_hash() == s2.content_hash());

    SeededRng rng3(2025);
    const ChainSpec s3 = sample_chain(full, 2, rng3);
    CHECK(s1.to_json() != s3.to_json());

    CHECK(s1.blocks.size() == 4);
    for (const ChainBlock& b : s1.blocks) {
        const auto [lo, hi] = full.a_window(b.slot);
        const BigInt norm = matrix_norm(b.a);
        CHECK(norm >= lo);
        CHECK(norm <= hi);
        const auto [rlo, rhi] = full.r_window(b.slot);
        CHECK(b.r >= rlo);
        CHECK(b.r <= rhi);
    }
    s1.validate();
}

TEST_CASE("chain spec validation rejects corrupted data") {
    SeededRng rng(7);
    ChainSpec spec = sample_chain(ScaleProfile::tiny(), 1, rng);
    spec.validate();

    ChainSpec bad_slot = spec;
    bad_slot.blocks[1].slot = 9;
    CHECK_THROWS_AS(bad_slot.validate(), DomainError);

    ChainSpec bad_norm = spec;
    bad_norm.blocks[0].a = shear_lower_pow(40);
    CHECK_THROWS_AS(bad_norm.validate(), DomainError);

    ChainSpec bad_r = spec;
    bad_r.blocks[0].r = 1;
    CHECK_THROWS_AS(bad_r.validate(), DomainError);

    ChainSpec bad_k = spec;
    bad_k.k = 2;
    CHECK_THROWS_AS(bad_k.validate(), DomainError);
}

TEST_CASE("chain spec json round trip") {
    SeededRng rng(5150);
    const ChainSpec spec = sample_chain(ScaleProfile::full(), 1, rng);
    const ChainSpec back = ChainSpec::from_json(spec.to_json());
    CHECK(back.to_json() == spec.to_json());
    CHECK(back.content_hash() == spec.content_hash());
    CHECK(chain_matrix(back) == chain_matrix(spec));
}

TEST_CASE("chain products and prefixes") {
    SeededRng rng(11);
    const ChainSpec spec = sample_chain(ScaleProfile::tiny(), 2, rng);
    const Matrix m = chain_matrix(spec);
    CHECK(m.determinant() == 1);
    CHECK(m.is_nonnegative());

    const std::vector<Matrix> prefixes = chain_prefixes(spec);
    CHECK(prefixes.size() == 2);
    CHECK(prefixes.back() == m);
    CHECK(prefixes[0] ==
          block_matrix(spec.blocks[0].a, spec.blocks[0].r, BlockSide::Lower) *
              block_matrix(spec.blocks[1].a, spec.blocks[1].r, BlockSide::Upper));
}

TEST_CASE("chain cache round trips and survives corruption") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "ietnue_cache_test";
    fs::remove_all(dir);

    SeededRng rng(31337);
    const ChainSpec spec = sample_chain(ScaleProfile::tiny(), 1, rng);
    const Matrix direct = chain_matrix(spec);

    const Matrix first = chain_matrix_cached(spec, dir.string());
    CHECK(first == direct);
    const std::string key = hash_hex(spec.content_hash());
    const fs::path entry = dir / ("chain-" + key + ".json");
    CHECK(fs::exists(entry));

    const Matrix second = chain_matrix_cached(spec, dir.string());
    CHECK(second == direct);

    { std::ofstream out(entry); out << "{not json"; }
    const Matrix third = chain_matrix_cached(spec, dir.string());
    CHECK(third == direct);

    CHECK(chain_matrix_cached(spec, "") == direct);
    fs::remove_all(dir);
}
