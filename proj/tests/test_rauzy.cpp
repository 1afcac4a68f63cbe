// Induction steps, class graphs, and path products. The order-4 reversal
// class ("4321") is pinned edge-by-edge against a hand-derived table, and the
// same table re-labeled by inverse permutations is asserted as well, since the
// two labeling conventions are easy to mix up and only one matches the step
// formulas that the closed-form path products rely on.
#include <doctest.h>

#include <algorithm>

#include "ietnue/rauzy.hpp"

using namespace ietnue;

namespace {

Rational rat(long num, long den = 1) {
    Rational q(num, den);
    q.canonicalize();
    return q;
}

const Matrix kK1 = Matrix::from_rows({{1, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}, {0, 1, 0, 0}});
const Matrix kK2 = Matrix::from_rows({{1, 0, 0, 0}, {0, 1, 1, 0}, {0, 0, 0, 1}, {0, 0, 1, 0}});
const Matrix kE41 = Matrix::elementary(4, 3, 0);
const Matrix kE42 = Matrix::elementary(4, 3, 1);
const Matrix kE43 = Matrix::elementary(4, 3, 2);
const Matrix kE34 = Matrix::elementary(4, 2, 3);

struct EdgeSpec {
    const char* source;
    RauzyMove move;
    const char* target;
    const Matrix* matrix;
};

// Out-edges of the reversal class under the step formulas (move A swallows
// the last piece, move B swallows the piece landing last).
const EdgeSpec kReversalEdges[] = {
    {"4321", RauzyMove::A, "4132", &kK1}, {"4321", RauzyMove::B, "2431", &kE41},
    {"4132", RauzyMove::A, "4213", &kK1}, {"4132", RauzyMove::B, "3142", &kE41},
    {"4213", RauzyMove::A, "4321", &kK1}, {"4213", RauzyMove::B, "4213", &kE41},
    {"3142", RauzyMove::A, "3142", &kE34}, {"3142", RauzyMove::B, "4132", &kE43},
    {"2431", RauzyMove::A, "2413", &kK2}, {"2431", RauzyMove::B, "3241", &kE42},
    {"3241", RauzyMove::A, "3241", &kE34}, {"3241", RauzyMove::B, "4321", &kE43},
    {"2413", RauzyMove::A, "2431", &kK2}, {"2413", RauzyMove::B, "2413", &kE42},
};

struct DualEdgeSpec {
    const char* source;
    const char* target;
    const Matrix* matrix;
};

// The same fourteen matrices appear in the dual convention that labels each
// state by the inverse permutation; asserting both tables guards against the
// classic convention mix-up.
const DualEdgeSpec kReversalEdgesDual[] = {
    {"4321", "4132", &kE41}, {"4132", "4213", &kE42}, {"4213", "4321", &kE43},
    {"4132", "3142", &kK2},  {"3142", "3142", &kE42}, {"3142", "4132", &kK2},
    {"4213", "4213", &kE34}, {"4321", "2431", &kK1},  {"2431", "3241", &kK1},
    {"3241", "4321", &kK1},  {"2431", "2413", &kE41}, {"2413", "2413", &kE34},
    {"2413", "2431", &kE43}, {"3241", "3241", &kE41},
};

} // namespace

TEST_CASE("move word parsing") {
    const std::vector<RauzyMove> w = parse_move_word("ABba");
    CHECK(w.size() == 4);
    CHECK(move_word_string(w) == "ABBA");
    CHECK_THROWS_AS(parse_move_word("AXB"), DomainError);
}

TEST_CASE("single step: swallowing the landing piece (move B)") {
    const IntervalExchange t({rat(1, 10), rat(2, 10), rat(3, 10), rat(4, 10)},
                             Permutation::parse("4321"));
    const RauzyStep step = rauzy_step(t);
    CHECK(step.move == RauzyMove::B);
    CHECK(step.next.permutation() == Permutation::parse("2431"));
    CHECK(step.visitation == kE41);
    CHECK(step.next.length(0) == rat(1, 10));
    CHECK(step.next.length(1) == rat(2, 10));
    CHECK(step.next.length(2) == rat(3, 10));
    CHECK(step.next.length(3) == rat(3, 10));

    // lambda_old = M * lambda_new, exactly.
    const std::vector<Rational> back = step.visitation * step.next.lengths();
    for (int i = 0; i < 4; ++i) CHECK(back[i] == t.length(i));
}

TEST_CASE("single step: swallowing the last piece (move A)") {
    const IntervalExchange t({rat(4, 10), rat(3, 10), rat(2, 10), rat(1, 10)},
                             Permutation::parse("4321"));
    const RauzyStep step = rauzy_step(t);
    CHECK(step.move == RauzyMove::A);
    CHECK(step.next.permutation() == Permutation::parse("4132"));
    CHECK(step.visitation == kK1);
    CHECK(step.next.length(0) == rat(3, 10));
    CHECK(step.next.length(1) == rat(1, 10));
    CHECK(step.next.length(2) == rat(3, 10));
    CHECK(step.next.length(3) == rat(2, 10));

    const std::vector<Rational> back = step.visitation * step.next.lengths();
    for (int i = 0; i < 4; ++i) CHECK(back[i] == t.length(i));
}

TEST_CASE("step undefined on ties and fixed last piece") {
    const IntervalExchange tie({rat(1, 4), rat(1, 4), rat(1, 4), rat(1, 4)},
                               Permutation::parse("4321"));
    CHECK_THROWS_AS(rauzy_step(tie), RauzyUndefinedError);

    CHECK_THROWS_AS(rauzy_step_symbolic(Permutation::parse("1324"), RauzyMove::A),
                    RauzyUndefinedError);
    CHECK_THROWS_AS(rauzy_step_symbolic(Permutation::parse("1"), RauzyMove::A), DomainError);
}

TEST_CASE("golden rotation move word terminates at the tie") {
    // Lengths (21, 13): consecutive Fibonacci numbers. The expansion
    // alternates moves and dies when both pieces reach length 1.
    const IntervalExchange t({rat(21), rat(13)}, Permutation::parse("21"));
    CHECK(move_word_string(move_word_of(t, 6)) == "ABABAB");
    CHECK_THROWS_AS(move_word_of(t, 7), RauzyUndefinedError);
}

TEST_CASE("two-piece class: one node, two self-loops") {
    const RauzyClass cls(Permutation::parse("21"));
    CHECK(cls.nodes().size() == 1);
    CHECK(cls.edges().size() == 2);
    CHECK(cls.edge(Permutation::parse("21"), RauzyMove::A).target == Permutation::parse("21"));
    CHECK(cls.edge(Permutation::parse("21"), RauzyMove::A).visitation ==
          Matrix::from_rows({{1, 1}, {0, 1}}));
    CHECK(cls.edge(Permutation::parse("21"), RauzyMove::B).visitation ==
          Matrix::from_rows({{1, 0}, {1, 1}}));
}

TEST_CASE("three-piece class: three nodes, six edges") {
    const RauzyClass cls(Permutation::parse("321"));
    CHECK(cls.nodes().size() == 3);
    CHECK(cls.edges().size() == 6);
    CHECK(cls.contains(Permutation::parse("312")));
    CHECK(cls.contains(Permutation::parse("231")));
}

TEST_CASE("reversal class matches the frozen edge table") {
    const RauzyClass cls(Permutation::parse("4321"));
    CHECK(cls.nodes().size() == 7);
    CHECK(cls.edges().size() == 14);

    // Deterministic breadth-first discovery order (A-child before B-child).
    const char* expected_order[] = {"4321", "4132", "2431", "4213", "3142", "2413", "3241"};
    for (int i = 0; i < 7; ++i)
        CHECK(cls.nodes()[i] == Permutation::parse(expected_order[i]));

    for (const EdgeSpec& spec : kReversalEdges) {
        const RauzyEdge& e = cls.edge(Permutation::parse(spec.source), spec.move);
        CHECK(e.target == Permutation::parse(spec.target));
        CHECK(e.visitation == *spec.matrix);
        // Step matrices are unimodular; the sign is the parity of the column
        // shift (e.g. the move-A matrix out of "2431" has determinant -1).
        const BigInt det = e.visitation.determinant();
        CHECK((det == 1 || det == -1));
        CHECK(e.visitation.is_nonnegative());
    }
}

TEST_CASE("reversal class matches the dual (inverse-labeled) table") {
    const RauzyClass cls(Permutation::parse("4321"));
    for (const DualEdgeSpec& spec : kReversalEdgesDual) {
        const Permutation source = Permutation::parse(spec.source).inverse();
        const Permutation target = Permutation::parse(spec.target).inverse();
        bool found = false;
        for (const RauzyMove move : {RauzyMove::A, RauzyMove::B}) {
            const RauzyEdge& e = cls.edge(source, move);
            if (e.target == target) {
                CHECK(e.visitation == *spec.matrix);
                found = true;
                break;
            }
        }
        CHECK_MESSAGE(found, "no dual edge ", spec.source, " -> ", spec.target);
    }
}

TEST_CASE("path products along cycles give the closed forms") {
    // Three B-moves cycle 4321 -> 2431 -> 3241 -> 4321 and add the top row
    // into the bottom one.
    const PathProduct bps = path_matrix(Permutation::parse("4321"), parse_move_word("BBB"));
    CHECK(bps.end == Permutation::parse("4321"));
    CHECK(bps.matrix ==
          Matrix::from_rows({{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {1, 1, 1, 1}}));

    // Three A-moves cycle 4321 -> 4132 -> 4213 -> 4321.
    const PathProduct aps = path_matrix(Permutation::parse("4321"), parse_move_word("AAA"));
    CHECK(aps.end == Permutation::parse("4321"));
    CHECK(aps.matrix ==
          Matrix::from_rows({{1, 1, 1, 1}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}));
}

TEST_CASE("replay certifies a word against true dynamics") {
    const IntervalExchange t({rat(55, 123), rat(34, 123), rat(21, 123), rat(13, 123)},
                             Permutation::parse("4321"));
    const std::vector<RauzyMove> word = move_word_of(t, 12);
    const ReplayResult replay = apply_move_word(t, word);

    // The accumulated product maps induced lengths back to the original ones.
    const std::vector<Rational> back = replay.visitation * replay.final_exchange.lengths();
    for (int i = 0; i < 4; ++i) CHECK(back[i] == t.length(i));

    // The original lengths sit strictly inside the word's cylinder cone.
    CHECK(in_cone(replay.visitation, t.lengths(), /*strict=*/true));
    const std::vector<Rational> coords = cone_coordinates(replay.visitation, t.lengths());
    for (int i = 0; i < 4; ++i) CHECK(coords[i] == replay.final_exchange.length(i));

    // A deviating word is rejected at the first bad step.
    std::vector<RauzyMove> wrong = word;
    wrong[5] = wrong[5] == RauzyMove::A ? RauzyMove::B : RauzyMove::A;
    CHECK_THROWS_AS(apply_move_word(t, wrong), CheckError);
}

TEST_CASE("class graph renders deterministic dot") {
    const RauzyClass cls(Permutation::parse("4321"));
    const std::string dot = cls.to_dot();
    CHECK(dot.find("digraph rauzy_class") != std::string::npos);
    CHECK(dot.find("\"4321\" -> \"4132\" [label=\"A\", style=dashed];") != std::string::npos);
    CHECK(dot.find("\"4321\" -> \"2431\" [label=\"B\", style=solid];") != std::string::npos);
    CHECK(cls.to_dot() == dot);
}

TEST_CASE("class construction rejects reducible permutations") {
    CHECK_THROWS_AS(RauzyClass(Permutation::parse("2134")), DomainError);
    CHECK_THROWS_AS(RauzyClass(Permutation::parse("1234")), DomainError);
}
