// Right-endpoint induction on interval exchanges.
//
// One step compares the last subinterval's length lambda_{d-1} with the length
// lambda_a of the piece that lands last (a = pi^{-1}(d-1)). The shorter of the
// two is swallowed: move A when lambda_{d-1} is strictly shorter, move B when
// lambda_a is. Each step yields the induced exchange plus a unimodular
// visitation matrix M with lambda_old = M * lambda_new, so products of step
// matrices pull deep renormalization data back to the original coordinates.
// A tie between the two critical lengths leaves the step undefined.
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ietnue/iet.hpp"
#include "ietnue/matrix.hpp"
#include "ietnue/permutation.hpp"

namespace ietnue {

enum class RauzyMove { A, B };

char move_char(RauzyMove m);
std::vector<RauzyMove> parse_move_word(std::string_view text); // e.g. "ABBA"
std::string move_word_string(const std::vector<RauzyMove>& word);

/// (permutation, move) part of a step, independent of lengths.
struct SymbolicStep {
    Permutation target;
    Matrix visitation;
};
SymbolicStep rauzy_step_symbolic(const Permutation& pi, RauzyMove move);

/// Full step on an exchange. Throws RauzyUndefinedError on a critical tie.
struct RauzyStep {
    RauzyMove move;
    IntervalExchange next;
    Matrix visitation;
};
RauzyStep rauzy_step(const IntervalExchange& t);

/// First `count` moves of the induction orbit of t.
std::vector<RauzyMove> move_word_of(const IntervalExchange& t, long count);

/// Replay a prescribed word against the true dynamics. Throws CheckError as
/// soon as the dynamics disagree with the word (and RauzyUndefinedError on a
/// tie). Returns the final induced exchange and the accumulated visitation
/// product (new step factors multiply on the right).
struct ReplayResult {
    IntervalExchange final_exchange;
    Matrix visitation;
};
ReplayResult apply_move_word(const IntervalExchange& t, const std::vector<RauzyMove>& word);

/// One labeled edge of a class graph.
struct RauzyEdge {
    Permutation source;
    RauzyMove move;
    Permutation target;
    Matrix visitation;
};

/// The closure of an irreducible permutation under both symbolic moves.
/// Nodes are listed in breadth-first discovery order (A-child before B-child);
/// edges carry the step matrices.
class RauzyClass {
public:
    explicit RauzyClass(const Permutation& root);

    const std::vector<Permutation>& nodes() const { return nodes_; }
    const std::vector<RauzyEdge>& edges() const { return edges_; }

    bool contains(const Permutation& pi) const;
    const RauzyEdge& edge(const Permutation& source, RauzyMove move) const;

    /// Graphviz rendering; A-edges dashed, B-edges solid, deterministic order.
    std::string to_dot() const;

private:
    std::vector<Permutation> nodes_;
    std::vector<RauzyEdge> edges_;
};

/// Product of step matrices along `word` starting at `start`, plus the end
/// permutation. The product is the cone map of the cylinder selected by the
/// word: length vectors following the word are exactly M * (positive cone).
struct PathProduct {
    Matrix matrix;
    Permutation end;
};
PathProduct path_matrix(const Permutation& start, const std::vector<RauzyMove>& word);

/// Coordinates of `lengths` in the cone of the path product (exact solve of
/// M u = lengths). All coordinates strictly positive means the length vector
/// lies in the open cylinder cone.
std::vector<Rational> cone_coordinates(const Matrix& m, const std::vector<Rational>& lengths);
bool in_cone(const Matrix& m, const std::vector<Rational>& lengths, bool strict);

} // namespace ietnue
