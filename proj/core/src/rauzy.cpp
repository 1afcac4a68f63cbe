#include "ietnue/rauzy.hpp"

#include <deque>
#include <map>
#include <sstream>

#include "ietnue/errors.hpp"

namespace ietnue {

char move_char(RauzyMove m) { return m == RauzyMove::A ? 'A' : 'B'; }

std::vector<RauzyMove> parse_move_word(std::string_view text) {
    std::vector<RauzyMove> word;
    word.reserve(text.size());
    for (const char c : text) {
        if (c == 'A' || c == 'a') word.push_back(RauzyMove::A);
        else if (c == 'B' || c == 'b') word.push_back(RauzyMove::B);
        else throw DomainError("parse_move_word: expected only A/B letters");
    }
    return word;
}

std::string move_word_string(const std::vector<RauzyMove>& word) {
    std::string out;
    out.reserve(word.size());
    for (const RauzyMove m : word) out.push_back(move_char(m));
    return out;
}

SymbolicStep rauzy_step_symbolic(const Permutation& pi, RauzyMove move) {
    const int d = pi.size();
    if (d < 2) throw DomainError("rauzy_step_symbolic: need at least two pieces");
    const int t = d - 1;          // last position
    const int a = pi.preimage(t); // position whose piece lands last
    if (a == t)
        throw RauzyUndefinedError("rauzy_step_symbolic: last piece fixed, step undefined");

    std::vector<int> images(d);
    Matrix m(d);
    if (move == RauzyMove::A) {
        // The last piece is swallowed by piece a: it re-enters as a new piece
        // immediately right of a, and everything after shifts by one.
        for (int j = 0; j < d; ++j) {
            if (j <= a) images[j] = pi.image(j);
            else if (j == a + 1) images[j] = pi.image(t);
            else images[j] = pi.image(j - 1);
        }
        for (int j = 0; j < d; ++j) {
            if (j <= a) m.at(j, j) = 1;
            else if (j == a + 1) { m.at(a, j) = 1; m.at(t, j) = 1; }
            else m.at(j - 1, j) = 1;
        }
    } else {
        // Piece a's image is swallowed: positions keep their pieces, images of
        // the pieces that landed between pi(t) and the end rotate up by one.
        const int vd = pi.image(t);
        for (int j = 0; j < d; ++j) {
            const int v = pi.image(j);
            if (v <= vd) images[j] = v;
            else if (v < t) images[j] = v + 1;
            else images[j] = vd + 1;
        }
        m = Matrix::elementary(d, t, a);
    }
    return SymbolicStep{Permutation(std::move(images)), std::move(m)};
}

RauzyStep rauzy_step(const IntervalExchange& iet) {
    const int d = iet.size();
    if (d < 2) throw DomainError("rauzy_step: need at least two pieces");
    const Permutation& pi = iet.permutation();
    const int t = d - 1;
    const int a = pi.preimage(t);
    if (a == t)
        throw RauzyUndefinedError("rauzy_step: last piece fixed, step undefined");
    if (iet.length(t) == iet.length(a))
        throw RauzyUndefinedError("rauzy_step: critical lengths coincide");

    const RauzyMove move = iet.length(t) < iet.length(a) ? RauzyMove::A : RauzyMove::B;
    SymbolicStep sym = rauzy_step_symbolic(pi, move);

    std::vector<Rational> next(d);
    if (move == RauzyMove::A) {
        for (int i = 0; i < d; ++i) {
            if (i < a) next[i] = iet.length(i);
            else if (i == a) next[i] = iet.length(a) - iet.length(t);
            else if (i == a + 1) next[i] = iet.length(t);
            else next[i] = iet.length(i - 1);
        }
    } else {
        for (int i = 0; i < d; ++i) next[i] = iet.length(i);
        next[t] = iet.length(t) - iet.length(a);
    }
    return RauzyStep{move, IntervalExchange(std::move(next), sym.target),
                     std::move(sym.visitation)};
}

std::vector<RauzyMove> move_word_of(const IntervalExchange& t, long count) {
    std::vector<RauzyMove> word;
    word.reserve(static_cast<std::size_t>(count));
    IntervalExchange cur = t;
    for (long i = 0; i < count; ++i) {
        RauzyStep step = rauzy_step(cur);
        word.push_back(step.move);
        cur = std::move(step.next);
    }
    return word;
}

ReplayResult apply_move_word(const IntervalExchange& t, const std::vector<RauzyMove>& word) {
    IntervalExchange cur = t;
    Matrix product = Matrix::identity(t.size());
    for (std::size_t i = 0; i < word.size(); ++i) {
        RauzyStep step = rauzy_step(cur);
        if (step.move != word[i])
            throw CheckError("apply_move_word: dynamics diverge from word at step " +
                             std::to_string(i) + " (expected " + move_char(word[i]) +
                             std::string(", got ") + move_char(step.move) + ")");
        product = product * step.visitation;
        cur = std::move(step.next);
    }
    return ReplayResult{std::move(cur), std::move(product)};
}

RauzyClass::RauzyClass(const Permutation& root) {
    if (!root.is_irreducible())
        throw DomainError("RauzyClass: root permutation is reducible");
    std::map<Permutation, int> seen;
    std::deque<Permutation> queue;
    seen.emplace(root, 0);
    nodes_.push_back(root);
    queue.push_back(root);
    while (!queue.empty()) {
        const Permutation pi = queue.front();
        queue.pop_front();
        for (const RauzyMove move : {RauzyMove::A, RauzyMove::B}) {
            SymbolicStep step = rauzy_step_symbolic(pi, move);
            if (seen.emplace(step.target, static_cast<int>(nodes_.size())).second) {
                nodes_.push_back(step.target);
                queue.push_back(step.target);
            }
            edges_.push_back(RauzyEdge{pi, move, std::move(step.target),
                                       std::move(step.visitation)});
        }
    }
}

bool RauzyClass::contains(const Permutation& pi) const {
    for (const Permutation& p : nodes_)
        if (p == pi) return true;
    return false;
}

const RauzyEdge& RauzyClass::edge(const Permutation& source, RauzyMove move) const {
    for (const RauzyEdge& e : edges_)
        if (e.source == source && e.move == move) return e;
    throw DomainError("RauzyClass::edge: no such edge " + source.to_string());
}

std::string RauzyClass::to_dot() const {
    std::ostringstream out;
    out << "digraph rauzy_class {\n  rankdir=LR;\n";
    for (const Permutation& p : nodes_)
        out << "  \"" << p.to_string() << "\";\n";
    for (const RauzyEdge& e : edges_) {
        out << "  \"" << e.source.to_string() << "\" -> \"" << e.target.to_string()
            << "\" [label=\"" << move_char(e.move) << "\", style="
            << (e.move == RauzyMove::A ? "dashed" : "solid") << "];\n";
    }
    out << "}\n";
    return out.str();
}

PathProduct path_matrix(const Permutation& start, const std::vector<RauzyMove>& word) {
    Permutation cur = start;
    Matrix product = Matrix::identity(start.size());
    for (const RauzyMove move : word) {
        SymbolicStep step = rauzy_step_symbolic(cur, move);
        product = product * step.visitation;
        cur = std::move(step.target);
    }
    return PathProduct{std::move(product), std::move(cur)};
}

std::vector<Rational> cone_coordinates(const Matrix& m, const std::vector<Rational>& lengths) {
    return solve_exact(m, lengths);
}

bool in_cone(const Matrix& m, const std::vector<Rational>& lengths, bool strict) {
    const std::vector<Rational> u = cone_coordinates(m, lengths);
    for (const Rational& v : u) {
        if (strict ? (v <= 0) : (v < 0)) return false;
    }
    return true;
}

} // namespace ietnue
