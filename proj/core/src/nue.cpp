#include "ietnue/nue.hpp"

#include <algorithm>
#include <utility>

#include "ietnue/errors.hpp"
#include "ietnue/rauzy.hpp"
#include "ietnue/simplex_geom.hpp"

namespace ietnue {

namespace {

double log10_sin(const Rational& sin2) { return 0.5 * log10_approx(sin2); }

/// First `take` letters of a ladder word without materializing the rest.
std::vector<RauzyMove> ladder_word_prefix(LadderKind kind, const BigInt& n, long take) {
    const bool lower = kind == LadderKind::Lower1 || kind == LadderKind::Lower2;
    const RauzyMove outer = (kind == LadderKind::Lower1 || kind == LadderKind::Upper1)
                                ? RauzyMove::B
                                : RauzyMove::A;
    const RauzyMove inner = outer == RauzyMove::B ? RauzyMove::A : RauzyMove::B;
    const BigInt total = lower ? BigInt(3 * n) : BigInt(n + 3);
    std::vector<RauzyMove> prefix;
    for (BigInt i = 0; i < total && static_cast<long>(prefix.size()) < take; i += 1) {
        if (lower) {
            prefix.push_back(outer);
        } else {
            const bool is_outer = i < 2 || i == total - 1;
            prefix.push_back(is_outer ? outer : inner);
        }
    }
    return prefix;
}

} // namespace

LimitSegmentReport limit_segment(const Matrix& chain, const Rational& threshold_sin2) {
    if (chain.dim() != 4) throw DomainError("limit_segment: need a 4x4 chain matrix");
    std::vector<std::vector<BigInt>> cols;
    for (int j = 0; j < 4; ++j) cols.push_back(chain.column(j));

    // Union-find on four columns, joining pairs below the angle threshold.
    std::vector<int> parent = {0, 1, 2, 3};
    const auto find = [&parent](int j) {
        while (parent[j] != j) j = parent[j];
        return j;
    };
    LimitSegmentReport rep;
    bool have_within = false, have_between = false;
    std::vector<std::vector<Rational>> pair_sin2(4, std::vector<Rational>(4));
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            pair_sin2[i][j] = sin2_angle(cols[i], cols[j]);
            if (pair_sin2[i][j] < threshold_sin2) parent[find(j)] = find(i);
        }
    for (int root = 0; root < 4; ++root) {
        if (find(root) != root) continue;
        std::vector<int> members;
        for (int j = 0; j < 4; ++j)
            if (find(j) == root) members.push_back(j);
        rep.clusters.push_back(std::move(members));
    }
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            const double l = log10_sin(pair_sin2[i][j]);
            if (find(i) == find(j)) {
                rep.max_within_log10 = have_within ? std::max(rep.max_within_log10, l) : l;
                have_within = true;
            } else {
                rep.min_between_log10 =
                    have_between ? std::min(rep.min_between_log10, l) : l;
                have_between = true;
            }
        }
    if (rep.clusters.size() != 2 || rep.clusters[0].size() != 2)
        throw CheckError("limit_segment: columns do not split into two pairs at the "
                         "given angle threshold");

    const auto barycenter = [&chain](const std::vector<int>& members) {
        std::vector<Rational> b(4, Rational(0));
        for (const int j : members) {
            const std::vector<Rational> c = simplex_column(chain, j);
            for (int i = 0; i < 4; ++i) b[i] += c[i] / Rational(2);
        }
        return b;
    };
    rep.endpoint_first = barycenter(rep.clusters[0]);
    rep.endpoint_second = barycenter(rep.clusters[1]);
    return rep;
}

std::vector<Rational> witness_lengths(const Matrix& chain, const Rational& mix,
                                      const Rational& skew) {
    if (chain.dim() != 4) throw DomainError("witness_lengths: need a 4x4 chain matrix");
    if (!(mix > Rational(0)) || !(mix < Rational(1)))
        throw DomainError("witness_lengths: mix must lie strictly between 0 and 1");
    if (skew < Rational(0) || !(skew < Rational(1, 2)))
        throw DomainError("witness_lengths: skew must lie in [0, 1/2)");
    const Rational weights[4] = {mix * (Rational(1) - skew), mix * skew,
                                 (Rational(1) - mix) * (Rational(1) - skew),
                                 (Rational(1) - mix) * skew};
    std::vector<Rational> lambda(4, Rational(0));
    for (int j = 0; j < 4; ++j) {
        const std::vector<Rational> c = simplex_column(chain, j);
        for (int i = 0; i < 4; ++i) lambda[i] += weights[j] * c[i];
    }
    return lambda;
}

std::vector<ChainFactor> chain_factors(const ChainSpec& spec) {
    spec.validate();
    std::vector<ChainFactor> factors;
    for (const ChainBlock& b : spec.blocks) {
        for (const auto& [kind, n] : block_ladder_factors(b.a, b.r, b.side(spec.profile))) {
            ChainFactor f{kind, n, ladder_matrix(kind, n), BigInt(0)};
            const bool lower = kind == LadderKind::Lower1 || kind == LadderKind::Lower2;
            f.steps = lower ? BigInt(3 * n) : BigInt(n + 3);
            factors.push_back(std::move(f));
        }
    }
    return factors;
}

ReplayReport replay_chain(const ChainSpec& spec, const std::vector<Rational>& lengths,
                          long spot_limit) {
    if (lengths.size() != 4) throw DomainError("replay_chain: need four lengths");
    const std::vector<ChainFactor> factors = chain_factors(spec);
    const Permutation root = Permutation::parse("4321");

    ReplayReport rep;
    rep.factors_total = factors.size();
    for (const ChainFactor& f : factors) rep.steps_total += f.steps;

    std::vector<Rational> v = lengths;
    for (const ChainFactor& f : factors) {
        // Independent cross-check: the elementary dynamics must open with the
        // factor's first letters. Each ladder word is a loop at the root
        // permutation, so every factor starts there.
        const std::vector<RauzyMove> prefix = ladder_word_prefix(f.kind, f.count, spot_limit);
        IntervalExchange t(v, root);
        for (const RauzyMove expected : prefix) {
            const RauzyStep step = rauzy_step(t);
            if (step.move != expected)
                throw CheckError("replay_chain: dynamics deviate from the chain word");
            t = step.next;
            ++rep.spot_steps;
        }

        std::vector<Rational> u = cone_coordinates(f.matrix, v);
        const bool strict =
            std::all_of(u.begin(), u.end(), [](const Rational& x) { return x > Rational(0); });
        if (!strict) break;
        ++rep.factors_certified;
        rep.steps_certified += f.steps;
        v = std::move(u);
    }
    rep.followed = rep.factors_certified == rep.factors_total;
    return rep;
}

std::vector<Rational> control_lengths(const Permutation& root, long word_length,
                                      SeededRng& rng) {
    if (word_length < 1) throw DomainError("control_lengths: need a positive word length");
    std::vector<RauzyMove> word;
    word.reserve(static_cast<std::size_t>(word_length));
    for (long i = 0; i < word_length; ++i)
        word.push_back(rng.uniform_u64(0, 1) ? RauzyMove::B : RauzyMove::A);
    const PathProduct path = path_matrix(root, word);
    const int d = path.matrix.dim();
    BigInt total = 0;
    std::vector<BigInt> mass(d, BigInt(0));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            mass[i] += path.matrix.at(i, j);
            total += path.matrix.at(i, j);
        }
    std::vector<Rational> lengths;
    lengths.reserve(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) lengths.push_back(Rational(mass[i]) / Rational(total));
    return lengths;
}

DivergenceReport divergence_demo(const IntervalExchange& witness,
                                 const IntervalExchange& control, const Rational& x0,
                                 long steps, long max_bits) {
    if (steps < 2) throw DomainError("divergence_demo: need at least two steps");
    const IntervalExchange w = witness.normalized();
    const IntervalExchange c = control.normalized();

    DivergenceReport rep;
    rep.witness_half = orbit_frequencies(w, x0, steps / 2, max_bits);
    rep.witness_full = orbit_frequencies(w, x0, steps, max_bits);
    rep.control_half = orbit_frequencies(c, x0, steps / 2, max_bits);
    rep.control_full = orbit_frequencies(c, x0, steps, max_bits);

    const auto l1 = [](const std::vector<Rational>& a, const std::vector<Rational>& b) {
        Rational sum(0);
        for (std::size_t i = 0; i < a.size(); ++i) {
            Rational d = a[i] - b[i];
            if (d < Rational(0)) d = -d;
            sum += d;
        }
        return sum;
    };
    rep.witness_drift = l1(rep.witness_half, rep.witness_full);
    rep.control_drift = l1(rep.control_half, rep.control_full);
    if (rep.control_drift == Rational(0))
        throw CheckError("divergence_demo: control drift is exactly zero");
    rep.ratio = Rational(rep.witness_drift / rep.control_drift).get_d();
    return rep;
}

} // namespace ietnue
