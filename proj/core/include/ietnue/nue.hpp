// Non-convergent length vectors built from deep chains.
//
// The four column directions of a deep chain matrix collapse, in the angle
// metric, onto two endpoints of a limit segment. A length vector on that
// segment defines an exchange whose induction follows the chain's entire
// move word; its orbit keeps shifting allegiance between the two endpoint
// frequency vectors instead of equidistributing. This header provides the
// segment extraction, the witness vectors, a certified fast replay of the
// (astronomically long) move word, and the visit-frequency drift diagnostic
// that separates a witness from a uniquely ergodic control at equal orbit
// length.
#pragma once

#include <cstdint>
#include <vector>

#include "ietnue/iet.hpp"
#include "ietnue/matrix.hpp"
#include "ietnue/paths.hpp"
#include "ietnue/rational.hpp"

namespace ietnue {

/// Column directions of a chain matrix clustered by the angle metric.
struct LimitSegmentReport {
    std::vector<std::vector<int>> clusters; // column indices, ordered groups
    double max_within_log10 = 0.0;  // log10 sine of the widest within-cluster gap
    double min_between_log10 = 0.0; // log10 sine of the tightest cross-cluster gap
    std::vector<Rational> endpoint_first;  // cluster barycenters in simplex
    std::vector<Rational> endpoint_second; // coordinates (entries sum to 1)
};

/// Cluster the four columns at sine-squared threshold `threshold_sin2`
/// (default sine 1e-6). A deep chain collapses columns {0,1} and {2,3} onto
/// the two segment endpoints; anything else throws CheckError.
LimitSegmentReport limit_segment(const Matrix& chain,
                                 const Rational& threshold_sin2 = Rational(1,
                                                                           1000000000000L));

/// Length vector mix * p + (1 - mix) * q for the two endpoint barycenters,
/// realized as an explicit convex combination of the normalized columns with
/// weight split (1 - skew, skew) inside each pair. Any skew > 0 places the
/// vector in the open cone of the chain, making every induction comparison
/// strict; skew = 0 gives a point exactly on the segment (the replay then
/// certifies all but the last few steps). Requires mix in (0, 1) and skew in
/// [0, 1/2); entries sum to 1.
std::vector<Rational> witness_lengths(const Matrix& chain, const Rational& mix,
                                      const Rational& skew = Rational(1, 1000000000));

/// One closed-form factor of a chain's move word.
struct ChainFactor {
    LadderKind kind;
    BigInt count;  // ladder parameter n
    Matrix matrix; // ladder_matrix(kind, count)
    BigInt steps;  // elementary moves contributed (3n, or n + 3 for upper kinds)
};

/// The chain's blocks flattened to ladder factors (matrices multiply, left to
/// right, to chain_matrix(spec)).
std::vector<ChainFactor> chain_factors(const ChainSpec& spec);

/// Certified fast replay of a chain's move word against a length vector.
///
/// Factors are peeled by exact solve; strictly positive cone coordinates at
/// every peel force the elementary dynamics to follow the factor's word
/// letter by letter (each comparison's outcome equals the sign of one
/// coordinate of a later intermediate vector, and those are positive
/// combinations of the final coordinates). The first letters of each factor
/// are additionally replayed against rauzy_step as an independent check;
/// a mismatch throws CheckError.
struct ReplayReport {
    std::size_t factors_total = 0;
    std::size_t factors_certified = 0; // longest prefix with strict solves
    BigInt steps_total = 0;            // elementary length of the whole word
    BigInt steps_certified = 0;        // elementary length of the certified prefix
    std::size_t spot_steps = 0;        // elementary steps replayed explicitly
    bool followed = false;             // whole word certified
};
ReplayReport replay_chain(const ChainSpec& spec, const std::vector<Rational>& lengths,
                          long spot_limit = 8);

/// Length vector deep inside a generic induction cylinder: the column-mass
/// vector of the path matrix of a seeded random word from the root
/// permutation, normalized to unit total. A rational exchange with a small
/// common denominator D closes every orbit within ~D steps (its frequency
/// drift collapses to exactly zero), so a convergence control must carry a
/// cylinder norm far above the orbit length; `word_length` tunes that norm.
std::vector<Rational> control_lengths(const Permutation& root, long word_length,
                                      SeededRng& rng);

/// Drift of empirical visit frequencies between the half orbit and the full
/// orbit of 0+ (both exchanges are normalized to unit total; frequencies are
/// exact rationals). A convergent orbit has vanishing drift; a witness keeps
/// a macroscopic gap. `ratio` is witness drift over control drift.
struct DivergenceReport {
    std::vector<Rational> witness_half, witness_full;
    std::vector<Rational> control_half, control_full;
    Rational witness_drift;
    Rational control_drift;
    double ratio = 0.0;
};
DivergenceReport divergence_demo(const IntervalExchange& witness,
                                 const IntervalExchange& control, const Rational& x0,
                                 long steps, long max_bits = 1L << 22);

} // namespace ietnue
