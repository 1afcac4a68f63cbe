// Projective geometry of chain columns, and the quantitative certificates the
// construction rests on: column-size sandwich bounds, angle-decay laws, and
// the separation certificate for the two limit segments.
//
// Directions are compared by the exact squared sine of their angle; distances
// to spans come from Gram determinants. Everything that is *asserted* is
// computed in exact rational arithmetic; floating point appears only in
// logarithmic diagnostics.
#pragma once

#include <vector>

#include "ietnue/matrix.hpp"
#include "ietnue/paths.hpp"
#include "ietnue/rational.hpp"

namespace ietnue {

/// sin^2 of the angle between integer vectors: 1 - <v,w>^2/(|v|^2 |w|^2).
Rational sin2_angle(const std::vector<BigInt>& v, const std::vector<BigInt>& w);

/// sin^2 of the angle between v and span{w1, w2} (Gram determinant ratio).
/// Throws DomainError when w1, w2 are linearly dependent.
Rational sin2_to_span(const std::vector<BigInt>& v, const std::vector<BigInt>& w1,
                      const std::vector<BigInt>& w2);

/// Smallest sin^2 from either column of one pair to the span of the other
/// pair, both ways: an exact angular diagnostic for how far the two column
/// pairs {0,1} and {2,3} are from sharing a plane. (For the separation
/// *claim* use the simplex segment distance below; the angular quantity
/// collapses once each pair has nearly merged.)
Rational group_separation_sin2(const Matrix& m);

/// Column normalized to the standard simplex (entries divided by the sum).
/// Throws DomainError when the column sum is not positive.
std::vector<Rational> simplex_column(const Matrix& m, int column);

/// Exact L1 distance between the segments [p0,p1] and [q0,q1] in R^n.
/// The objective is convex piecewise linear in the two segment parameters,
/// so the minimum is attained at a vertex of the kink-line arrangement:
/// those candidates are enumerated and evaluated exactly.
Rational segment_l1_distance(const std::vector<Rational>& p0, const std::vector<Rational>& p1,
                             const std::vector<Rational>& q0, const std::vector<Rational>& q1);

/// Simplex L1 distance between the segment spanned by normalized columns
/// {0,1} and the one spanned by normalized columns {2,3}.
Rational group_separation_l1(const Matrix& m);

/// sin^2 of the smallest angle between a vector in cone(c0,c1) and one in
/// cone(c2,c3): the angle metric between the two projective segments. The
/// minimum is attained either between two columns or at a column whose
/// orthogonal projection onto the opposite span lands inside that cone;
/// both candidate families are evaluated exactly.
Rational group_separation_angle(const Matrix& m);

/// Column-sum sandwich: every column sum of the chain matrix should lie in
/// [P, mult^{2k+1} * P] with P the product of base^{e_a(slot) + e_r(slot)}
/// over the relevant side's slots (lower-route slots feed columns 2,3;
/// upper-route slots feed columns 0,1).
struct ColumnBound {
    int column = 0;
    BigInt measured, lower, upper;
    bool pass = false;
};
struct ColumnSumReport {
    std::vector<ColumnBound> bounds; // columns 0..3
    bool pair01_pass = false;
    bool pair23_pass = false;
    bool all_pass = false;
};
ColumnSumReport check_column_sums(const Matrix& m, const ChainSpec& spec);

/// Decay of the within-pair angle when one more block is appended to m.
/// Exact distances enter; the summary exposes base-10 logs plus the tightest
/// constant D' under two scaling models:
///   linear    - mixed-count object   dist ~ d_before / (|A|^2 r),
///               diagnosed via the ratio on doubling r (expect ~ 1/2)
///   quadratic - same-count object    dist ~ d_before / (|A|^2 r^2),
///               diagnosed via the ratio on doubling r (expect ~ 1/4).
struct AngleDecayReport {
    double log10_d_before = 0;   // sin of the pair angle of m (log10)
    double log10_d_after_r = 0;  // after appending the block with count r
    double log10_d_after_2r = 0; // after appending the block with count 2r
    double log10_d_mixed = 0;    // one column from the 2r block, one from the r block
    double log10_d_mixed_2 = 0;  // one column from the 4r block, one from the 2r block
    double ratio_same = 0;       // d_after_2r / d_after_r
    double ratio_mixed = 0;      // d_mixed_2 / d_mixed
    double d_prime_linear = 0;   // tightest D' for the mixed sandwich
    double d_prime_quadratic = 0;// tightest D' for the same-count sandwich
};
AngleDecayReport check_angle_decay(const Matrix& m, const Matrix& a, const BigInt& r,
                                   BlockSide side);

/// Separation certificate for the limit segments of a chain, from the prefix
/// products after each depth. Two exact certificate chains are evaluated
/// (the step drift applied from depth 2, and conservatively from depth 1),
/// both with per-step drift 2 * (mult/base)^{2j}. Measurements use the
/// segment angle metric (primary) with the simplex L1 distance as a second
/// diagnostic; drift inequalities are certified with exact square-root
/// bounds on the angular sines.
struct SeparationReport {
    int depth = 0;
    Rational base_claim;                   // claimed base separation (1/10)
    Rational floor_bound;                  // 1/900
    Rational certified_display;            // base - 2 * sum_{j=2}^{k} q^j
    Rational certified_conservative;       // base - 2 * sum_{j=1}^{k-1} q^j
    bool certificates_above_floor = false;

    std::vector<Rational> angle_sin2;      // segment angle metric per depth
    std::vector<double> angle_log10;       // same, log10 of the sine
    std::vector<Rational> l1_dist;         // simplex L1 diagnostic per depth
    std::vector<double> l1_log10;          // same, log10
    bool measured_base_above_claim = false;// depth-1 angle sine > base_claim?
    std::vector<bool> drift_inequality_ok; // d_{j+1} > d_j - drift_j
    bool nested = false;                   // each depth's columns lie in the
                                           // previous depth's cone
};
SeparationReport span_separation_bound(const std::vector<Matrix>& prefixes,
                                       long base = 10, long multiplier = 2);

/// Least-squares polynomial fit (used on log10 data series).
struct PolyFit {
    std::vector<double> coeffs; // degree+1 entries, constant term first
    double max_residual = 0;
};
PolyFit fit_polynomial(const std::vector<std::pair<double, double>>& points, int degree);

/// Sample chains at several seeds, measure the within-{0,1} pair angle at
/// each depth, and fit a cubic in the depth. The leading coefficient is the
/// decay signature of the profile.
struct DecayFitReport {
    std::vector<double> mean_log10_d01;  // per depth 1..kmax (sin distance)
    std::vector<double> mean_log10_d23;  // companion pair at half-depth points
    PolyFit cubic;                       // fit of mean_log10_d01 vs depth
    double leading = 0;                  // cubic.coeffs[3]
};
DecayFitReport within_group_decay_fit(const ScaleProfile& profile, int kmax,
                                      const std::vector<std::uint64_t>& seeds);

} // namespace ietnue
