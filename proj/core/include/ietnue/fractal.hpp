// Nested simplex families with trimmed refinement, exact splitting measures,
// and the ball-mass machinery behind the dimension lower bound.
//
// A family level is a set of cone cells (4x4 generator matrices); children of
// a cell extend its chain by one lower/upper block pair. The refinement rule
// trims, per parent, the cells sitting closest to the ends of each of the
// parent's two short spans ("chopping off the ends") and can also drop cells
// entering an end collar of those spans. A measure that splits
// mass evenly among the admissible children of each parent then satisfies a
// ball-mass power law whose exponent feeds the closed form 1 + a/(3b): `a`
// is the leading coefficient of the per-level count exponent (quadratic in
// the level), `b` the negated leading coefficient of the cell-size decay
// exponent (cubic model). The condition report bundles the family parameters
// (c, rho, p, h, lag) those fits produce.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ietnue/matrix.hpp"
#include "ietnue/paths.hpp"
#include "ietnue/rational.hpp"
#include "ietnue/rng.hpp"
#include "ietnue/simplex_geom.hpp"

namespace ietnue {

/// Refinement deletions. Two mechanisms, both "chopping off the ends":
///  - endpoint trims: per parent short span, remove the `endpoint_trim_count`
///    cells sitting nearest the span corners (split between the two corners),
///    so the default deletes 4 cells per parent;
///  - end collars: from `neighborhood_from_level` on, remove any cell whose
///    moved pair lands within the angular fraction `base_neighborhood` of
///    either end of a parent short span (the cell-level meaning of deleting a
///    fixed neighborhood of the two spans). Construction-scale semantics
///    start the collar only at depth five; reduced-scale families apply it
///    from level 1 and reports flag that.
struct DeletionRule {
    Rational base_neighborhood = Rational(1, 100000);
    int endpoint_trim_count = 2;
    int neighborhood_from_level = 1;
};

/// One cone cell. `t_lower`/`t_upper` are the relative positions (ratios of
/// squared sines, in [0,1]) of the cell's moved column pairs along the parent
/// short spans; the trim rule orders siblings by them.
struct FamilyCell {
    Matrix generator = Matrix::identity(4);
    int parent = -1;
    ChainBlock lower, upper;
    Rational t_lower, t_upper;
};

struct FamilyLevel {
    std::vector<FamilyCell> cells;
    // Admissible children per parent after deletions (indexed by parent cell;
    // one entry for the root at level 1). These are the exact mass
    // denominators of the splitting measure.
    std::vector<BigInt> admissible_by_parent;
    bool count_estimated = false;
    bool exhaustive = false;      // cells are the complete admissible set
    int raw_per_parent = 0;       // materialized candidates per parent
    int trimmed_per_parent = 0;   // endpoint trims applied per parent
    int neighborhood_deleted = 0; // collar deletions across the level

    BigInt admissible_total() const;
    int kept_per_parent() const; // materialized cells per parent
};

struct NestedFamily {
    ScaleProfile profile;
    DeletionRule rule;
    std::vector<FamilyLevel> levels; // levels[k-1] holds depth-k cells

    int depth() const { return static_cast<int>(levels.size()); }
    const FamilyCell& cell(int level, int index) const {
        return levels[static_cast<std::size_t>(level - 1)].cells[static_cast<std::size_t>(index)];
    }
};

/// Child candidates for one parent: materialized (lower, upper) block pairs
/// plus the true admissible population of the profile windows at this level.
struct ChildCandidates {
    std::vector<std::pair<ChainBlock, ChainBlock>> pairs;
    BigInt admissible_total = 0;
    bool estimated = false;  // population extrapolated by the quadratic law
    bool exhaustive = false; // pairs materialize the whole population
};
using SpecSource = std::function<ChildCandidates(int level, int parent_index)>;

/// Window-driven source. Enumerates the population exactly when it fits in
/// `budget`, otherwise draws `budget` seeded samples; the population size is
/// exact (window width times depth-first balanced count) while the balanced
/// count's norm window is small, and extrapolated by the R^2 growth law
/// (flagged) beyond that.
SpecSource window_spec_source(const ScaleProfile& profile, int budget, std::uint64_t seed);

/// Fixed candidate lists (keyed by level), for toy families and exact
/// conservation tests: every parent at level k receives the same candidates.
SpecSource fixed_spec_source(std::vector<std::vector<std::pair<ChainBlock, ChainBlock>>> per_level);

NestedFamily make_family(const ScaleProfile& profile, const DeletionRule& rule);

/// Append one level. Throws CheckError when deletions exhaust some parent's
/// children (the profile is too small for the rule).
void build_sk(NestedFamily& family, const SpecSource& source);

/// Mass that splits evenly among the admissible children of each parent
/// (exact rationals; mass of a cell is the product over its ancestry of
/// 1/per_parent_count). `covered` is the total mass of materialized cells:
/// exactly 1 on exhaustive levels, below 1 on sampled ones.
struct FrostmanMeasure {
    int level = 0;
    std::vector<Rational> masses;
    Rational covered;
};
FrostmanMeasure frostman_measure(const NestedFamily& family, int level);

/// One regression input: ball mass around one center at one radius.
struct BallMassPoint {
    int center = 0;
    double radius_log10 = 0.0;
    double mass_log10 = 0.0;
};

/// Least-squares line of log10 mu(B(x, r)) against log10 r.
struct BallMassFit {
    PolyFit line;
    double slope = 0.0;
    std::size_t points = 0;
    double span_decades = 0.0;
    bool span_warning = false;        // used radii spanned fewer than two decades
    std::vector<BallMassPoint> series; // the regression inputs, per (center, radius)
};

/// Ball-mass regression over the family's deepest level in the angle metric.
/// Centers are seeded points on sampled deepest-cell long segments; the mass
/// in a ball is estimated by the unbiased sampled-tree rule (per-level factor
/// population/sample) with cells weighted by the covered fraction of their
/// long segment. Radii are given as log10 values and must span >= 2 decades.
BallMassFit ball_mass_exponent(const NestedFamily& family, const FrostmanMeasure& measure,
                               int samples, const std::vector<double>& radii_log10,
                               std::uint64_t seed);

/// Analytic control with known uniform branching (an octree of dyadic cubes
/// carrying Lebesgue measure): mu(B_inf(x, r)) is an exact box volume, so the
/// fitted slope must equal the ambient dimension 3.
BallMassFit cube_ball_mass_fit(int samples, const std::vector<double>& radii_log10,
                               std::uint64_t seed);

/// The family parameter bundle (c, rho, p, h, lag) as measured:
///  (1) every cell keeps one side of length >= c (the long segment);
///  (2) per-level admissible counts are >= rho * 10^{p(k)} for the fitted
///      quadratic p — `count_leading` is its leading coefficient (the `a`);
///  (3) cells stay clear of the boundaries of their lag-removed ancestors,
///      and the within-group decay fit supplies the cubic size model h —
///      `decay_leading` is its leading coefficient (the target -b).
struct ConditionReport {
    double min_long_side_log10 = 0.0; // log10 sine of the shortest long segment
    Rational long_side_c;             // exact sin^2 of that segment

    std::vector<double> count_log10;  // per level k = 1..points
    PolyFit count_fit;                // quadratic
    double count_leading = 0.0;       // fitted a
    double count_rho_log10 = 0.0;     // log10 prefactor making every level conform
    bool counts_estimated = false;

    int clearance_lag = 2;
    std::vector<std::pair<int, double>> clearance_log10; // (k, min clearance)
    PolyFit decay_fit;                                   // cubic size model
    double decay_leading = 0.0;                          // fitted -b

    bool disjoint = true;
    int offending_level = -1;
    std::pair<int, int> offending_pair{-1, -1};

    bool neighborhood_applied_early = false; // collar active before level 5
};

/// Measure conditions (1)-(3) on a built family. Count exponents extend past
/// the materialized depth by window arithmetic (at least five levels); the
/// decay fit samples chains of the same profile at depths 1..4.
ConditionReport verify_conditions(const NestedFamily& family);

/// Per-level admissible count exponents (log10), k = 1..kmax, from pure
/// window arithmetic. Sets `estimated` when any balanced count used the
/// growth-law extrapolation.
std::vector<double> level_count_exponents(const ScaleProfile& profile, int kmax,
                                          bool& estimated);

/// The dimension lower bound 1 + a/(3b) as an exact rational. Requires
/// a >= 0 and b > 0.
Rational dimension_bound(const Rational& a, const Rational& b);

/// JSON for one materialized level (decimal-string integers; embeds the
/// level shape and rule so callers can persist levels to files).
std::string level_to_json(const NestedFamily& family, int level);

} // namespace ietnue
