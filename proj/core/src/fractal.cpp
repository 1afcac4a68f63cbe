#include "ietnue/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "ietnue/errors.hpp"
#include "ietnue/sl2.hpp"

namespace ietnue {

namespace {

BigInt dot(const std::vector<BigInt>& v, const std::vector<BigInt>& w) {
    BigInt s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * w[i];
    return s;
}

Rational make_ratio(const BigInt& num, const BigInt& den) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

/// sin^2 from v to span{w1, w2, w3} (Gram determinant ratio, as in the
/// two-vector case but one dimension up). Used against cell facets.
Rational sin2_to_facet(const std::vector<BigInt>& v, const std::vector<BigInt>& w1,
                       const std::vector<BigInt>& w2, const std::vector<BigInt>& w3) {
    const BigInt vv = dot(v, v);
    if (vv == 0) throw DomainError("sin2_to_facet: zero vector");
    const std::vector<const std::vector<BigInt>*> w{&w1, &w2, &w3};
    Matrix g3(3);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
            g3.at(i, j) = dot(*w[i], *w[j]);
            g3.at(j, i) = g3.at(i, j);
        }
    const BigInt det3 = g3.determinant();
    if (det3 == 0) throw DomainError("sin2_to_facet: facet vectors are dependent");
    Matrix g4(4);
    for (int i = 0; i < 3; ++i) {
        for (int j = i; j < 3; ++j) {
            g4.at(i, j) = g3.at(i, j);
            g4.at(j, i) = g3.at(i, j);
        }
        g4.at(i, 3) = dot(*w[i], v);
        g4.at(3, i) = g4.at(i, 3);
    }
    g4.at(3, 3) = vv;
    return make_ratio(g4.determinant(), det3 * vv);
}

std::vector<BigInt> pair_mid(const Matrix& m, int c0, int c1) {
    std::vector<BigInt> v(static_cast<std::size_t>(m.dim()));
    for (int i = 0; i < m.dim(); ++i) v[static_cast<std::size_t>(i)] = m.at(i, c0) + m.at(i, c1);
    return v;
}

/// Relative position (ratio of squared sines) of direction `mid` along the
/// stretch between `from` and `to`: 0 at `from`, 1 at `to`. Monotone in the
/// true position, which is all the trim ordering needs.
Rational span_position(const std::vector<BigInt>& mid, const std::vector<BigInt>& from,
                       const std::vector<BigInt>& to) {
    const Rational sa = sin2_angle(mid, from);
    const Rational sb = sin2_angle(mid, to);
    const Rational sum = sa + sb;
    if (sum == 0) throw DomainError("span_position: endpoints coincide");
    return sa / sum;
}

// ---------------------------------------------------------------------------
// Balanced shear-word counting for the admissible populations.
//
// Blocks take shear words that end with the lower shear (the assembly needs a
// trailing lower move), so the population of a norm window [lo, hi] is the
// number of balanced words with norm in the window and a lower last letter.
// Small windows are counted by the same depth-first walk the enumeration
// uses; large ones extrapolate the R^2 growth law from an exactly counted
// calibration norm (callers see the `estimated` flag).
// ---------------------------------------------------------------------------

constexpr long kExactWalkCap = 4000;
constexpr long kCalibrationNorm = 512;

void walk_window(const Matrix& a, bool last_lower, const BigInt& lo, const BigInt& hi,
                 const Rational& balance, BigInt& count) {
    if (matrix_norm(a) > hi) return;
    if (last_lower && matrix_norm(a) >= lo && is_balanced(a, balance)) count += 1;
    walk_window(a * shear_lower(), true, lo, hi, balance, count);
    walk_window(a * shear_upper(), false, lo, hi, balance, count);
}

BigInt count_window_exact(const BigInt& lo, const BigInt& hi, const Rational& balance) {
    BigInt count = 0;
    walk_window(Matrix::identity(2), false, lo, hi, balance, count);
    return count;
}

BigInt window_density_calibration(const Rational& balance) {
    static std::map<std::string, BigInt> cache;
    const std::string key = to_string(balance);
    const auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const BigInt c = count_window_exact(BigInt(1), BigInt(kCalibrationNorm), balance);
    cache.emplace(key, c);
    return c;
}

BigInt count_shear_window(const BigInt& lo, const BigInt& hi, const Rational& balance,
                          bool& estimated) {
    if (hi <= kExactWalkCap) return count_window_exact(lo, hi, balance);
    estimated = true;
    const BigInt c = window_density_calibration(balance);
    const BigInt norm2 = BigInt(kCalibrationNorm) * BigInt(kCalibrationNorm);
    return c * (hi * hi - lo * lo) / norm2;
}

bool ends_with_lower(const Matrix& a) {
    // a = a' * L with a' nonnegative iff subtracting column 1 from column 0
    // stays nonnegative (and a is not the identity).
    return a.at(0, 0) >= a.at(0, 1) && a.at(1, 0) >= a.at(1, 1) &&
           !(a == Matrix::identity(2));
}

struct SlotPopulation {
    BigInt a_count, r_count;
    bool estimated = false;
};

SlotPopulation slot_population(const ScaleProfile& profile, int slot) {
    SlotPopulation pop;
    const auto [alo, ahi] = profile.a_window(slot);
    pop.a_count = count_shear_window(alo, ahi, profile.balance, pop.estimated);
    const auto [rlo, rhi] = profile.r_window(slot);
    pop.r_count = rhi - rlo + 1;
    return pop;
}

std::pair<int, int> level_slots(const ScaleProfile& profile, int level) {
    const int s1 = profile.first_slot + 2 * (level - 1);
    return {s1, s1 + 1};
}

std::uint64_t cell_seed(std::uint64_t seed, int level, int parent) {
    std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ULL;
    h ^= static_cast<std::uint64_t>(level) * 0xff51afd7ed558ccdULL;
    h ^= static_cast<std::uint64_t>(parent + 1) * 0xc4ceb9fe1a85ec53ULL;
    return h;
}

} // namespace

BigInt FamilyLevel::admissible_total() const {
    BigInt s = 0;
    for (const BigInt& n : admissible_by_parent) s += n;
    return s;
}

int FamilyLevel::kept_per_parent() const {
    const int parents = static_cast<int>(admissible_by_parent.size());
    return parents == 0 ? 0 : static_cast<int>(cells.size()) / parents;
}

SpecSource window_spec_source(const ScaleProfile& profile, int budget, std::uint64_t seed) {
    if (budget < 1) throw DomainError("window_spec_source: budget must be >= 1");
    return [profile, budget, seed](int level, int parent) -> ChildCandidates {
        const auto [s1, s2] = level_slots(profile, level);
        const SlotPopulation p1 = slot_population(profile, s1);
        const SlotPopulation p2 = slot_population(profile, s2);

        ChildCandidates out;
        out.admissible_total = p1.a_count * p1.r_count * p2.a_count * p2.r_count;
        out.estimated = p1.estimated || p2.estimated;

        if (!out.estimated && out.admissible_total <= budget) {
            // Materialize the whole population: every (A, r) at both slots.
            out.exhaustive = true;
            const auto [a1lo, a1hi] = profile.a_window(s1);
            const auto [a2lo, a2hi] = profile.a_window(s2);
            std::vector<Matrix> a1s, a2s;
            for (const Matrix& a : enumerate_balanced(a1hi, profile.balance))
                if (matrix_norm(a) >= a1lo && ends_with_lower(a)) a1s.push_back(a);
            for (const Matrix& a : enumerate_balanced(a2hi, profile.balance))
                if (matrix_norm(a) >= a2lo && ends_with_lower(a)) a2s.push_back(a);
            const auto [r1lo, r1hi] = profile.r_window(s1);
            const auto [r2lo, r2hi] = profile.r_window(s2);
            for (const Matrix& a1 : a1s)
                for (BigInt r1 = r1lo; r1 <= r1hi; r1 += 1)
                    for (const Matrix& a2 : a2s)
                        for (BigInt r2 = r2lo; r2 <= r2hi; r2 += 1) {
                            ChainBlock lo{s1, a1, r1}, up{s2, a2, r2};
                            out.pairs.emplace_back(std::move(lo), std::move(up));
                        }
            return out;
        }

        SeededRng rng(cell_seed(seed, level, parent));
        out.pairs.reserve(static_cast<std::size_t>(budget));
        for (int i = 0; i < budget; ++i)
            out.pairs.emplace_back(sample_block(profile, s1, rng), sample_block(profile, s2, rng));
        return out;
    };
}

SpecSource fixed_spec_source(std::vector<std::vector<std::pair<ChainBlock, ChainBlock>>> per_level) {
    return [lists = std::move(per_level)](int level, int) -> ChildCandidates {
        if (level < 1 || level > static_cast<int>(lists.size()))
            throw DomainError("fixed_spec_source: no candidates for this level");
        ChildCandidates out;
        out.pairs = lists[static_cast<std::size_t>(level - 1)];
        out.admissible_total = static_cast<long>(out.pairs.size());
        out.exhaustive = true;
        return out;
    };
}

NestedFamily make_family(const ScaleProfile& profile, const DeletionRule& rule) {
    if (rule.endpoint_trim_count < 0)
        throw DomainError("make_family: negative trim count");
    if (rule.base_neighborhood < 0 || rule.base_neighborhood >= Rational(1, 2))
        throw DomainError("make_family: collar width must lie in [0, 1/2)");
    NestedFamily f;
    f.profile = profile;
    f.rule = rule;
    return f;
}

void build_sk(NestedFamily& family, const SpecSource& source) {
    const int level = family.depth() + 1;
    const auto [s1, s2] = level_slots(family.profile, level);
    const int parents = level == 1 ? 1 : static_cast<int>(family.levels.back().cells.size());

    // The collar deletes children sitting within an angular fraction eps of
    // either end of a parent short span: position t < eps in the angle ratio
    // sin_a/(sin_a + sin_b), compared exactly on the squared sines as
    // (1-eps)^2 * s_a < eps^2 * s_b.
    const Rational eps = family.rule.base_neighborhood;
    const bool collar_active = eps > 0 && level >= family.rule.neighborhood_from_level;
    const Rational eps2 = eps * eps;
    const Rational coeps2 = (Rational(1) - eps) * (Rational(1) - eps);
    const auto in_collar = [&](const Rational& s_a, const Rational& s_b) {
        return coeps2 * s_a < eps2 * s_b || coeps2 * s_b < eps2 * s_a;
    };

    FamilyLevel out;
    for (int p = 0; p < parents; ++p) {
        const Matrix parent_gen =
            level == 1 ? Matrix::identity(4) : family.levels.back().cells[static_cast<std::size_t>(p)].generator;
        const std::vector<BigInt> span_lo_a = parent_gen.column(2),
                                  span_lo_b = parent_gen.column(3),
                                  span_up_a = parent_gen.column(0),
                                  span_up_b = parent_gen.column(1);

        ChildCandidates cand = source(level, p);
        if (cand.pairs.empty())
            throw CheckError("build_sk: source produced no candidates");
        out.raw_per_parent = static_cast<int>(cand.pairs.size());

        std::vector<FamilyCell> children;
        children.reserve(cand.pairs.size());
        for (auto& [lo, up] : cand.pairs) {
            if (lo.slot != s1 || up.slot != s2)
                throw DomainError("build_sk: candidate blocks at the wrong slots");
            FamilyCell c;
            c.parent = p;
            c.lower = lo;
            c.upper = up;
            c.generator = parent_gen * block_matrix(lo.a, lo.r, BlockSide::Lower) *
                          block_matrix(up.a, up.r, BlockSide::Upper);
            c.t_lower = span_position(pair_mid(c.generator, 2, 3), span_lo_a, span_lo_b);
            c.t_upper = span_position(pair_mid(c.generator, 0, 1), span_up_a, span_up_b);
            children.push_back(std::move(c));
        }

        // Endpoint trims: per side (= per parent short span), remove the
        // trim_count cells sitting nearest the span corners, split between
        // the two corners.
        std::set<std::size_t> deleted;
        const int trim = family.rule.endpoint_trim_count;
        if (trim > 0) {
            const auto trim_side = [&](auto key) {
                std::vector<std::size_t> order(children.size());
                for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
                std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
                    return key(children[x]) < key(children[y]);
                });
                const int at_min = trim / 2, at_max = trim - trim / 2;
                for (int i = 0; i < at_min && i < static_cast<int>(order.size()); ++i)
                    deleted.insert(order[static_cast<std::size_t>(i)]);
                for (int i = 0; i < at_max && i < static_cast<int>(order.size()); ++i)
                    deleted.insert(order[order.size() - 1 - static_cast<std::size_t>(i)]);
            };
            trim_side([](const FamilyCell& c) { return c.t_lower; });
            trim_side([](const FamilyCell& c) { return c.t_upper; });
        }
        const int trimmed = static_cast<int>(deleted.size());
        out.trimmed_per_parent = trimmed;

        // Collar rule: drop cells whose moved pairs land inside the deleted
        // end neighborhoods of the parent short spans.
        int collar_hits = 0;
        if (collar_active) {
            for (std::size_t i = 0; i < children.size(); ++i) {
                if (deleted.count(i)) continue;
                const std::vector<BigInt> b23 = pair_mid(children[i].generator, 2, 3);
                const std::vector<BigInt> b01 = pair_mid(children[i].generator, 0, 1);
                const bool hit =
                    in_collar(sin2_angle(b23, span_lo_a), sin2_angle(b23, span_lo_b)) ||
                    in_collar(sin2_angle(b01, span_up_a), sin2_angle(b01, span_up_b));
                if (hit) {
                    deleted.insert(i);
                    ++collar_hits;
                }
            }
        }
        out.neighborhood_deleted += collar_hits;

        std::vector<FamilyCell> kept;
        for (std::size_t i = 0; i < children.size(); ++i)
            if (!deleted.count(i)) kept.push_back(std::move(children[i]));
        if (kept.empty())
            throw CheckError("build_sk: deletion rule exhausted a parent's children");

        // Mass denominator: the admissible population after deletions. Exact
        // when the candidates were exhaustive; sampled parents subtract the
        // trim quota only (collar hits on a sample do not transfer to the
        // population and are reported separately).
        BigInt admissible;
        if (cand.exhaustive) {
            admissible = static_cast<long>(kept.size());
        } else {
            admissible = cand.admissible_total - BigInt(2 * trim);
            out.count_estimated = true;
        }
        if (cand.estimated) out.count_estimated = true;
        if (admissible <= 0)
            throw CheckError("build_sk: deletion rule exhausted the admissible population");

        out.exhaustive = cand.exhaustive && (p == 0 || out.exhaustive);
        out.admissible_by_parent.push_back(admissible);
        for (FamilyCell& c : kept) out.cells.push_back(std::move(c));
    }

    family.levels.push_back(std::move(out));
}

FrostmanMeasure frostman_measure(const NestedFamily& family, int level) {
    if (level < 1 || level > family.depth())
        throw DomainError("frostman_measure: level out of range");
    std::vector<Rational> masses{Rational(1)};
    for (int k = 1; k <= level; ++k) {
        const FamilyLevel& lv = family.levels[static_cast<std::size_t>(k - 1)];
        std::vector<Rational> next;
        next.reserve(lv.cells.size());
        for (const FamilyCell& c : lv.cells) {
            const BigInt& n = lv.admissible_by_parent[static_cast<std::size_t>(c.parent)];
            next.push_back(masses[static_cast<std::size_t>(c.parent)] / Rational(n));
        }
        masses = std::move(next);
    }
    FrostmanMeasure mu;
    mu.level = level;
    mu.covered = Rational(0);
    for (const Rational& m : masses) mu.covered += m;
    mu.masses = std::move(masses);
    return mu;
}

namespace {

/// Exact integer direction of the point at parameter u/grid along the long
/// segment between the two pair barycenters of a cell (in simplex terms the
/// convex combination of the normalized barycenters, scaled integral).
std::vector<BigInt> segment_point(const Matrix& gen, long u, long grid) {
    const std::vector<BigInt> b01 = pair_mid(gen, 0, 1), b23 = pair_mid(gen, 2, 3);
    BigInt s01 = 0, s23 = 0;
    for (int i = 0; i < 4; ++i) {
        s01 += b01[static_cast<std::size_t>(i)];
        s23 += b23[static_cast<std::size_t>(i)];
    }
    std::vector<BigInt> v(4);
    for (int i = 0; i < 4; ++i)
        v[static_cast<std::size_t>(i)] = BigInt(grid - u) * s23 * b01[static_cast<std::size_t>(i)] +
                                         BigInt(u) * s01 * b23[static_cast<std::size_t>(i)];
    return v;
}

/// Normalized segment endpoints of a cell as integer directions on a common
/// scale: P(s) = (1-s)*A + s*B runs along the cell's long segment.
std::pair<std::vector<BigInt>, std::vector<BigInt>> segment_endpoints(const Matrix& gen) {
    return {segment_point(gen, 0, 1), segment_point(gen, 1, 1)};
}

/// Precomputed dot products for the center-vs-segment ball overlap: the set
/// {s : sin^2(angle(x, P(s))) <= R^2} is a quadratic inequality in s with the
/// exact coefficient form base_i + R^2 * corr_i.
struct SegmentOverlap {
    BigInt base[3];
    BigInt corr[3];
};

SegmentOverlap segment_overlap_setup(const std::vector<BigInt>& x, const std::vector<BigInt>& a,
                                     const std::vector<BigInt>& b) {
    const BigInt xx = dot(x, x), aa = dot(a, a), bb = dot(b, b), ab = dot(a, b);
    const BigInt d0 = dot(x, a), e = dot(x, b) - d0;
    // (x . P)^2 coefficients (quadratic in s).
    const BigInt q1_0 = d0 * d0, q1_1 = 2 * d0 * e, q1_2 = e * e;
    // |P|^2 coefficients.
    const BigInt q2_0 = aa, q2_1 = 2 * (ab - aa), q2_2 = aa + bb - 2 * ab;
    SegmentOverlap ov;
    // Condition (x.P)^2 - (1 - R^2) |x|^2 |P|^2 >= 0.
    for (int i = 0; i < 3; ++i) {
        const BigInt& q1 = i == 0 ? q1_0 : (i == 1 ? q1_1 : q1_2);
        const BigInt& q2 = i == 0 ? q2_0 : (i == 1 ? q2_1 : q2_2);
        ov.base[i] = q1 - xx * q2;
        ov.corr[i] = xx * q2;
    }
    return ov;
}

constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Length of {s in [0,1] : c2 s^2 + c1 s + c0 >= 0} as log10, from exact
/// integer coefficients. Interval widths come from the exact discriminant in
/// the log domain, so radii hundreds of decades below the segment length stay
/// resolvable (the root gap would cancel to zero in plain doubles).
double overlap_log10(const BigInt& c0, const BigInt& c1, const BigInt& c2) {
    const auto clamp01 = [](double v) { return std::min(1.0, std::max(0.0, v)); };
    if (c2 == 0) {
        if (c1 == 0) return c0 >= 0 ? 0.0 : kLogZero;
        const double root = clamp01(make_ratio(-c0, c1).get_d());
        const double len = c1 > 0 ? 1.0 - root : root;
        return len > 0 ? std::log10(len) : kLogZero;
    }

    const BigInt disc = c1 * c1 - c2 * c0 * 4;
    if (disc <= 0) return c2 > 0 ? 0.0 : kLogZero; // no real crossing

    // Interval between the roots: midpoint in doubles (it only decides the
    // clipping against [0,1]); width = sqrt(disc)/|c2| exactly, in logs.
    const double mid = make_ratio(-c1, c2 * 2).get_d();
    const double width_log10 = 0.5 * log10_approx(disc) - log10_approx(BigInt(abs(c2)));
    const double width = std::pow(10.0, width_log10); // may underflow; logs rule

    if (c2 < 0) {
        // Solution set = the interval itself.
        if (width_log10 > -6.0) {
            const double lo = clamp01(mid - width / 2), hi = clamp01(mid + width / 2);
            return hi > lo ? std::log10(hi - lo) : kLogZero;
        }
        // Narrow interval: fully inside, fully outside, or a rare borderline
        // straddle of an endpoint (half of it counts, to measurement grade).
        if (mid < -1e-9 || mid > 1.0 + 1e-9) return kLogZero;
        if (mid < 1e-9 || mid > 1.0 - 1e-9) return width_log10 - std::log10(2.0);
        return width_log10;
    }

    // c2 > 0: solution set = [0,1] minus the interval.
    const double lo = clamp01(mid - width / 2), hi = clamp01(mid + width / 2);
    const double len = 1.0 - (hi - lo);
    return len > 0 ? std::log10(len) : kLogZero;
}

/// Rational approximately equal to 10^exponent (exact power times a dyadic
/// mantissa), usable far beyond double range.
Rational pow10_rational(double exponent) {
    const double flo = std::floor(exponent);
    const long e = static_cast<long>(flo);
    Rational mant(std::pow(10.0, exponent - flo)); // exact binary-to-rational
    if (e >= 0) return mant * Rational(pow10(static_cast<unsigned long>(e)));
    return mant / Rational(pow10(static_cast<unsigned long>(-e)));
}

BallMassFit fit_ball_points(std::vector<BallMassPoint> series) {
    BallMassFit fit;
    fit.points = series.size();
    if (series.size() < 2) throw CheckError("ball_mass_exponent: too few usable points");
    std::vector<std::pair<double, double>> pts;
    pts.reserve(series.size());
    for (const BallMassPoint& p : series) pts.emplace_back(p.radius_log10, p.mass_log10);
    double lo = pts.front().first, hi = pts.front().first;
    for (const auto& [x, y] : pts) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    fit.span_decades = hi - lo;
    fit.span_warning = fit.span_decades < 2.0;
    fit.line = fit_polynomial(pts, 1);
    fit.slope = fit.line.coeffs[1];
    fit.series = std::move(series);
    return fit;
}

} // namespace

BallMassFit ball_mass_exponent(const NestedFamily& family, const FrostmanMeasure& measure,
                               int samples, const std::vector<double>& radii_log10,
                               std::uint64_t seed) {
    if (samples < 1) throw DomainError("ball_mass_exponent: need at least one center");
    if (radii_log10.size() < 2) throw DomainError("ball_mass_exponent: need at least two radii");
    if (measure.level < 1 || measure.level > family.depth())
        throw DomainError("ball_mass_exponent: measure level out of range");
    const FamilyLevel& deepest = family.levels[static_cast<std::size_t>(measure.level - 1)];
    const std::size_t leaves = deepest.cells.size();
    if (measure.masses.size() != leaves)
        throw DomainError("ball_mass_exponent: measure does not match the family level");

    // Sampled-tree correction: the materialized cells stand for the full
    // admissible population, so ball masses scale by the per-level ratio of
    // population to kept sample (zero for exhaustive levels). The builder
    // keeps both uniform across the parents of a level.
    double correction = 0.0;
    for (int k = 1; k <= measure.level; ++k) {
        const FamilyLevel& lv = family.levels[static_cast<std::size_t>(k - 1)];
        correction += log10_approx(lv.admissible_total()) -
                      log10_approx(BigInt(static_cast<long>(lv.cells.size())));
    }

    constexpr long kGrid = 16; // center positions per cell, kept off the ends

    std::vector<double> mass_log10(leaves);
    for (std::size_t i = 0; i < leaves; ++i) mass_log10[i] = log10_approx(measure.masses[i]);

    // Exact segment endpoints per leaf, hoisted out of the center loop.
    std::vector<std::pair<std::vector<BigInt>, std::vector<BigInt>>> ends;
    ends.reserve(leaves);
    for (const FamilyCell& cell : deepest.cells) ends.push_back(segment_endpoints(cell.generator));

    // Exact squared radii: sin^2 <= R^2 comparisons must survive exponents far
    // below double range, so each radius becomes a rational power of ten.
    std::vector<std::pair<BigInt, BigInt>> r2s; // numerator, denominator
    r2s.reserve(radii_log10.size());
    for (const double rho : radii_log10) {
        const Rational r2 = pow10_rational(2.0 * rho);
        r2s.emplace_back(r2.get_num(), r2.get_den());
    }

    SeededRng rng(seed);
    std::vector<BallMassPoint> points;
    for (int c = 0; c < samples; ++c) {
        const std::size_t leaf = static_cast<std::size_t>(
            rng.uniform_u64(0, static_cast<std::uint64_t>(leaves - 1)));
        const long u = static_cast<long>(rng.uniform_u64(kGrid / 4, 3 * kGrid / 4));
        const std::vector<BigInt> center =
            segment_point(deepest.cells[leaf].generator, u, kGrid);

        std::vector<SegmentOverlap> overlaps;
        overlaps.reserve(leaves);
        for (std::size_t l = 0; l < leaves; ++l)
            overlaps.push_back(segment_overlap_setup(center, ends[l].first, ends[l].second));

        for (std::size_t ri = 0; ri < radii_log10.size(); ++ri) {
            const auto& [num, den] = r2s[ri];
            // mu(B(center, r)) = sum over leaves of mass * overlap fraction,
            // accumulated in the log domain (terms span hundreds of decades).
            double tmax = kLogZero;
            std::vector<double> terms;
            terms.reserve(leaves);
            for (std::size_t l = 0; l < leaves; ++l) {
                const SegmentOverlap& ov = overlaps[l];
                // Clear the radius denominator: sign-invariant scaling.
                const BigInt c0 = ov.base[0] * den + ov.corr[0] * num;
                const BigInt c1 = ov.base[1] * den + ov.corr[1] * num;
                const BigInt c2 = ov.base[2] * den + ov.corr[2] * num;
                const double t = overlap_log10(c0, c1, c2) + mass_log10[l];
                terms.push_back(t);
                tmax = std::max(tmax, t);
            }
            if (tmax == kLogZero) continue;
            double sum = 0.0;
            for (const double t : terms)
                if (t != kLogZero) sum += std::pow(10.0, t - tmax);
            points.push_back({c, radii_log10[ri], tmax + std::log10(sum) + correction});
        }
    }
    return fit_ball_points(std::move(points));
}

BallMassFit cube_ball_mass_fit(int samples, const std::vector<double>& radii_log10,
                               std::uint64_t seed) {
    if (samples < 1) throw DomainError("cube_ball_mass_fit: need at least one center");
    if (radii_log10.size() < 2) throw DomainError("cube_ball_mass_fit: need at least two radii");
    SeededRng rng(seed);
    std::vector<BallMassPoint> points;
    for (int c = 0; c < samples; ++c) {
        const double x[3] = {0.25 + 0.5 * rng.uniform01(), 0.25 + 0.5 * rng.uniform01(),
                             0.25 + 0.5 * rng.uniform01()};
        for (const double rho : radii_log10) {
            const double r = std::pow(10.0, rho);
            double vol = 1.0;
            for (const double xi : x)
                vol *= std::max(0.0, std::min(xi + r, 1.0) - std::max(xi - r, 0.0));
            if (vol <= 0.0) continue;
            points.push_back({c, rho, std::log10(vol)});
        }
    }
    return fit_ball_points(std::move(points));
}

std::vector<double> level_count_exponents(const ScaleProfile& profile, int kmax,
                                          bool& estimated) {
    if (kmax < 1) throw DomainError("level_count_exponents: kmax must be >= 1");
    estimated = false;
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(kmax));
    for (int k = 1; k <= kmax; ++k) {
        const auto [s1, s2] = level_slots(profile, k);
        double total = 0.0;
        for (const int slot : {s1, s2}) {
            const SlotPopulation pop = slot_population(profile, slot);
            estimated = estimated || pop.estimated;
            if (pop.a_count <= 0)
                throw CheckError("level_count_exponents: empty shear window");
            total += log10_approx(pop.a_count) + log10_approx(pop.r_count);
        }
        out.push_back(total);
    }
    return out;
}

Rational dimension_bound(const Rational& a, const Rational& b) {
    if (a < 0) throw DomainError("dimension_bound: count coefficient must be >= 0");
    if (b <= 0) throw DomainError("dimension_bound: decay coefficient must be positive");
    return Rational(1) + a / (b * 3);
}

ConditionReport verify_conditions(const NestedFamily& family) {
    if (family.depth() < 3)
        throw DomainError("verify_conditions: needs at least three built levels");
    ConditionReport rep;
    rep.neighborhood_applied_early =
        family.rule.base_neighborhood > 0 && family.rule.neighborhood_from_level < 5;

    // (1) Long sides: every cell's segment between its pair barycenters.
    bool first = true;
    for (const FamilyLevel& lv : family.levels)
        for (const FamilyCell& c : lv.cells) {
            const Rational s2 = sin2_angle(pair_mid(c.generator, 0, 1), pair_mid(c.generator, 2, 3));
            if (first || s2 < rep.long_side_c) {
                rep.long_side_c = s2;
                first = false;
            }
        }
    rep.min_long_side_log10 = 0.5 * log10_approx(rep.long_side_c);

    // (2) Count exponents: the family's own admissible totals, extended past
    // the materialized depth by window arithmetic when both agree.
    std::vector<double> series;
    for (const FamilyLevel& lv : family.levels) {
        // Mean per-parent population (the builder keeps parents uniform).
        series.push_back(log10_approx(lv.admissible_total()) -
                         log10_approx(BigInt(static_cast<long>(lv.admissible_by_parent.size()))));
        rep.counts_estimated = rep.counts_estimated || lv.count_estimated;
    }
    const int fit_depth = std::max(family.depth(), 5);
    bool window_estimated = false;
    const std::vector<double> window_exps =
        level_count_exponents(family.profile, fit_depth, window_estimated);
    bool consistent = true;
    for (int k = 0; k < family.depth(); ++k)
        if (std::abs(series[static_cast<std::size_t>(k)] -
                     window_exps[static_cast<std::size_t>(k)]) > 0.5)
            consistent = false;
    if (consistent && fit_depth > family.depth()) {
        for (int k = family.depth(); k < fit_depth; ++k)
            series.push_back(window_exps[static_cast<std::size_t>(k)]);
        rep.counts_estimated = rep.counts_estimated || window_estimated;
    }
    rep.count_log10 = series;
    std::vector<std::pair<double, double>> count_pts;
    for (std::size_t k = 0; k < series.size(); ++k)
        count_pts.emplace_back(static_cast<double>(k + 1), series[k]);
    rep.count_fit = fit_polynomial(count_pts, 2);
    rep.count_leading = rep.count_fit.coeffs[2];
    double rho = 0.0;
    for (const auto& [k, v] : count_pts) {
        const double fitted = rep.count_fit.coeffs[0] + rep.count_fit.coeffs[1] * k +
                              rep.count_fit.coeffs[2] * k * k;
        rho = std::min(rho, v - fitted);
    }
    rep.count_rho_log10 = rho;

    // (3) Boundary avoidance at lag 2: descendants against the facet spans of
    // their level-k ancestors.
    for (int k = 1; k + rep.clearance_lag <= family.depth(); ++k) {
        const int deep = k + rep.clearance_lag;
        Rational best;
        bool seen = false;
        const FamilyLevel& dl = family.levels[static_cast<std::size_t>(deep - 1)];
        for (std::size_t ci = 0; ci < dl.cells.size(); ++ci) {
            const FamilyCell& cell = dl.cells[ci];
            // Walk up to the level-k ancestor.
            int idx = static_cast<int>(ci);
            int lvl = deep;
            while (lvl > k) {
                idx = family.cell(lvl, idx).parent;
                --lvl;
            }
            const Matrix& anc = family.cell(k, idx).generator;
            const std::vector<BigInt> f0 = anc.column(0), f1 = anc.column(1),
                                      f2 = anc.column(2), f3 = anc.column(3);
            for (int col = 0; col < 4; ++col) {
                const std::vector<BigInt> v = cell.generator.column(col);
                for (const Rational& s2 :
                     {sin2_to_facet(v, f1, f2, f3), sin2_to_facet(v, f0, f2, f3),
                      sin2_to_facet(v, f0, f1, f3), sin2_to_facet(v, f0, f1, f2)}) {
                    if (!seen || s2 < best) {
                        best = s2;
                        seen = true;
                    }
                }
            }
        }
        if (seen) rep.clearance_log10.emplace_back(k, 0.5 * log10_approx(best));
    }
    if (rep.clearance_log10.size() >= 4) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& [k, v] : rep.clearance_log10)
            pts.emplace_back(static_cast<double>(k), v);
        rep.decay_fit = fit_polynomial(pts, 3);
    }

    // Cell-size decay model (cubic in the depth) from sampled chains of the
    // same profile; its negated leading coefficient is the `b` the dimension
    // bound divides by.
    const DecayFitReport decay =
        within_group_decay_fit(family.profile, 4, {11, 22, 33, 44, 55});
    if (rep.decay_fit.coeffs.empty()) rep.decay_fit = decay.cubic;
    rep.decay_leading = decay.leading;

    // Disjointness probes: no cell's column direction may fall strictly
    // inside a sibling cell's cone (adjacent cells may touch at faces).
    for (int lvl = 1; lvl <= family.depth() && rep.disjoint; ++lvl) {
        const FamilyLevel& lv = family.levels[static_cast<std::size_t>(lvl - 1)];
        const std::size_t n = lv.cells.size();
        for (std::size_t i = 0; i < n && rep.disjoint; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                if (lv.cells[i].parent != lv.cells[j].parent) continue;
                // Probe directions of cell j: its column rays and its
                // barycenter (the latter catches duplicated cells, whose
                // columns only touch the boundary).
                std::vector<std::vector<Rational>> probes;
                for (int col = 0; col < 4; ++col) {
                    std::vector<Rational> rhs(4);
                    for (int row = 0; row < 4; ++row)
                        rhs[static_cast<std::size_t>(row)] =
                            Rational(lv.cells[j].generator.at(row, col));
                    probes.push_back(std::move(rhs));
                }
                std::vector<Rational> bary(4, Rational(0));
                for (int row = 0; row < 4; ++row)
                    for (int col = 0; col < 4; ++col)
                        bary[static_cast<std::size_t>(row)] +=
                            Rational(lv.cells[j].generator.at(row, col));
                probes.push_back(std::move(bary));
                bool strictly_inside = false;
                for (const std::vector<Rational>& rhs : probes) {
                    if (strictly_inside) break;
                    try {
                        const std::vector<Rational> coords =
                            solve_exact(lv.cells[i].generator, rhs);
                        strictly_inside = true;
                        for (const Rational& q : coords)
                            if (q <= 0) strictly_inside = false;
                    } catch (const CheckError&) {
                        // Singular generator: not a containment witness.
                    }
                }
                if (strictly_inside) {
                    rep.disjoint = false;
                    rep.offending_level = lvl;
                    rep.offending_pair = {static_cast<int>(i), static_cast<int>(j)};
                    break;
                }
            }
    }

    return rep;
}

std::string level_to_json(const NestedFamily& family, int level) {
    if (level < 1 || level > family.depth())
        throw DomainError("level_to_json: level out of range");
    const FamilyLevel& lv = family.levels[static_cast<std::size_t>(level - 1)];
    nlohmann::json j;
    j["level"] = level;
    j["rule"] = {{"base_neighborhood", to_string(family.rule.base_neighborhood)},
                 {"endpoint_trim_count", family.rule.endpoint_trim_count},
                 {"neighborhood_from_level", family.rule.neighborhood_from_level}};
    j["raw_per_parent"] = lv.raw_per_parent;
    j["trimmed_per_parent"] = lv.trimmed_per_parent;
    j["neighborhood_deleted"] = lv.neighborhood_deleted;
    j["exhaustive"] = lv.exhaustive;
    j["count_estimated"] = lv.count_estimated;
    nlohmann::json counts = nlohmann::json::array();
    for (const BigInt& n : lv.admissible_by_parent) counts.push_back(to_string(n));
    j["admissible_by_parent"] = counts;
    nlohmann::json cells = nlohmann::json::array();
    for (const FamilyCell& c : lv.cells) {
        nlohmann::json jc;
        jc["parent"] = c.parent;
        jc["t_lower"] = to_string(c.t_lower);
        jc["t_upper"] = to_string(c.t_upper);
        const auto block_json = [](const ChainBlock& b) {
            nlohmann::json jb;
            jb["slot"] = b.slot;
            jb["r"] = to_string(b.r);
            jb["a"] = {to_string(b.a.at(0, 0)), to_string(b.a.at(0, 1)), to_string(b.a.at(1, 0)),
                       to_string(b.a.at(1, 1))};
            return jb;
        };
        jc["lower"] = block_json(c.lower);
        jc["upper"] = block_json(c.upper);
        nlohmann::json gen = nlohmann::json::array();
        for (int row = 0; row < 4; ++row)
            for (int col = 0; col < 4; ++col) gen.push_back(to_string(c.generator.at(row, col)));
        jc["generator"] = gen;
        cells.push_back(std::move(jc));
    }
    j["cells"] = std::move(cells);
    return j.dump();
}

} // namespace ietnue
