#include "ietnue/simplex_geom.hpp"

#include <cmath>
#include <optional>

#include "ietnue/errors.hpp"

namespace ietnue {

namespace {

BigInt dot(const std::vector<BigInt>& v, const std::vector<BigInt>& w) {
    if (v.size() != w.size()) throw DomainError("dot: size mismatch");
    BigInt s = 0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * w[i];
    return s;
}

Rational make_ratio(const BigInt& num, const BigInt& den) {
    Rational r(num, den);
    r.canonicalize();
    return r;
}

double log10_sin(const Rational& sin2) { return 0.5 * log10_approx(sin2); }

} // namespace

Rational sin2_angle(const std::vector<BigInt>& v, const std::vector<BigInt>& w) {
    const BigInt vv = dot(v, v), ww = dot(w, w), vw = dot(v, w);
    if (vv == 0 || ww == 0) throw DomainError("sin2_angle: zero vector");
    return make_ratio(vv * ww - vw * vw, vv * ww);
}

Rational sin2_to_span(const std::vector<BigInt>& v, const std::vector<BigInt>& w1,
                      const std::vector<BigInt>& w2) {
    const BigInt vv = dot(v, v);
    if (vv == 0) throw DomainError("sin2_to_span: zero vector");
    // Gram determinants: dist^2(v, span) = det G(w1,w2,v) / det G(w1,w2).
    const BigInt g11 = dot(w1, w1), g12 = dot(w1, w2), g22 = dot(w2, w2);
    const BigInt g1v = dot(w1, v), g2v = dot(w2, v);
    const BigInt det2 = g11 * g22 - g12 * g12;
    if (det2 == 0) throw DomainError("sin2_to_span: spanning vectors are dependent");
    Matrix g3(3);
    g3.at(0, 0) = g11; g3.at(0, 1) = g12; g3.at(0, 2) = g1v;
    g3.at(1, 0) = g12; g3.at(1, 1) = g22; g3.at(1, 2) = g2v;
    g3.at(2, 0) = g1v; g3.at(2, 1) = g2v; g3.at(2, 2) = vv;
    return make_ratio(g3.determinant(), det2 * vv);
}

Rational group_separation_sin2(const Matrix& m) {
    if (m.dim() != 4) throw DomainError("group_separation_sin2: need a 4x4 matrix");
    const std::vector<BigInt> c0 = m.column(0), c1 = m.column(1), c2 = m.column(2),
                              c3 = m.column(3);
    Rational best = sin2_to_span(c0, c2, c3);
    for (const Rational& cand :
         {sin2_to_span(c1, c2, c3), sin2_to_span(c2, c0, c1), sin2_to_span(c3, c0, c1)}) {
        if (cand < best) best = cand;
    }
    return best;
}

std::vector<Rational> simplex_column(const Matrix& m, int column) {
    const BigInt sum = m.column_sum(column);
    if (sum <= 0) throw DomainError("simplex_column: column sum must be positive");
    std::vector<Rational> u(m.dim());
    for (int i = 0; i < static_cast<int>(m.dim()); ++i) u[i] = make_ratio(m.at(i, column), sum);
    return u;
}

Rational segment_l1_distance(const std::vector<Rational>& p0, const std::vector<Rational>& p1,
                             const std::vector<Rational>& q0, const std::vector<Rational>& q1) {
    const std::size_t n = p0.size();
    if (p1.size() != n || q0.size() != n || q1.size() != n)
        throw DomainError("segment_l1_distance: size mismatch");

    // f(s,t) = sum_i |a_i + s*b_i - t*c_i| over the unit square.
    std::vector<Rational> a(n), b(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = p0[i] - q0[i];
        b[i] = p1[i] - p0[i];
        c[i] = q1[i] - q0[i];
    }

    const Rational zero = 0, one = 1;
    std::vector<std::pair<Rational, Rational>> candidates = {
        {zero, zero}, {zero, one}, {one, zero}, {one, one}};
    auto push = [&](const Rational& s, const Rational& t) {
        if (s >= 0 && s <= 1 && t >= 0 && t <= 1) candidates.emplace_back(s, t);
    };
    // Kink line i: a_i + s*b_i - t*c_i = 0, intersected with the square edges.
    for (std::size_t i = 0; i < n; ++i) {
        if (b[i] == 0 && c[i] == 0) continue;
        if (c[i] != 0) {
            push(zero, a[i] / c[i]);
            push(one, (a[i] + b[i]) / c[i]);
        }
        if (b[i] != 0) {
            push(-a[i] / b[i], zero);
            push((c[i] - a[i]) / b[i], one);
        }
        // ... and with every other kink line.
        for (std::size_t j = i + 1; j < n; ++j) {
            const Rational det = b[i] * (-c[j]) - (-c[i]) * b[j];
            if (det == 0) continue;
            const Rational s = ((-a[i]) * (-c[j]) - (-c[i]) * (-a[j])) / det;
            const Rational t = (b[i] * (-a[j]) - (-a[i]) * b[j]) / det;
            push(s, t);
        }
    }

    bool have = false;
    Rational best = 0;
    for (const auto& [s, t] : candidates) {
        Rational value = 0;
        for (std::size_t i = 0; i < n; ++i) value += abs(Rational(a[i] + s * b[i] - t * c[i]));
        if (!have || value < best) { best = value; have = true; }
    }
    return best;
}

Rational group_separation_l1(const Matrix& m) {
    if (m.dim() != 4) throw DomainError("group_separation_l1: need a 4x4 matrix");
    return segment_l1_distance(simplex_column(m, 0), simplex_column(m, 1),
                               simplex_column(m, 2), simplex_column(m, 3));
}

namespace {

// sin^2 from v to span{w1,w2} when the orthogonal projection of v lies in
// the nonnegative cone of w1, w2; otherwise nothing (the cone minimum is
// then attained against an edge ray, i.e. a plain column-column angle).
std::optional<Rational> cone_span_sin2(const std::vector<BigInt>& v,
                                       const std::vector<BigInt>& w1,
                                       const std::vector<BigInt>& w2) {
    const BigInt g11 = dot(w1, w1), g12 = dot(w1, w2), g22 = dot(w2, w2);
    const BigInt det2 = g11 * g22 - g12 * g12;
    if (det2 == 0) throw DomainError("cone_span_sin2: spanning vectors are dependent");
    const BigInt b1 = dot(w1, v), b2 = dot(w2, v);
    // Projection coefficients have sign of these numerators (det2 > 0).
    if (g22 * b1 - g12 * b2 < 0 || g11 * b2 - g12 * b1 < 0) return std::nullopt;
    return sin2_to_span(v, w1, w2);
}

} // namespace

Rational group_separation_angle(const Matrix& m) {
    if (m.dim() != 4) throw DomainError("group_separation_angle: need a 4x4 matrix");
    const std::vector<BigInt> c[4] = {m.column(0), m.column(1), m.column(2), m.column(3)};
    Rational best = sin2_angle(c[0], c[2]);
    auto consider = [&best](const Rational& cand) {
        if (cand < best) best = cand;
    };
    consider(sin2_angle(c[0], c[3]));
    consider(sin2_angle(c[1], c[2]));
    consider(sin2_angle(c[1], c[3]));
    for (int i = 0; i < 2; ++i)
        if (auto s = cone_span_sin2(c[i], c[2], c[3])) consider(*s);
    for (int j = 2; j < 4; ++j)
        if (auto s = cone_span_sin2(c[j], c[0], c[1])) consider(*s);
    return best;
}

ColumnSumReport check_column_sums(const Matrix& m, const ChainSpec& spec) {
    spec.validate();
    if (m.dim() != 4) throw DomainError("check_column_sums: need a 4x4 matrix");

    // Expected size products by side: lower-route blocks feed columns 2,3.
    BigInt p01 = 1, p23 = 1;
    for (const ChainBlock& b : spec.blocks) {
        const long e = spec.profile.a_exponent.eval_floor(b.slot) +
                       spec.profile.r_exponent.eval_floor(b.slot);
        const BigInt factor =
            pow_int(BigInt(spec.profile.base), static_cast<unsigned long>(e));
        if (b.side(spec.profile) == BlockSide::Lower) p23 *= factor;
        else p01 *= factor;
    }
    const BigInt headroom =
        pow_int(BigInt(spec.profile.multiplier), static_cast<unsigned long>(2 * spec.k + 1));

    ColumnSumReport report;
    for (int j = 0; j < 4; ++j) {
        ColumnBound b;
        b.column = j;
        b.measured = column_norm(m, j);
        b.lower = j < 2 ? p01 : p23;
        b.upper = headroom * b.lower;
        b.pass = b.measured >= b.lower && b.measured <= b.upper;
        report.bounds.push_back(std::move(b));
    }
    report.pair01_pass = report.bounds[0].pass && report.bounds[1].pass;
    report.pair23_pass = report.bounds[2].pass && report.bounds[3].pass;
    report.all_pass = report.pair01_pass && report.pair23_pass;
    return report;
}

AngleDecayReport check_angle_decay(const Matrix& m, const Matrix& a, const BigInt& r,
                                   BlockSide side) {
    if (m.dim() != 4) throw DomainError("check_angle_decay: need a 4x4 matrix");
    const int lo = side == BlockSide::Lower ? 2 : 0;
    const int hi = lo + 1;

    const Matrix m_r = m * block_matrix(a, r, side);
    const Matrix m_2r = m * block_matrix(a, 2 * r, side);
    const Matrix m_4r = m * block_matrix(a, 4 * r, side);

    const Rational before = sin2_angle(m.column(lo), m.column(hi));
    const Rational after_r = sin2_angle(m_r.column(lo), m_r.column(hi));
    const Rational after_2r = sin2_angle(m_2r.column(lo), m_2r.column(hi));
    const Rational mixed = sin2_angle(m_2r.column(lo), m_r.column(hi));
    const Rational mixed_2 = sin2_angle(m_4r.column(lo), m_2r.column(hi));

    AngleDecayReport rep;
    rep.log10_d_before = log10_sin(before);
    rep.log10_d_after_r = log10_sin(after_r);
    rep.log10_d_after_2r = log10_sin(after_2r);
    rep.log10_d_mixed = log10_sin(mixed);
    rep.log10_d_mixed_2 = log10_sin(mixed_2);
    rep.ratio_same = std::pow(10.0, rep.log10_d_after_2r - rep.log10_d_after_r);
    rep.ratio_mixed = std::pow(10.0, rep.log10_d_mixed_2 - rep.log10_d_mixed);

    const double log_norm = log10_approx(matrix_norm(a));
    const double log_r = log10_approx(r);
    const double pred_linear = rep.log10_d_before - 2 * log_norm - log_r;
    const double pred_quadratic = rep.log10_d_before - 2 * log_norm - 2 * log_r;
    rep.d_prime_linear = std::pow(10.0, std::fabs(rep.log10_d_mixed - pred_linear));
    rep.d_prime_quadratic = std::pow(10.0, std::fabs(rep.log10_d_after_r - pred_quadratic));
    return rep;
}

SeparationReport span_separation_bound(const std::vector<Matrix>& prefixes, long base,
                                       long multiplier) {
    if (prefixes.empty()) throw DomainError("span_separation_bound: no prefixes");
    SeparationReport rep;
    rep.depth = static_cast<int>(prefixes.size());
    rep.base_claim = Rational(1, 10);
    rep.floor_bound = Rational(1, 900);

    // Per-step drift 2*q^j with q = (multiplier/base)^2.
    Rational q(multiplier * multiplier, base * base);
    q.canonicalize();
    Rational sum_display = 0, sum_conservative = 0;
    Rational qpow = q;
    for (int j = 1; j <= rep.depth; ++j) {
        if (j >= 2) sum_display += 2 * qpow;
        if (j <= rep.depth - 1) sum_conservative += 2 * qpow;
        qpow *= q;
    }
    rep.certified_display = rep.base_claim - sum_display;
    rep.certified_conservative = rep.base_claim - sum_conservative;
    rep.certificates_above_floor = rep.certified_display > rep.floor_bound &&
                                   rep.certified_conservative > rep.floor_bound;

    for (const Matrix& m : prefixes) {
        const Rational s2 = group_separation_angle(m);
        rep.angle_sin2.push_back(s2);
        rep.angle_log10.push_back(log10_sin(s2));
        const Rational d1 = group_separation_l1(m);
        rep.l1_dist.push_back(d1);
        rep.l1_log10.push_back(log10_approx(d1));
    }
    // sin(d) > claim implies the angle exceeds the claim as well.
    rep.measured_base_above_claim =
        rep.angle_sin2.front() > rep.base_claim * rep.base_claim;

    Rational drift = 2 * q; // step from depth 1 to 2
    for (int j = 0; j + 1 < rep.depth; ++j) {
        const Rational& s_cur = rep.angle_sin2[j];
        const Rational& s_next = rep.angle_sin2[j + 1];
        bool ok = s_next >= s_cur; // the distance did not shrink at all
        if (!ok) {
            // Small-angle form: sin d_{j+1} > sin d_j - drift, certified with
            // exact rational square-root bounds.
            const Rational floor_next = sqrt_upper(s_cur) - drift;
            ok = floor_next <= 0 || sqrt_lower(s_next) > floor_next;
        }
        rep.drift_inequality_ok.push_back(ok);
        drift *= q;
    }

    rep.nested = true;
    for (std::size_t j = 1; j < prefixes.size() && rep.nested; ++j) {
        for (int c = 0; c < 4 && rep.nested; ++c) {
            std::vector<Rational> col(4);
            for (int i = 0; i < 4; ++i) col[i] = Rational(prefixes[j].at(i, c));
            for (const Rational& u : solve_exact(prefixes[j - 1], col))
                if (u < 0) rep.nested = false;
        }
    }
    return rep;
}

PolyFit fit_polynomial(const std::vector<std::pair<double, double>>& points, int degree) {
    if (degree < 0 || points.size() < static_cast<std::size_t>(degree + 1))
        throw DomainError("fit_polynomial: not enough points for the degree");
    const int n = degree + 1;
    // Normal equations; tiny systems, double precision is plenty here.
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (const auto& [x, y] : points) {
        std::vector<double> powers(2 * n - 1, 1.0);
        for (int i = 1; i < 2 * n - 1; ++i) powers[i] = powers[i - 1] * x;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) a[i][j] += powers[i + j];
            a[i][n] += powers[i] * y;
        }
    }
    for (int k = 0; k < n; ++k) {
        int pivot = k;
        for (int i = k + 1; i < n; ++i)
            if (std::fabs(a[i][k]) > std::fabs(a[pivot][k])) pivot = i;
        std::swap(a[k], a[pivot]);
        if (a[k][k] == 0.0) throw CheckError("fit_polynomial: singular system");
        for (int i = k + 1; i < n; ++i) {
            const double f = a[i][k] / a[k][k];
            for (int j = k; j <= n; ++j) a[i][j] -= f * a[k][j];
        }
    }
    PolyFit fit;
    fit.coeffs.assign(n, 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double s = a[i][n];
        for (int j = i + 1; j < n; ++j) s -= a[i][j] * fit.coeffs[j];
        fit.coeffs[i] = s / a[i][i];
    }
    for (const auto& [x, y] : points) {
        double value = 0.0, xp = 1.0;
        for (int i = 0; i < n; ++i) { value += fit.coeffs[i] * xp; xp *= x; }
        fit.max_residual = std::max(fit.max_residual, std::fabs(value - y));
    }
    return fit;
}

DecayFitReport within_group_decay_fit(const ScaleProfile& profile, int kmax,
                                      const std::vector<std::uint64_t>& seeds) {
    if (kmax < 1) throw DomainError("within_group_decay_fit: kmax must be >= 1");
    if (seeds.empty()) throw DomainError("within_group_decay_fit: need at least one seed");

    DecayFitReport rep;
    rep.mean_log10_d01.assign(static_cast<std::size_t>(kmax), 0.0);
    rep.mean_log10_d23.assign(static_cast<std::size_t>(kmax), 0.0);
    for (const std::uint64_t seed : seeds) {
        SeededRng rng(seed);
        const ChainSpec spec = sample_chain(profile, kmax, rng);
        const std::vector<Matrix> partials = chain_partials(spec);
        for (int j = 1; j <= kmax; ++j) {
            const Matrix& full = partials[static_cast<std::size_t>(2 * j - 1)];
            const Matrix& half = partials[static_cast<std::size_t>(2 * j - 2)];
            rep.mean_log10_d01[j - 1] +=
                log10_sin(sin2_angle(full.column(0), full.column(1)));
            rep.mean_log10_d23[j - 1] +=
                log10_sin(sin2_angle(half.column(2), half.column(3)));
        }
    }
    std::vector<std::pair<double, double>> points;
    for (int j = 1; j <= kmax; ++j) {
        rep.mean_log10_d01[j - 1] /= static_cast<double>(seeds.size());
        rep.mean_log10_d23[j - 1] /= static_cast<double>(seeds.size());
        points.emplace_back(static_cast<double>(j), rep.mean_log10_d01[j - 1]);
    }
    rep.cubic = fit_polynomial(points, 3);
    rep.leading = rep.cubic.coeffs[3];
    return rep;
}

} // namespace ietnue
