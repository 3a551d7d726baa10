#include "dislo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dislo::analysis {

void EstimateConstants::require_valid() const {
    const double vals[]{L1, L1p, L2, L3, eta0, C, gamma, eta, L4, L5, cbar, M};
    for (double v : vals)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw NumericalError("EstimateConstants: negative or non-finite constant");
    if (eta > eta0 * (1.0 + 1e-12))
        throw NumericalError("EstimateConstants: requires eta <= eta0");
    if (cbar < L1p * (1.0 - 1e-12))
        throw NumericalError("EstimateConstants: requires cbar >= L1'");
}

EstimateReport EstimateReport::of(std::string name, double t, double lhs, double rhs,
                                  double tolerance, std::string context) {
    EstimateReport r;
    r.name = std::move(name);
    r.t = t;
    r.lhs = lhs;
    r.rhs = rhs;
    r.margin = rhs - lhs;
    r.pass = r.margin >= -tolerance;
    r.context = std::move(context);
    return r;
}

bool all_pass(std::span<const EstimateReport> reports) {
    return std::all_of(reports.begin(), reports.end(),
                       [](const EstimateReport& r) { return r.pass; });
}

namespace {

// Quintic smoothstep: C^2 ramps, integral over [0,1] equal to 1/2.
double smoothstep5(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

double smoothstep5_primitive(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 0.5 + (x - 1.0);
    const double x4 = x * x * x * x;
    return x4 * (2.5 + x * (-3.0 + x));
}

}  // namespace

double MollifiedIndicator::phi(double r) const {
    const double a = band.a, b = band.b, eps = band.epsilon;
    if (r <= a - eps || r >= b + eps) return 0.0;
    if (r < a) return smoothstep5((r - (a - eps)) / eps);
    if (r <= b) return 1.0;
    return smoothstep5((b + eps - r) / eps);
}

double MollifiedIndicator::phi_primitive(double r) const {
    const double a = band.a, b = band.b, eps = band.epsilon;
    if (r <= a - eps) return 0.0;
    if (r < a) return eps * smoothstep5_primitive((r - (a - eps)) / eps);
    if (r <= b) return 0.5 * eps + (r - a);
    if (r < b + eps)
        return 0.5 * eps + (b - a) + eps * (0.5 - smoothstep5_primitive((b + eps - r) / eps));
    return (b - a) + eps;
}

double MollifiedIndicator::band_mass(const ScalarField& u) const {
    std::vector<double> vals(u.size());
    for (std::size_t f = 0; f < u.size(); ++f) vals[f] = phi(u[f]);
    return u.grid().cell_volume() * kahan_sum(vals);
}

std::vector<bool> kink_mask(const ScalarField& u, double rel_disagreement) {
    const ScalarField gu = hj::upwind_max_gradient_norm(u);
    const ScalarField gc = hj::centered_gradient_norm(u);
    const Grid& g = u.grid();
    std::vector<bool> kink(u.size(), false);
    for (std::size_t f = 0; f < u.size(); ++f) {
        const double ref = std::max({gu[f], gc[f], 1e-12});
        if (std::abs(gu[f] - gc[f]) > rel_disagreement * ref) kink[f] = true;
    }
    // One-cell dilation: a.e. statements cannot be probed next to the kink set.
    std::vector<bool> out = kink;
    const Idx3 stride{static_cast<long>(g.n()[1]) * g.n()[2], g.n()[2], 1};
    Idx3 i{0, 0, 0};
    for (i[0] = 0; i[0] < g.n()[0]; ++i[0])
        for (i[1] = 0; i[1] < g.n()[1]; ++i[1])
            for (i[2] = 0; i[2] < g.n()[2]; ++i[2]) {
                const std::size_t f = g.flat(i);
                if (!kink[f]) continue;
                for (int d = 0; d < g.dim(); ++d) {
                    if (i[d] > 0) out[f - stride[d]] = true;
                    if (i[d] < g.n()[d] - 1) out[f + stride[d]] = true;
                }
            }
    return out;
}

EstimateConstants estimate_constants(std::span<const ScalarField> c_snapshots,
                                     const ScalarField& u0, long sd_step,
                                     double probe_band_rel) {
    if (c_snapshots.empty()) throw InvalidArgument("estimate_constants: no velocity snapshots");
    EstimateConstants k;
    for (const ScalarField& c : c_snapshots) {
        k.L1 = std::max(k.L1, max_difference_quotient(c));
        k.L1p = std::max(k.L1p, sup_norm(c));
        k.L2 = std::max(k.L2, -second_difference_min(c, sd_step));
    }
    k.L2 = std::max(k.L2, 0.0);
    k.L3 = std::max(0.0, -second_difference_min(u0, sd_step));

    const double probe = probe_band_rel * std::max(sup_norm(u0), 1e-300);
    const ScalarField g = hj::upwind_max_gradient_norm(u0);
    double eta0 = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < u0.size(); ++f)
        if (std::abs(u0[f]) < probe) eta0 = std::min(eta0, std::abs(u0[f]) + g[f]);
    if (!std::isfinite(eta0)) eta0 = probe;  // empty probe band: vacuous (H3)
    if (eta0 <= 0.0)
        throw NumericalError("estimate_constants: (H3) violated, |u0| + |Du0| reaches 0 "
                             "near the zero set");
    k.eta0 = eta0;
    return k;
}

double measure_solution_semiconvexity(const hj::Trajectory& traj, long sd_step) {
    double c = 0.0;
    for (const ScalarField& u : traj.snapshots)
        c = std::max(c, -second_difference_min(u, sd_step));
    return c;
}

namespace {

// Largest eta with min{|Du0| : |u0| < eta/2, off kinks} >= sqrt(2 eta); the
// condition is monotone in eta (wider band, larger threshold). The t = 0
// threshold sqrt(2 eta) is the binding one: the e^{-gamma t/2} decay only
// weakens the near-front bound at later times.
double empirical_eta(const ScalarField& u0) {
    const ScalarField g = hj::upwind_max_gradient_norm(u0);
    const std::vector<bool> kinks = kink_mask(u0);
    auto admissible = [&](double eta) {
        double min_g = std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < u0.size(); ++f)
            if (!kinks[f] && std::abs(u0[f]) < 0.5 * eta) min_g = std::min(min_g, g[f]);
        if (!std::isfinite(min_g)) return true;  // empty band
        return min_g >= std::sqrt(2.0 * eta);
    };
    double lo = 0.0, hi = 2.0 * std::max(sup_norm(u0), 1e-12);
    if (admissible(hi)) return hi;
    if (!admissible(1e-10))
        throw NumericalError("derive_constants: no admissible eta, gradient vanishes at the "
                             "zero set");
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (admissible(mid) ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace

void derive_constants(EstimateConstants& k, const ScalarField& u0, const hj::Trajectory* traj,
                      double T, double R0, double c0_l1, double eta_override) {
    // Exponent clamp: degenerate desk-scale constants (the blow-up scenario)
    // would overflow; a capped value keeps the chain finite and still
    // astronomically conservative.
    auto cexp = [](double x) { return std::exp(std::min(x, 700.0)); };
    const int dim = u0.grid().dim();
    k.cbar = c0_l1 + k.L1p;
    k.M = ball_measure(dim, R0 + k.cbar * T);
    k.gamma = k.L1 * (1.0 + k.M);
    if (eta_override > 0.0)
        k.eta = eta_override;
    else
        k.eta = std::min(0.5 * empirical_eta(u0), k.eta0);
    k.C = traj ? measure_solution_semiconvexity(*traj) : k.L3;
    // The nonlocal velocity inherits Lip <= L1 (1 + M) and sup <= cbar; a pure
    // local problem has c0_l1 = 0 and the inflation reduces to L1, L1'.
    const double l1_eff = (c0_l1 > 0.0) ? k.L1 * (1.0 + k.M) : k.L1;
    const double sup_eff = (c0_l1 > 0.0) ? k.cbar : k.L1p;
    k.L4 = std::min(l1_eff + cexp(k.gamma * T / 2.0) * sup_eff * k.C / std::sqrt(2.0 * k.eta),
                    1e300);
    k.L5 = std::min(k.L3 * cexp(k.L4 * T), 1e300);
}

std::vector<EstimateReport> check_solution_difference(const hj::Trajectory& u1,
                                                      const hj::Trajectory& u2,
                                                      const hj::VelocityFn& c1,
                                                      const hj::VelocityFn& c2, double lip_u0,
                                                      double L1, double rhs_scale) {
    if (u1.times.size() != u2.times.size())
        throw InvalidArgument("check_solution_difference: trajectories differ in sampling");
    std::vector<EstimateReport> rows;
    const double h = u1.snapshots.front().grid().max_h();
    double integral = 0.0;
    double prev_t = 0.0;
    double prev_f = sup_norm(field_sub(c1(0.0), c2(0.0)));
    for (std::size_t i = 0; i < u1.times.size(); ++i) {
        const double t = u1.times[i];
        if (std::abs(t - u2.times[i]) > 1e-9)
            throw InvalidArgument("check_solution_difference: mismatched times");
        if (t > prev_t) {
            const double f = sup_norm(field_sub(c1(t), c2(t)));
            integral += 0.5 * (t - prev_t) * (prev_f + f);
            prev_t = t;
            prev_f = f;
        }
        const double lhs = sup_norm(field_sub(u1.snapshots[i], u2.snapshots[i]));
        const double rhs = rhs_scale * lip_u0 * std::exp(L1 * t) * integral;
        rows.push_back(EstimateReport::of("solution_difference", t, lhs, rhs,
                                          0.05 * rhs + 5.0 * h * lip_u0));
    }
    return rows;
}

EstimateReport increase_principle_check(const ScalarField& v, double eta0, double delta,
                                        const Idx3& x0, PrincipleMode mode) {
    if (!(delta < 0.5 * eta0))
        throw InvalidArgument("increase_principle_check: requires delta < eta0 / 2");
    const Grid& g = v.grid();
    const std::size_t f0 = g.flat(x0);
    if (std::abs(v[f0]) > delta + 1e-12)
        throw InvalidArgument("increase_principle_check: requires |v(x0)| <= delta");
    const Vec3 p0 = g.node(x0);
    const double radius = 2.0 * delta / eta0;
    for (int d = 0; d < g.dim(); ++d)
        if (p0[d] - radius < g.lo()[d] || p0[d] + radius > g.hi()[d])
            throw InvalidArgument("increase_principle_check: probe ball exits the grid box");

    double best = (mode == PrincipleMode::increase)
                      ? -std::numeric_limits<double>::infinity()
                      : std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < v.size(); ++f) {
        const Vec3 p = g.node(f);
        double r2 = 0.0;
        for (int d = 0; d < g.dim(); ++d) r2 += (p[d] - p0[d]) * (p[d] - p0[d]);
        if (r2 > radius * radius) continue;
        best = (mode == PrincipleMode::increase) ? std::max(best, v[f]) : std::min(best, v[f]);
    }
    const double lip = max_difference_quotient(v);
    const double tol = lip * v.grid().max_h();
    if (mode == PrincipleMode::increase)
        return EstimateReport::of("increase_principle", 0.0, v[f0] + delta, best, tol);
    return EstimateReport::of("decrease_principle", 0.0, best, v[f0] - delta, tol);
}

std::vector<EstimateReport> check_front_containment(const hj::Trajectory& traj, double R0,
                                                    double speed_bound) {
    std::vector<EstimateReport> rows;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const ScalarField& u = traj.snapshots[i];
        const Grid& g = u.grid();
        double rmax = 0.0;
        for (std::size_t f = 0; f < u.size(); ++f) {
            if (u[f] < 0.0) continue;
            const Vec3 p = g.node(f);
            double r2 = 0.0;
            for (int d = 0; d < g.dim(); ++d) r2 += p[d] * p[d];
            rmax = std::max(rmax, std::sqrt(r2));
        }
        const double t = traj.times[i];
        rows.push_back(EstimateReport::of("front_containment", t, rmax,
                                          R0 + speed_bound * t + 2.0 * g.max_h()));
    }
    return rows;
}

std::vector<EstimateReport> check_lower_gradient_bound(const hj::Trajectory& traj, double eta,
                                                       double gamma) {
    if (!(eta > 0.0) || !(gamma >= 0.0))
        throw InvalidArgument("check_lower_gradient_bound: requires eta > 0, gamma >= 0");
    std::vector<EstimateReport> rows;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const ScalarField& u = traj.snapshots[i];
        const double t = traj.times[i];
        const ScalarField g = hj::upwind_max_gradient_norm(u);
        const std::vector<bool> kinks = kink_mask(u);
        double min_g = std::numeric_limits<double>::infinity();
        std::size_t probed = 0;
        for (std::size_t f = 0; f < u.size(); ++f)
            if (!kinks[f] && std::abs(u[f]) < 0.5 * eta) {
                min_g = std::min(min_g, g[f]);
                ++probed;
            }
        const double thr = std::sqrt(2.0 * eta) * std::exp(-gamma * t / 2.0);
        const double lip = max_difference_quotient(u);
        const double tol = 10.0 * u.grid().max_h() * lip;
        if (probed == 0)
            rows.push_back(EstimateReport::of("lower_gradient_bound", t, thr, thr, tol,
                                              "vacuous: no nodes in the band"));
        else
            rows.push_back(EstimateReport::of("lower_gradient_bound", t, thr, min_g, tol));
    }
    return rows;
}

namespace {

ScalarField binarize(const ScalarField& u, double level) {
    std::vector<double> v(u.size());
    for (std::size_t f = 0; f < u.size(); ++f) v[f] = u[f] >= level ? 1.0 : 0.0;
    return ScalarField(u.grid(), std::move(v));
}

}  // namespace

std::vector<EstimateReport> gronwall_band_check(const hj::Trajectory& traj,
                                                const BandSpec& band, double L4, double eta,
                                                double rhs_scale) {
    if (!(-0.5 * eta < band.a - band.epsilon && band.b + band.epsilon < 0.5 * eta))
        throw InvalidArgument(
            "gronwall_band_check: band [a - eps, b + eps] must lie inside (-eta/2, eta/2)");
    const MollifiedIndicator phi{band};
    const ScalarField& u0 = traj.snapshots.front();
    const double mass0 = phi.band_mass(u0);
    const double meas0 = band_measure(u0, band.a, band.b);
    const double per0 = perimeter(binarize(u0, 0.5 * (band.a + band.b)));
    const double h = u0.grid().max_h();

    std::vector<EstimateReport> rows;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        const double grow = std::exp(std::min(L4 * t, 700.0)) * rhs_scale;
        {
            const double lhs = phi.band_mass(traj.snapshots[i]);
            const double rhs = grow * mass0;
            rows.push_back(EstimateReport::of("gronwall_smooth_mass", t, lhs, rhs,
                                              0.05 * rhs + 5.0 * h * per0));
        }
        {
            const double lhs = band_measure(traj.snapshots[i], band.a, band.b);
            const double rhs = grow * meas0;
            rows.push_back(EstimateReport::of("gronwall_band_measure", t, lhs, rhs,
                                              0.05 * rhs + 5.0 * h * per0));
        }
    }
    return rows;
}

EstimateReport initial_band_bound(const ScalarField& snapshot, double a, double b,
                                  const EstimateConstants& k, double R0, double rhs_scale) {
    if (!(-0.5 * k.eta < a && a < b && b < 0.5 * k.eta))
        throw InvalidArgument("initial_band_bound: band must lie inside (-eta/2, eta/2)");
    const double t = snapshot.time().value_or(0.0);
    const double lhs = band_measure(snapshot, a, b);
    const double L5_t = k.L3 * std::exp(std::min(k.L4 * t, 700.0));
    const int dim = snapshot.grid().dim();
    const double rhs = rhs_scale * L5_t * (b - a) / k.eta * ball_measure(dim, R0 + 1.0);
    const double per = perimeter(binarize(snapshot, 0.5 * (a + b)));
    const double tol = 0.05 * rhs + 5.0 * snapshot.grid().max_h() * per;
    return EstimateReport::of("initial_band_bound", t, lhs, rhs, tol);
}

std::vector<L1Jump> l1_continuity_modulus(const nonlocal::IndicatorDensity& indicators) {
    if (indicators.times.size() < 2)
        throw InvalidArgument("l1_continuity_modulus: needs at least two samples");
    std::vector<L1Jump> jumps;
    for (std::size_t i = 0; i + 1 < indicators.times.size(); ++i) {
        const double j =
            l1_norm(field_sub(indicators.densities[i + 1], indicators.densities[i]));
        jumps.push_back(L1Jump{indicators.times[i], indicators.times[i + 1], j});
    }
    return jumps;
}

std::vector<EstimateReport> l1_continuity_check(const nonlocal::IndicatorDensity& indicators,
                                                double speed_bound, double perimeter_bound) {
    const auto jumps = l1_continuity_modulus(indicators);
    const double h = indicators.densities.front().grid().max_h();
    const double K = speed_bound * perimeter_bound;
    std::vector<EstimateReport> rows;
    for (const L1Jump& j : jumps) {
        const double dt = j.t_to - j.t_from;
        rows.push_back(EstimateReport::of("l1_continuity", j.t_to, j.jump, K * dt,
                                          5.0 * h * perimeter_bound));
    }
    return rows;
}

namespace {

// Smoothed copy of a binary field: one [1 2 1]/4 pass per used axis with
// clamped extension, so faces of a full box stay above the 0.5 level.
std::vector<double> box_smooth(const ScalarField& u) {
    const Grid& g = u.grid();
    std::vector<double> a(u.values().begin(), u.values().end());
    std::vector<double> b(a.size());
    const Idx3 stride{static_cast<long>(g.n()[1]) * g.n()[2], g.n()[2], 1};
    for (int d = 0; d < g.dim(); ++d) {
        Idx3 i{0, 0, 0};
        for (i[0] = 0; i[0] < g.n()[0]; ++i[0])
            for (i[1] = 0; i[1] < g.n()[1]; ++i[1])
                for (i[2] = 0; i[2] < g.n()[2]; ++i[2]) {
                    const std::size_t f = g.flat(i);
                    const double vm = i[d] > 0 ? a[f - stride[d]] : a[f];
                    const double vp = i[d] < g.n()[d] - 1 ? a[f + stride[d]] : a[f];
                    b[f] = 0.25 * (vm + 2.0 * a[f] + vp);
                }
        std::swap(a, b);
    }
    return a;
}

double perimeter_1d(const ScalarField& u) {
    const Grid& g = u.grid();
    long count = 0;
    for (long i = 0; i + 1 < g.n()[0]; ++i)
        if (u[g.flat({i, 0, 0})] != u[g.flat({i + 1, 0, 0})]) ++count;
    return static_cast<double>(count);
}

double perimeter_2d(const ScalarField& u) {
    const Grid& g = u.grid();
    const std::vector<double> s = box_smooth(u);
    const double level = 0.5;
    const long n0 = g.n()[0], n1 = g.n()[1];
    auto val = [&](long i, long j) { return s[g.flat({i, j, 0})]; };
    double length = 0.0;

    for (long i = 0; i + 1 < n0; ++i)
        for (long j = 0; j + 1 < n1; ++j) {
            const double v[4] = {val(i, j), val(i + 1, j), val(i + 1, j + 1), val(i, j + 1)};
            const Vec3 q[4] = {g.node(Idx3{i, j, 0}), g.node(Idx3{i + 1, j, 0}),
                               g.node(Idx3{i + 1, j + 1, 0}), g.node(Idx3{i, j + 1, 0})};
            bool above[4];
            int n_above = 0;
            for (int c = 0; c < 4; ++c) {
                above[c] = v[c] >= level;
                n_above += above[c];
            }
            if (n_above == 0 || n_above == 4) continue;

            // Crossing points on the 4 cell edges (corner c to corner c+1).
            std::array<std::array<double, 2>, 4> pt{};
            std::array<bool, 4> has{};
            for (int e = 0; e < 4; ++e) {
                const int c0 = e, c1 = (e + 1) % 4;
                if (above[c0] == above[c1]) continue;
                const double w = (level - v[c0]) / (v[c1] - v[c0]);
                pt[e] = {q[c0][0] + w * (q[c1][0] - q[c0][0]),
                         q[c0][1] + w * (q[c1][1] - q[c0][1])};
                has[e] = true;
            }
            auto seg = [&](int e0, int e1) {
                length += std::hypot(pt[e1][0] - pt[e0][0], pt[e1][1] - pt[e0][1]);
            };
            if (n_above == 2 && above[0] == above[2]) {
                // Saddle: all four edges cross; the cell-center average decides
                // how the contour pairs up.
                const double center = 0.25 * (v[0] + v[1] + v[2] + v[3]);
                if ((center >= level) == above[0]) {
                    seg(0, 1);
                    seg(2, 3);
                } else {
                    seg(3, 0);
                    seg(1, 2);
                }
            } else {
                int e0 = -1;
                for (int e = 0; e < 4; ++e)
                    if (has[e]) {
                        if (e0 < 0)
                            e0 = e;
                        else
                            seg(e0, e);
                    }
            }
        }
    return length;
}

double tri_area(const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 u{b[0] - a[0], b[1] - a[1], b[2] - a[2]};
    const Vec3 v{c[0] - a[0], c[1] - a[1], c[2] - a[2]};
    const Vec3 w{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
                 u[0] * v[1] - u[1] * v[0]};
    return 0.5 * std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
}

double perimeter_3d(const ScalarField& u) {
    const Grid& g = u.grid();
    const std::vector<double> s = box_smooth(u);
    const double level = 0.5;
    // Kuhn decomposition of each cube into 6 tetrahedra sharing the main
    // diagonal (000)-(111).
    static const int tets[6][4][3] = {
        {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {1, 1, 1}},
        {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {1, 1, 1}},
        {{0, 0, 0}, {0, 1, 0}, {1, 1, 0}, {1, 1, 1}},
        {{0, 0, 0}, {0, 1, 0}, {0, 1, 1}, {1, 1, 1}},
        {{0, 0, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}},
        {{0, 0, 0}, {0, 0, 1}, {0, 1, 1}, {1, 1, 1}}};

    double area = 0.0;
    Idx3 i{0, 0, 0};
    for (i[0] = 0; i[0] + 1 < g.n()[0]; ++i[0])
        for (i[1] = 0; i[1] + 1 < g.n()[1]; ++i[1])
            for (i[2] = 0; i[2] + 1 < g.n()[2]; ++i[2])
                for (const auto& tet : tets) {
                    Vec3 p[4];
                    double v[4];
                    int above_idx[4], below_idx[4];
                    int na = 0, nb = 0;
                    for (int c = 0; c < 4; ++c) {
                        const Idx3 node{i[0] + tet[c][0], i[1] + tet[c][1], i[2] + tet[c][2]};
                        p[c] = g.node(node);
                        v[c] = s[g.flat(node)];
                        if (v[c] >= level)
                            above_idx[na++] = c;
                        else
                            below_idx[nb++] = c;
                    }
                    if (na == 0 || na == 4) continue;
                    auto cross = [&](int ca, int cb) {
                        const double w = (level - v[ca]) / (v[cb] - v[ca]);
                        return Vec3{p[ca][0] + w * (p[cb][0] - p[ca][0]),
                                    p[ca][1] + w * (p[cb][1] - p[ca][1]),
                                    p[ca][2] + w * (p[cb][2] - p[ca][2])};
                    };
                    if (na == 1 || na == 3) {
                        const int apex = (na == 1) ? above_idx[0] : below_idx[0];
                        Vec3 q[3];
                        int m = 0;
                        for (int c = 0; c < 4; ++c)
                            if (c != apex) q[m++] = cross(apex, c);
                        area += tri_area(q[0], q[1], q[2]);
                    } else {
                        const Vec3 q0 = cross(above_idx[0], below_idx[0]);
                        const Vec3 q1 = cross(above_idx[0], below_idx[1]);
                        const Vec3 q2 = cross(above_idx[1], below_idx[1]);
                        const Vec3 q3 = cross(above_idx[1], below_idx[0]);
                        area += tri_area(q0, q1, q2) + tri_area(q0, q2, q3);
                    }
                }
    return area;
}

}  // namespace

double perimeter(const ScalarField& indicator) {
    for (double v : indicator.values())
        if (v != 0.0 && v != 1.0)
            throw InvalidArgument("perimeter: field is not binary");
    switch (indicator.grid().dim()) {
        case 1: return perimeter_1d(indicator);
        case 2: return perimeter_2d(indicator);
        default: return perimeter_3d(indicator);
    }
}

std::vector<EstimateReport> perimeter_band_bound(const ScalarField& u0,
                                                 const hj::Trajectory& traj, double a, double b,
                                                 const EstimateConstants& k, double rhs_scale) {
    const double C0 = std::max(k.L3, 1e-300);
    const double etabar =
        std::min({0.5 * k.eta, 0.5 * k.eta0, k.eta0 * k.eta0 / (4.0 * C0)});
    if (!(-etabar < a && a < b && b < etabar))
        throw InvalidArgument("perimeter_band_bound: band must lie inside (-etabar, etabar)");
    const double per0 = perimeter(binarize(u0, b));
    const int dim = u0.grid().dim();
    const double h = u0.grid().max_h();
    std::vector<EstimateReport> rows;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        const double lhs = band_measure(traj.snapshots[i], a, b);
        const double rhs = rhs_scale * std::pow(3.0, dim) *
                           std::exp(std::min(k.L4 * t, 700.0)) * (b - a) / k.eta0 * per0;
        rows.push_back(
            EstimateReport::of("perimeter_band_bound", t, lhs, rhs, 0.05 * rhs + 5.0 * h * per0));
    }
    return rows;
}

ScalarField interior_ball_construct(std::span<const Vec3> points, double r, const Grid& grid) {
    if (points.empty()) throw InvalidArgument("interior_ball_construct: no centers");
    if (!(r > 0.0)) throw InvalidArgument("interior_ball_construct: requires r > 0");
    // Profile r^2 - d^2 out to d = 2r, then the tangent cone -3r^2 - 4r (d - 2r);
    // both pieces are semiconvex with constant 2 and the join is C^1.
    auto profile = [r](double d) {
        if (d <= 2.0 * r) return r * r - d * d;
        return -3.0 * r * r - 4.0 * r * (d - 2.0 * r);
    };
    return sample(grid, [&](const Vec3& x) {
        double best = -std::numeric_limits<double>::infinity();
        for (const Vec3& y : points) {
            double d2 = 0.0;
            for (int d = 0; d < grid.dim(); ++d) d2 += (x[d] - y[d]) * (x[d] - y[d]);
            best = std::max(best, profile(std::sqrt(d2)));
        }
        return best;
    });
}

double interior_ball_radius_bound(double C, double eta0) {
    if (!(C > 0.0) || !(eta0 > 0.0))
        throw InvalidArgument("interior_ball_radius_bound: requires C > 0, eta0 > 0");
    return eta0 / C;
}

}  // namespace dislo::analysis
