#include "dislo/fixedpoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace dislo::fixedpoint {

namespace {

double radial_distance(const Grid& g, std::size_t f) {
    const Vec3 x = g.node(f);
    double r2 = 0.0;
    for (int d = 0; d < g.dim(); ++d) r2 += x[d] * x[d];
    return std::sqrt(r2);
}

double front_radius_nodes(const ScalarField& u) {
    double rmax = 0.0;
    for (std::size_t f = 0; f < u.size(); ++f)
        if (u[f] >= 0.0) rmax = std::max(rmax, radial_distance(u.grid(), f));
    return rmax;
}

}  // namespace

ScalarField indicator(const ScalarField& u, double support_radius) {
    const Grid& g = u.grid();
    std::vector<double> v(u.size(), 0.0);
    const bool clip = std::isfinite(support_radius);
    for (std::size_t f = 0; f < u.size(); ++f) {
        if (u[f] < 0.0) continue;
        if (clip && radial_distance(g, f) > support_radius) continue;
        v[f] = 1.0;
    }
    ScalarField out(g, std::move(v));
    return u.time() ? out.with_time(*u.time()) : out;
}

double default_tol_fp(const Grid& grid, double R0) {
    return std::max(1e-3 * ball_measure(grid.dim(), R0), 5.0 * grid.cell_volume());
}

DislocationProblem DislocationProblem::make(nonlocal::Kernel kernel, hj::VelocityFn c1,
                                            ScalarField u0, double horizon, double R0,
                                            bool allow_h5_violation, double eta_override) {
    if (!(horizon > 0.0)) throw InvalidArgument("DislocationProblem: horizon must be positive");
    if (!(R0 > 0.0)) throw InvalidArgument("DislocationProblem: R0 must be positive");
    const Grid& g = u0.grid();
    for (std::size_t f = 0; f < u0.size(); ++f)
        if (u0[f] >= 0.0 && radial_distance(g, f) > R0 + 1e-12) {
            std::ostringstream os;
            os << "DislocationProblem: {u0 >= 0} escapes B(0, R0), node at radius "
               << radial_distance(g, f);
            throw InvalidArgument(os.str());
        }

    DislocationProblem p{std::move(kernel), std::move(c1), std::move(u0), horizon, R0,
                         hj::SignMode::nonnegative, allow_h5_violation, {}};

    if (!allow_h5_violation) {
        const double times[]{0.0, horizon};
        for (const auto& row : nonlocal::check_h5(p.kernel, p.c1, times))
            if (!row.pass) {
                std::ostringstream os;
                os << "DislocationProblem: (H5) fails at t = " << row.t
                   << " with margin " << row.margin
                   << " (pass allow_h5_violation to run outside the (H5) theory)";
                throw InvalidArgument(os.str());
            }
    }

    // (H1)/(H4) constants are measured on c0 and c1 themselves; the assembled
    // velocity only inherits the inflated bounds L1 (1 + M) and cbar.
    // k = 4 second differences smooth the cone-tip artefacts of kinked data.
    const ScalarField c_snaps[]{p.kernel.at(0.0), p.c1(0.0), p.c1(horizon)};
    p.constants = analysis::estimate_constants(c_snaps, p.u0, 4);
    analysis::derive_constants(p.constants, p.u0, nullptr, horizon, R0, p.kernel.l1_bound,
                               eta_override);
    p.constants.require_valid();

    if (!allow_h5_violation) {
        const double reach = R0 + p.constants.cbar * horizon;
        for (int d = 0; d < g.dim(); ++d) {
            const double margin = 4.0 * g.h()[d];
            if (g.lo()[d] > -(reach + margin) || g.hi()[d] < reach + margin) {
                std::ostringstream os;
                os << "DislocationProblem: box must contain B(0, R0 + cbar T) = B(0, " << reach
                   << ") with a 4-cell margin on axis " << d;
                throw InvalidArgument(os.str());
            }
        }
    }
    return p;
}

double select_slab_length(const analysis::EstimateConstants& k, double deltabar, double lip_u0,
                          double T, double R0, int dim) {
    if (!(deltabar < 0.5 * k.eta))
        throw InvalidArgument("select_slab_length: requires deltabar < eta / 2");
    if (!(lip_u0 > 0.0)) throw InvalidArgument("select_slab_length: requires lip_u0 > 0");
    const double c0_l1 = std::max(k.cbar - k.L1p, 0.0);
    const double growth = std::exp(k.L1 * (1.0 + k.M) * T);
    constexpr double safety = 1.1;
    double tau = T;
    if (c0_l1 > 0.0) tau = std::min(tau, deltabar / (2.0 * lip_u0 * growth * c0_l1 * safety));
    const double c_contr =
        2.0 * k.L5 * growth * lip_u0 * ball_measure(dim, R0 + 1.0) / k.eta;
    if (c_contr > 0.0) tau = std::min(tau, 1.0 / (2.0 * c_contr));
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw NumericalError("select_slab_length: degenerate constants give no positive slab");
    return tau;
}

namespace {

// Velocity provider for one Picard iterate. rho is piecewise constant in time,
// so the convolution is cached per left-sample index (kernels here are time
// constant; a time-varying kernel falls back to recomputation).
struct SlabVelocity {
    const DislocationProblem& problem;
    const nonlocal::IndicatorDensity& rho;
    double t_begin = 0.0;
    mutable std::map<std::size_t, ScalarField> cache{};

    ScalarField operator()(double t_local) const {
        const double t = t_begin + t_local;
        const std::size_t idx = rho.left_index(t);
        const bool cacheable = problem.kernel.time_constant;
        if (cacheable) {
            auto it = cache.find(idx);
            if (it == cache.end()) {
                ScalarField conv =
                    nonlocal::convolve(problem.kernel.at(t), rho.densities[idx]);
                it = cache.emplace(idx, std::move(conv)).first;
            }
            ScalarField c = field_add(it->second, problem.c1(t));
            if (!problem.allow_h5_violation) {
                double worst = 0.0;
                for (std::size_t f = 0; f < c.size(); ++f) worst = std::min(worst, c[f]);
                if (worst < -1e-12) {
                    std::ostringstream os;
                    os << "picard_map: assembled velocity violates (H2), min = " << worst;
                    throw NumericalError(os.str());
                }
            }
            return c.with_time(t);
        }
        return nonlocal::assemble_velocity(problem.kernel, problem.c1, rho, t,
                                           !problem.allow_h5_violation);
    }
};

void check_box_margin(const ScalarField& u) {
    const Grid& g = u.grid();
    for (std::size_t f = 0; f < u.size(); ++f) {
        if (u[f] < 0.0) continue;
        const Vec3 x = g.node(f);
        for (int d = 0; d < g.dim(); ++d)
            if (x[d] < g.lo()[d] + 4.0 * g.h()[d] || x[d] > g.hi()[d] - 4.0 * g.h()[d])
                throw NumericalError(
                    "solve_nonlocal: front reached the 4-cell boundary margin; enlarge the box");
    }
}

}  // namespace

nonlocal::IndicatorDensity picard_map(const DislocationProblem& problem,
                                      const nonlocal::IndicatorDensity& rho,
                                      const ScalarField& slab_initial,
                                      std::span<const double> sample_times, double cfl,
                                      hj::Trajectory* slab_traj) {
    if (sample_times.size() < 2)
        throw InvalidArgument("picard_map: needs at least the slab endpoints");
    const double t0 = sample_times.front();
    const double t1 = sample_times.back();

    hj::LocalProblem local{slab_initial, SlabVelocity{problem, rho, t0}, t1 - t0,
                           problem.sign_mode};
    std::vector<double> local_times;
    for (double t : sample_times.subspan(1)) local_times.push_back(t - t0);
    const hj::Trajectory traj_local = hj::solve_local(local, local_times, cfl);

    const double cbar = problem.constants.cbar;
    const double h = slab_initial.grid().max_h();
    nonlocal::IndicatorDensity out;
    hj::Trajectory global;
    for (std::size_t i = 0; i < traj_local.times.size(); ++i) {
        const double t = t0 + traj_local.times[i];
        const ScalarField u = traj_local.snapshots[i].with_time(t);
        const double support =
            problem.allow_h5_violation ? std::numeric_limits<double>::infinity()
                                       : problem.R0 + cbar * t;
        if (!problem.allow_h5_violation) {
            const double rf = front_radius_nodes(u);
            if (rf > support + 2.0 * h) {
                std::ostringstream os;
                os << "picard_map: front radius " << rf << " escapes B(0, R0 + cbar t) + 2h = "
                   << support + 2.0 * h << " at t = " << t;
                throw NumericalError(os.str());
            }
        } else {
            check_box_margin(u);
        }
        out.times.push_back(t);
        out.densities.push_back(indicator(u, support));
        out.support_radius.push_back(support);
        global.times.push_back(t);
        global.snapshots.push_back(u);
    }
    if (slab_traj) *slab_traj = std::move(global);
    return out;
}

NonlocalSolution solve_nonlocal(const DislocationProblem& problem,
                                std::span<const double> output_times, double tol_fp,
                                int max_iter, const SlabOptions& options) {
    const double T = problem.horizon;
    const Grid& grid = problem.u0.grid();
    if (tol_fp <= 0.0) tol_fp = default_tol_fp(grid, problem.R0);
    if (max_iter < 2) throw InvalidArgument("solve_nonlocal: max_iter must be >= 2");

    std::set<double> wanted{0.0, T};
    for (double t : output_times) {
        if (t < 0.0 || t > T + 1e-12)
            throw InvalidArgument("solve_nonlocal: output time outside [0, horizon]");
        wanted.insert(std::min(t, T));
    }

    NonlocalSolution sol;
    sol.constants = problem.constants;
    ScalarField v = problem.u0.with_time(0.0);
    double theta = 0.0;
    int slab_index = 0;

    sol.traj.times.push_back(0.0);
    sol.traj.snapshots.push_back(v);

    while (theta < T - 1e-12 * T) {
        // Slab length: the proof-chain value, floored at min_cfl_steps CFL
        // steps of the current speed, capped at the remaining horizon.
        nonlocal::IndicatorDensity rho_theta;
        const double support0 = problem.allow_h5_violation
                                    ? std::numeric_limits<double>::infinity()
                                    : problem.R0 + problem.constants.cbar * theta;
        rho_theta.times = {theta};
        rho_theta.densities = {indicator(v, support0)};
        rho_theta.support_radius = {support0};
        const ScalarField c_now = nonlocal::assemble_velocity(
            problem.kernel, problem.c1, rho_theta, theta, !problem.allow_h5_violation);
        const double dt_est =
            hj::cfl_dt(std::max(sup_norm(c_now), 1e-12), grid, options.cfl);

        const double lip_v = max_difference_quotient(v);
        const double deltabar = 0.45 * problem.constants.eta;
        double tau = 0.0;
        try {
            tau = select_slab_length(problem.constants, deltabar, std::max(lip_v, 1e-12), T,
                                     problem.R0, grid.dim());
        } catch (const NumericalError&) {
            tau = 0.0;  // degenerate formula constants; the CFL floor takes over
        }
        bool floored = false;
        const double tau_floor = options.min_cfl_steps * dt_est;
        if (tau < tau_floor) {
            tau = tau_floor;
            floored = true;
        }
        tau = std::min(tau, T - theta);

        // Sample times: uniform spacing <= min(tau/8, CFL dt), merged with the
        // requested output times inside the slab.
        const double ds = std::min(tau / 8.0, dt_est) * options.sample_scale;
        const long nsamp = std::max(2L, static_cast<long>(std::ceil(tau / ds)));
        std::vector<double> sample_times;
        for (long i = 0; i < nsamp; ++i)
            sample_times.push_back(theta +
                                   tau * static_cast<double>(i) / static_cast<double>(nsamp));
        sample_times.push_back(theta + tau);
        for (double t : wanted) {
            if (t <= theta + 1e-12 || t >= theta + tau - 1e-12) continue;
            bool close = false;
            for (double s : sample_times) close = close || std::abs(s - t) < 1e-9;
            if (!close) sample_times.push_back(t);
        }
        std::sort(sample_times.begin(), sample_times.end());

        // rho_0: the time-frozen indicator of the slab's initial field.
        nonlocal::IndicatorDensity rho;
        for (double t : sample_times) {
            const double support = problem.allow_h5_violation
                                       ? std::numeric_limits<double>::infinity()
                                       : problem.R0 + problem.constants.cbar * t;
            rho.times.push_back(t);
            rho.densities.push_back(rho_theta.densities.front());
            rho.support_radius.push_back(support);
        }

        PicardState state;
        state.slab_index = slab_index;
        state.t_begin = theta;
        state.t_end = theta + tau;
        state.tau = tau;
        state.lip_start = lip_v;
        state.tau_floored = floored;

        hj::Trajectory slab_traj;
        bool converged = false;
        for (int it = 0; it < max_iter; ++it) {
            nonlocal::IndicatorDensity next =
                picard_map(problem, rho, v, sample_times, options.cfl, &slab_traj);
            double dist = 0.0;
            for (std::size_t i = 0; i < next.densities.size(); ++i)
                dist = std::max(dist, l1_norm(field_sub(next.densities[i], rho.densities[i])));
            state.distances.push_back(dist);
            state.iterations = it + 1;
            rho.densities = std::move(next.densities);
            if (dist <= tol_fp) {
                converged = true;
                break;
            }
        }
        for (std::size_t i = 1; i < state.distances.size(); ++i)
            if (state.distances[i - 1] > 0.0)
                state.contraction_ratio_max = std::max(
                    state.contraction_ratio_max, state.distances[i] / state.distances[i - 1]);
        if (!converged) {
            std::ostringstream os;
            os << "solve_nonlocal: slab " << slab_index << " did not contract below " << tol_fp
               << " in " << max_iter << " iterations (last distance "
               << state.distances.back() << ", max ratio " << state.contraction_ratio_max
               << ")";
            throw FixedPointFailure(os.str(), state);
        }
        sol.slabs.push_back(state);

        // Glue: collect requested outputs, densities, and the terminal field.
        // Slab boundaries are always kept so the glued trajectory exposes the
        // exact fields the next slab starts from.
        for (std::size_t i = 0; i < slab_traj.times.size(); ++i) {
            const double t = slab_traj.times[i];
            bool keep = i + 1 == slab_traj.times.size();
            for (double want : wanted) keep = keep || std::abs(want - t) <= 1e-10;
            if (keep && t > sol.traj.times.back() + 1e-12) {
                sol.traj.times.push_back(t);
                sol.traj.snapshots.push_back(slab_traj.snapshots[i]);
            }
        }
        // The returned density keeps the requested output times plus slab
        // boundaries; the dense per-slab samples only feed the Picard norm.
        for (std::size_t i = 0; i < rho.times.size(); ++i) {
            const double t = rho.times[i];
            bool keep = i == 0 || i + 1 == rho.times.size();
            for (double want : wanted) keep = keep || std::abs(want - t) <= 1e-10;
            if (!keep) continue;
            if (!sol.rho.times.empty() && t <= sol.rho.times.back() + 1e-12) continue;
            sol.rho.times.push_back(t);
            sol.rho.densities.push_back(rho.densities[i]);
            sol.rho.support_radius.push_back(rho.support_radius[i]);
        }

        v = slab_traj.snapshots.back();
        theta += tau;
        ++slab_index;
    }

    // Refresh the solution-dependent constants on the computed trajectory.
    analysis::derive_constants(sol.constants, problem.u0, &sol.traj, T, problem.R0,
                               problem.kernel.l1_bound,
                               sol.constants.eta);
    return sol;
}

}  // namespace dislo::fixedpoint
