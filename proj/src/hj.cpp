#include "dislo/hj.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dislo/util.hpp"

namespace dislo::hj {

const ScalarField& Trajectory::at(double t, double tol) const {
    return snapshots[index_of(t, tol)];
}

std::size_t Trajectory::index_of(double t, double tol) const {
    for (std::size_t i = 0; i < times.size(); ++i)
        if (std::abs(times[i] - t) <= tol) return i;
    std::ostringstream os;
    os << "Trajectory: no snapshot at t = " << t;
    throw InvalidArgument(os.str());
}

namespace {

enum class GradKind { expanding, contracting, upwind_max, centered };

ScalarField gradient_norm(const ScalarField& u, GradKind kind) {
    const Grid& g = u.grid();
    for (int d = 0; d < g.dim(); ++d)
        if (g.n()[d] < 3) throw InvalidArgument("gradient: needs >= 3 nodes per axis");
    const auto v = u.values();
    const Idx3 stride{static_cast<long>(g.n()[1]) * g.n()[2], g.n()[2], 1};
    std::vector<double> out(u.size(), 0.0);

    util::parallel_for(u.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t f = begin; f < end; ++f) {
            const Idx3 i = g.unflat(f);
            double s = 0.0;
            for (int d = 0; d < g.dim(); ++d) {
                const double hd = g.h()[d];
                const bool has_m = i[d] > 0;
                const bool has_p = i[d] < g.n()[d] - 1;
                const double dm = has_m ? (v[f] - v[f - stride[d]]) / hd : 0.0;
                const double dp = has_p ? (v[f + stride[d]] - v[f]) / hd : 0.0;
                double gd = 0.0;
                switch (kind) {
                    case GradKind::expanding:
                        gd = std::max({dp, -dm, 0.0});
                        break;
                    case GradKind::contracting:
                        gd = std::max({dm, -dp, 0.0});
                        break;
                    case GradKind::upwind_max:
                        gd = std::max(std::abs(dm), std::abs(dp));
                        break;
                    case GradKind::centered: {
                        if (has_m && has_p)
                            gd = (v[f + stride[d]] - v[f - stride[d]]) / (2.0 * hd);
                        else
                            gd = has_p ? dp : dm;
                        gd = std::abs(gd);
                        break;
                    }
                }
                s += gd * gd;
            }
            out[f] = std::sqrt(s);
        }
    });
    return ScalarField(g, std::move(out), u.time());
}

void check_sign(const ScalarField& c, SignMode mode, double tol_sign) {
    if (mode == SignMode::unrestricted) return;
    for (std::size_t f = 0; f < c.size(); ++f) {
        const double v = c[f];
        const bool bad = (mode == SignMode::nonnegative) ? v < -tol_sign : v > tol_sign;
        if (bad) {
            const Vec3 x = c.grid().node(f);
            std::ostringstream os;
            os << "velocity violates sign mode at (" << x[0] << ", " << x[1] << ", " << x[2]
               << "): c = " << v;
            throw NumericalError(os.str());
        }
    }
}

}  // namespace

ScalarField upwind_gradient_norm(const ScalarField& u, Direction direction) {
    return gradient_norm(u, direction == Direction::expanding ? GradKind::expanding
                                                              : GradKind::contracting);
}

ScalarField upwind_max_gradient_norm(const ScalarField& u) {
    return gradient_norm(u, GradKind::upwind_max);
}

ScalarField centered_gradient_norm(const ScalarField& u) {
    return gradient_norm(u, GradKind::centered);
}

double cfl_dt(double c_sup, const Grid& grid, double cfl) {
    if (!(cfl > 0.0 && cfl <= 0.9)) throw InvalidArgument("cfl_dt: requires 0 < cfl <= 0.9");
    if (c_sup < 0.0) throw InvalidArgument("cfl_dt: requires c_sup >= 0");
    constexpr double tiny = 1e-300;
    return cfl * grid.min_h() / (grid.dim() * std::max(c_sup, tiny));
}

ScalarField step(const ScalarField& u, const ScalarField& c, double dt, SignMode sign_mode) {
    if (!u.grid().same_as(c.grid())) throw InvalidArgument("step: u and c grids differ");
    if (dt < 0.0) throw InvalidArgument("step: dt must be nonnegative");
    const double c_sup = sup_norm(c);
    const double dt_max = cfl_dt(c_sup, u.grid(), 0.9);
    if (dt > dt_max * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "step: CFL violation, dt = " << dt << " requires dt <= " << dt_max;
        throw InvalidArgument(os.str());
    }
    check_sign(c, sign_mode, 1e-12);

    const bool need_expand = sign_mode != SignMode::nonpositive;
    const bool need_contract = sign_mode != SignMode::nonnegative;

    std::vector<double> out(u.size());
    if (need_expand && need_contract) {
        const ScalarField ge = upwind_gradient_norm(u, Direction::expanding);
        const ScalarField gc = upwind_gradient_norm(u, Direction::contracting);
        for (std::size_t f = 0; f < out.size(); ++f) {
            const double cp = std::max(c[f], 0.0);
            const double cm = std::max(-c[f], 0.0);
            out[f] = u[f] + dt * (cp * ge[f] - cm * gc[f]);
        }
    } else {
        const ScalarField gg =
            upwind_gradient_norm(u, need_expand ? Direction::expanding : Direction::contracting);
        for (std::size_t f = 0; f < out.size(); ++f) out[f] = u[f] + dt * c[f] * gg[f];
    }
    return ScalarField(u.grid(), std::move(out));
}

Trajectory solve_local(const LocalProblem& problem, std::span<const double> output_times,
                       double cfl) {
    const double T = problem.horizon;
    if (!(T > 0.0)) throw InvalidArgument("solve_local: horizon must be positive");
    std::set<double> marks{0.0, T};
    for (double t : output_times) {
        if (t < 0.0 || t > T + 1e-12)
            throw InvalidArgument("solve_local: output time outside [0, horizon]");
        marks.insert(std::min(t, T));
    }

    Trajectory traj;
    ScalarField u = problem.u0.with_time(0.0);
    double t = 0.0;
    auto emit = [&](double when) {
        traj.times.push_back(when);
        traj.snapshots.push_back(u.with_time(when));
    };
    emit(0.0);

    for (auto it = std::next(marks.begin()); it != marks.end(); ++it) {
        const double t_target = *it;
        while (t < t_target - 1e-14 * T) {
            ScalarField c = problem.velocity(t);
            double dt = std::min(t_target - t, cfl_dt(sup_norm(c), u.grid(), cfl));
            // Midpoint velocity sampling; shrink dt if the midpoint speed
            // tightened the CFL bound (velocity can grow along the run).
            ScalarField c_mid = problem.velocity(t + 0.5 * dt);
            for (int tries = 0; tries < 8; ++tries) {
                const double dt_ok = cfl_dt(sup_norm(c_mid), u.grid(), cfl);
                if (dt <= dt_ok * (1.0 + 1e-12)) break;
                dt = dt_ok;
                c_mid = problem.velocity(t + 0.5 * dt);
            }
            check_sign(c_mid, problem.sign_mode, problem.tol_sign);
            u = step(u, c_mid, dt, problem.sign_mode);
            t = (std::abs(t + dt - t_target) <= 1e-14 * std::max(T, 1.0)) ? t_target : t + dt;
        }
        t = t_target;
        emit(t);
    }
    return traj;
}

}  // namespace dislo::hj
