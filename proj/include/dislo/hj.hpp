#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dislo/grid.hpp"

namespace dislo::hj {

enum class SignMode { nonnegative, nonpositive, unrestricted };

enum class Direction { expanding, contracting };

using VelocityFn = std::function<ScalarField(double)>;

/// Local level-set problem u_t = c(x,t) |Du| on [0, horizon].
struct LocalProblem {
    ScalarField u0;
    VelocityFn velocity;
    double horizon;
    SignMode sign_mode = SignMode::nonnegative;
    double tol_sign = 1e-12;
};

/// Time-ordered snapshots of a solution; always includes t = 0 and t = horizon.
struct Trajectory {
    std::vector<double> times;
    std::vector<ScalarField> snapshots;

    const ScalarField& at(double t, double tol = 1e-9) const;
    std::size_t index_of(double t, double tol = 1e-9) const;
};

/// Godunov upwind approximation of |Du| per node. `expanding` is the branch
/// consistent with c >= 0 (values propagate from above: local maxima are
/// preserved, local minima are filled); `contracting` is its mirror for
/// c <= 0. Missing one-sided differences at box faces enter as zero slope,
/// which keeps the scheme monotone up to the boundary.
ScalarField upwind_gradient_norm(const ScalarField& u, Direction direction);

/// Gradient magnitude with the larger of the two one-sided quotients per
/// axis; used by the estimate probes (eta_0, near-front gradient bounds).
ScalarField upwind_max_gradient_norm(const ScalarField& u);

/// Centered-difference gradient magnitude (one-sided at faces). Disagreement
/// with upwind_max_gradient_norm flags kink nodes.
ScalarField centered_gradient_norm(const ScalarField& u);

/// CFL-stable explicit step size: cfl * min_d h_d / (N * max(c_sup, tiny)).
double cfl_dt(double c_sup, const Grid& grid, double cfl);

/// One forward Euler step u + dt (c+ G_expand(u) - c- G_contract(u)).
/// Rejects dt above the stability bound (CFL number 0.9).
ScalarField step(const ScalarField& u, const ScalarField& c, double dt, SignMode sign_mode);

/// March the local problem with CFL sub-steps, sampling the velocity at the
/// sub-step midpoint, landing exactly on each output time. The returned
/// trajectory contains the union of output_times with {0, horizon}.
Trajectory solve_local(const LocalProblem& problem, std::span<const double> output_times,
                       double cfl = 0.5);

}  // namespace dislo::hj
