#pragma once

#include <span>
#include <vector>

#include "dislo/analysis.hpp"
#include "dislo/grid.hpp"
#include "dislo/hj.hpp"
#include "dislo/nonlocal.hpp"

namespace dislo::fixedpoint {

/// The nonlocal dislocation problem u_t = c[1_{u >= 0}] |Du| on [0, horizon].
struct DislocationProblem {
    nonlocal::Kernel kernel;
    hj::VelocityFn c1;
    ScalarField u0;
    double horizon;
    double R0;  // {u0 >= 0} contained in B(0, R0)
    hj::SignMode sign_mode = hj::SignMode::nonnegative;
    bool allow_h5_violation = false;
    analysis::EstimateConstants constants;

    /// Validate the front containment of u0, measure the constants, audit
    /// (H5) and (unless allow_h5_violation) the 4-cell box margin around
    /// B(0, R0 + cbar T).
    static DislocationProblem make(nonlocal::Kernel kernel, hj::VelocityFn c1, ScalarField u0,
                                   double horizon, double R0,
                                   bool allow_h5_violation = false,
                                   double eta_override = 0.0);
};

/// Per-slab iteration record.
struct PicardState {
    int slab_index = 0;
    double t_begin = 0.0;
    double t_end = 0.0;
    double tau = 0.0;
    std::vector<double> distances;  // |rho_{k+1} - rho_k|_{theta,tau}
    int iterations = 0;
    double contraction_ratio_max = 0.0;
    double lip_start = 0.0;  // Lipschitz constant of the slab's initial field
    bool tau_floored = false;
};

/// max_iter exhausted without contraction below tol_fp.
struct FixedPointFailure : NumericalError {
    FixedPointFailure(const std::string& what, PicardState state)
        : NumericalError(what), state(std::move(state)) {}
    PicardState state;
};

struct SlabOptions {
    double cfl = 0.5;
    double sample_scale = 1.0;  // scales the slab sample spacing
    long min_cfl_steps = 20;    // floor on tau in units of the CFL step
};

struct NonlocalSolution {
    hj::Trajectory traj;
    nonlocal::IndicatorDensity rho;
    std::vector<PicardState> slabs;
    analysis::EstimateConstants constants;
};

/// 1 where u >= 0 (closed-set convention) and |x| <= support_radius, else 0.
ScalarField indicator(const ScalarField& u, double support_radius);

/// Default fixed-point tolerance: max(1e-3 * measure(B(0, R0)), 5 vol).
double default_tol_fp(const Grid& grid, double R0);

/// Slab length from the contraction-proof chain:
///   tau = min( deltabar / (2 lip_u0 e^{L1 (1+M) T} |c0|_T * 1.1),
///              (2 C_contr)^{-1}, T ),
///   C_contr = 2 L5 e^{L1 (1+M) T} lip_u0 measure(B(0, R0 + 1)) / eta.
double select_slab_length(const analysis::EstimateConstants& k, double deltabar, double lip_u0,
                          double T, double R0, int dim);

/// One application of Psi: solve the local problem on the slab with velocity
/// c[rho] and return the support-clipped indicators at the slab sample times.
/// `slab_traj` (optional) receives the solved trajectory.
nonlocal::IndicatorDensity picard_map(const DislocationProblem& problem,
                                      const nonlocal::IndicatorDensity& rho,
                                      const ScalarField& slab_initial,
                                      std::span<const double> sample_times, double cfl = 0.5,
                                      hj::Trajectory* slab_traj = nullptr);

/// Slab-wise Picard iteration of Psi(rho) = 1_{u >= 0} across [0, horizon].
NonlocalSolution solve_nonlocal(const DislocationProblem& problem,
                                std::span<const double> output_times, double tol_fp = 0.0,
                                int max_iter = 30, const SlabOptions& options = {});

}  // namespace dislo::fixedpoint
