#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dislo/grid.hpp"
#include "dislo/hj.hpp"
#include "dislo/nonlocal.hpp"

namespace dislo::analysis {

/// Every named constant of the estimate chain. The measured block is filled
/// by estimate_constants; the derived block by derive_constants.
struct EstimateConstants {
    // Measured from the data.
    double L1 = 0.0;    // spatial Lipschitz bound of the velocity
    double L1p = 0.0;   // sup bound of the velocity
    double L2 = 0.0;    // semiconvexity constant of the velocity
    double L3 = 0.0;    // semiconvexity constant of u0
    double eta0 = 0.0;  // (H3) constant of u0
    // Derived.
    double C = 0.0;      // semiconvexity constant of the solution
    double gamma = 0.0;  // lower-gradient decay rate, gamma = L1 (1 + M)
    double eta = 0.0;    // lower-gradient constant (empirical, 0.5 safety)
    double L4 = 0.0;     // L1 + e^{gamma T / 2} L1' C / sqrt(2 eta)
    double L5 = 0.0;     // C0 e^{L4 T}
    double cbar = 0.0;   // |c0|_T + L1'
    double M = 0.0;      // measure of B(0, R0 + cbar T)

    void require_valid() const;
};

/// One audited inequality: pass iff margin = rhs - lhs >= -tolerance.
struct EstimateReport {
    std::string name;
    double t = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    bool pass = false;
    std::string context;

    static EstimateReport of(std::string name, double t, double lhs, double rhs,
                             double tolerance = 0.0, std::string context = {});
};

bool all_pass(std::span<const EstimateReport> reports);

/// Smooth plateau profile phi for the band [a, b] with quintic ramps of
/// width epsilon: 0 below a - eps, 1 on [a, b], 0 above b + eps.
struct MollifiedIndicator {
    BandSpec band;

    double phi(double r) const;
    /// Primitive of phi vanishing at -infinity.
    double phi_primitive(double r) const;
    /// vol * sum phi(u_i), the smooth band mass of a field.
    double band_mass(const ScalarField& u) const;
};

/// Nodes where the upwind-max and centered gradient magnitudes disagree by
/// more than 50% are kink nodes, excluded from pointwise gradient checks.
std::vector<bool> kink_mask(const ScalarField& u, double rel_disagreement = 0.5);

/// Measure L1, L1', L2, L3 and eta0 from velocity snapshots and the initial
/// datum. eta0 probes |u0| + |Du0| on the band |u0| < probe_band_rel * sup|u0|.
/// Semiconvexity uses second differences at the given step (k = 2 default,
/// k = 4 recommended for kinked data). Throws when the probe finds
/// eta0 <= 0 ((H3) violation).
EstimateConstants estimate_constants(std::span<const ScalarField> c_snapshots,
                                     const ScalarField& u0, long sd_step = 2,
                                     double probe_band_rel = 0.25);

/// Fill the derived block: cbar, M, gamma, the empirical eta (largest value
/// with min{|Du0| : |u0| < eta/2} >= sqrt(2 eta) e^{-gamma T / 2}, halved,
/// capped at eta0, overridable), C (from the trajectory when given, else L3),
/// L4 and L5.
void derive_constants(EstimateConstants& k, const ScalarField& u0, const hj::Trajectory* traj,
                      double T, double R0, double c0_l1, double eta_override = 0.0);

/// Semiconvexity constant of a trajectory: max over snapshots of
/// -second_difference_min at the given step, clamped at 0.
double measure_solution_semiconvexity(const hj::Trajectory& traj, long sd_step = 4);

/// Audit of the two-solutions bound
///   sup |u1 - u2|(., t) <= lip_u0 e^{L1 t} int_0^t sup |c1 - c2|(., s) ds,
/// with 5% slack plus 5 h lip_u0. rhs_scale deflates the right side for
/// negative controls.
std::vector<EstimateReport> check_solution_difference(const hj::Trajectory& u1,
                                                      const hj::Trajectory& u2,
                                                      const hj::VelocityFn& c1,
                                                      const hj::VelocityFn& c2, double lip_u0,
                                                      double L1, double rhs_scale = 1.0);

enum class PrincipleMode { increase, decrease };

/// Increase principle: sup over B(x0, 2 delta / eta0) of v is at least
/// v(x0) + delta (mirrored for the decrease mode of the c <= 0 theory).
EstimateReport increase_principle_check(const ScalarField& v, double eta0, double delta,
                                        const Idx3& x0,
                                        PrincipleMode mode = PrincipleMode::increase);

/// Finite speed of propagation: {u(., t) >= 0} inside B(0, R0 + speed t) + 2h.
std::vector<EstimateReport> check_front_containment(const hj::Trajectory& traj, double R0,
                                                    double speed_bound);

/// Near-front lower gradient bound: off kink nodes, |u| < eta/2 implies
/// |Du| >= sqrt(2 eta) e^{-gamma t / 2} - 10 h Lip(u(., t)).
std::vector<EstimateReport> check_lower_gradient_bound(const hj::Trajectory& traj, double eta,
                                                       double gamma);

/// Gronwall band growth: smooth mass and band measure of {a <= u <= b} at
/// time t bounded by e^{L4 t} times their initial values (5% slack plus an
/// O(h perimeter) budget). eta gates the admissibility of the band.
std::vector<EstimateReport> gronwall_band_check(const hj::Trajectory& traj,
                                                const BandSpec& band, double L4, double eta,
                                                double rhs_scale = 1.0);

/// Initial-datum band bound at the snapshot's time:
///   band measure <= L5 e^{L4 (t - T)} ... evaluated as C0 e^{L4 t} (b - a) / eta
///   times the measure of B(0, R0 + 1).
EstimateReport initial_band_bound(const ScalarField& snapshot, double a, double b,
                                  const EstimateConstants& k, double R0,
                                  double rhs_scale = 1.0);

struct L1Jump {
    double t_from;
    double t_to;
    double jump;  // L1 distance of adjacent indicator samples
};

/// Adjacent-sample L1 distances of an indicator density and the empirical
/// modulus slope max jump / dt.
std::vector<L1Jump> l1_continuity_modulus(const nonlocal::IndicatorDensity& indicators);

/// Bound the jumps by K |t - s| + 5 h per with measured K and per.
std::vector<EstimateReport> l1_continuity_check(const nonlocal::IndicatorDensity& indicators,
                                                double speed_bound, double perimeter_bound);

/// Boundary size of a binary field: 2-D marching-squares contour length,
/// 1-D interior 0/1 transition count, 3-D marching-tetrahedra surface area.
/// Box faces are excluded. The binary field is box-smoothed once before
/// extraction so sub-cell crossings carry angular information.
double perimeter(const ScalarField& indicator);

/// Perimeter refinement of the band bound: band measure at time t bounded by
/// 3^N e^{L4 t} (b - a) / eta0 * per({u0 >= b}), for bands inside
/// (-etabar, etabar), etabar = min{eta/2, eta0/2, eta0^2 / (4 C0)}.
std::vector<EstimateReport> perimeter_band_bound(const ScalarField& u0,
                                                 const hj::Trajectory& traj, double a, double b,
                                                 const EstimateConstants& k,
                                                 double rhs_scale = 1.0);

/// Supremum of tangent-extended ball profiles r^2 - |x - y|^2 over the given
/// centers: semiconvex with constant 2, Lipschitz, {v >= 0} the union of the
/// closed balls B(y, r).
ScalarField interior_ball_construct(std::span<const Vec3> points, double r, const Grid& grid);

/// Certified interior ball radius eta0 / C of {v >= 0} for v semiconvex with
/// constant C satisfying (H3) with eta0.
double interior_ball_radius_bound(double C, double eta0);

}  // namespace dislo::analysis
