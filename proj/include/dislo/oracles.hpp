#pragma once

#include <functional>

#include "dislo/grid.hpp"

namespace dislo::oracles {

/// Speed law of a radially symmetric front scenario.
enum class RadialLaw { constant_speed, time_speed, volume_driven };

/// Radial reference scenario: a front starting as the sphere of radius R0.
/// For the volume-driven law in dimension >= 2 the radius blows up at
/// t* = 1 / ((N-1) C_N R0^{N-1}); queries are limited to t <= 0.95 t*.
struct RadialScenario {
    double R0;
    int dim;
    RadialLaw law;
    double cbar = 0.0;                         // constant_speed
    std::function<double(double)> speed_of_t;  // time_speed

    static RadialScenario constant(int dim, double R0, double cbar);
    static RadialScenario time_dependent(int dim, double R0, std::function<double(double)> c);
    static RadialScenario volume(int dim, double R0);

    /// Blow-up time (volume_driven, dim >= 2); +inf otherwise.
    double blow_up_time() const;
};

/// Exact solution value for u_t = cbar |Du| with constant cbar >= 0:
/// the maximum of u0 over the closed ball B(x, cbar t), located by
/// branch-and-bound using the Lipschitz bound `lip` of u0. Exact to ~1e-7.
double oleinik_lax(const std::function<double(const Vec3&)>& u0, double cbar, const Vec3& x,
                   double t, int dim, double lip = 1.0);

/// Front radius R(t) of the scenario. time_speed integrates the speed with
/// adaptive Simpson quadrature to 1e-10.
double radial_front(const RadialScenario& scenario, double t);

/// C_N (r_out^N - r_in^N)
double annulus_measure(double r_in, double r_out, int dim);

}  // namespace dislo::oracles
