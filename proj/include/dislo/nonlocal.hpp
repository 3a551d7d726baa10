#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "dislo/grid.hpp"
#include "dislo/hj.hpp"

namespace dislo::nonlocal {

/// Convolution kernel c0(.,t), compactly supported inside its own box, with
/// a declared bound on sup_t |c0(.,t)|_L1.
struct Kernel {
    std::function<ScalarField(double)> provider;
    double l1_bound = 0.0;
    bool time_constant = true;

    /// Snapshot at time t; validates the declared L1 bound. Time-constant
    /// kernels are evaluated once and cached.
    ScalarField at(double t) const;

    static Kernel constant_in_time(ScalarField c0);

private:
    mutable std::shared_ptr<const ScalarField> cache_;
};

/// Time-sampled element of X = C([0,T], L1): 0 <= rho <= 1 with compact
/// support inside B(0, support_radius(t)). Time interpolation between stored
/// samples is piecewise constant from the left.
struct IndicatorDensity {
    std::vector<double> times;
    std::vector<ScalarField> densities;
    std::vector<double> support_radius;

    std::size_t left_index(double t) const;
    const ScalarField& left_sample(double t) const { return densities[left_index(t)]; }

    /// Enforce 0 <= rho <= 1 and the support clipping (tolerance on values 1e-12).
    void validate() const;
};

enum class ConvolvePath { automatic, direct, transform };

/// Space convolution in the correlation orientation:
///   out(x) = vol * sum_y c0(y - x) rho(y),
/// evaluated on rho's grid with free-space (zero-padded) boundary handling.
/// Kernel and field grids must share spacings and be node-aligned. Rejects
/// when rho is nonzero on its outermost cell layer (its compact support does
/// not fit the evaluation box). `direct` is the brute-force reference path;
/// `transform` uses the zero-padded FFT, with a prefix-sum shortcut for
/// kernels that are a constant on a full rectangular box.
ScalarField convolve(const ScalarField& c0, const ScalarField& rho,
                     ConvolvePath path = ConvolvePath::automatic);

/// c[rho](.,t) = (c0 * rho)(.,t) + c1(.,t). When enforce_h2 is set (the H5
/// scenario), a produced field with min < -tol_sign is a diagnostic error
/// carrying the worst node.
ScalarField assemble_velocity(const Kernel& kernel, const hj::VelocityFn& c1,
                              const IndicatorDensity& rho, double t, bool enforce_h2 = true,
                              double tol_sign = 1e-12);

struct H5Row {
    double t;
    double c0_l1;    // computed |c0(.,t)|_L1
    double margin;   // min over nodes of c1(x,t) - |c0(.,t)|_L1
    bool pass;
};

/// Report-only audit of (H5): c1(x,t) >= |c0(.,t)|_L1.
std::vector<H5Row> check_h5(const Kernel& kernel, const hj::VelocityFn& c1,
                            std::span<const double> times, double tol_sign = 1e-12);

}  // namespace dislo::nonlocal
