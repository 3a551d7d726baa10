#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dislo/analysis.hpp"
#include "dislo/config.hpp"
#include "dislo/fixedpoint.hpp"
#include "dislo/grid.hpp"
#include "dislo/hj.hpp"
#include "dislo/nonlocal.hpp"

namespace dislo::runner {

/// Config resolved into concrete fields and providers.
struct Scenario {
    config::ScenarioConfig cfg;
    Grid grid;
    ScalarField u0;
    std::optional<nonlocal::Kernel> kernel;
    hj::VelocityFn c1;
    double R0;
};

Scenario build_scenario(const config::ScenarioConfig& cfg);

/// Kernel snapshot for a built-in spec on a node-aligned grid with the given
/// spacing (kernels for files are read as-is).
ScalarField build_kernel_field(const config::ScenarioConfig& cfg, const Vec3& h, int dim);

struct RunResult {
    hj::Trajectory traj;
    std::optional<nonlocal::IndicatorDensity> rho;
    std::vector<fixedpoint::PicardState> slabs;
    analysis::EstimateConstants constants;
    std::vector<std::pair<double, double>> front_radius;  // (t, R)
    bool nonlocal = false;
};

RunResult run_scenario(const Scenario& scenario);

/// The full estimate battery on a computed run.
std::vector<analysis::EstimateReport> verify_scenario(const Scenario& scenario,
                                                      const RunResult& result);

/// Manifest, snapshots, indicator snapshots, verification report and the
/// front-radius series.
void write_run(const std::filesystem::path& dir, const Scenario& scenario,
               const RunResult& result,
               std::span<const analysis::EstimateReport> reports);

/// Front radius as the zero crossing of the angular-average radial profile.
double front_radius_radial(const ScalarField& u);

std::string manifest_text(const Scenario& scenario, const RunResult& result,
                          bool with_timestamp = true);

}  // namespace dislo::runner
