#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dislo/grid.hpp"
#include "dislo/hj.hpp"

namespace dislo::config {

struct ConfigError : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};

enum class InitialKind { cone, ball_sdf, union_of_balls, file };
enum class KernelKind { none, gaussian, bump, constant, delta, file };
enum class FieldKind { constant, file };

/// Fully-typed scenario description. Parsing is total: every key is consumed
/// or the parse fails with a line/field diagnostic.
struct ScenarioConfig {
    // [grid]
    int dim = 2;
    Vec3 lo{}, hi{};
    Idx3 n{1, 1, 1};

    // [initial]
    InitialKind initial = InitialKind::cone;
    double r0 = 1.0;
    std::vector<Vec3> centers;
    double ball_r = 0.0;
    std::string initial_path;

    // [kernel] (absent section => local problem)
    KernelKind kernel = KernelKind::none;
    double sigma = 0.0;
    double radius = 0.0;
    double amplitude = 1.0;
    double kernel_l1 = 0.0;     // > 0: rescale to this discrete L1 norm
    double value = 0.0;         // constant kernel
    double box_radius = 0.0;    // constant kernel box half width
    std::string kernel_path;

    // [c1]
    FieldKind c1 = FieldKind::constant;
    double c1_value = 0.0;
    std::string c1_path;

    // [run]
    double T = 1.0;
    std::vector<double> output_times;
    double cfl = 0.5;
    hj::SignMode sign_mode = hj::SignMode::nonnegative;
    bool allow_h5_violation = false;
    double tol_fp = 0.0;  // 0: default
    int max_iter = 30;
    double eta_override = 0.0;  // 0: empirical
    double sample_scale = 1.0;

    // [verify] (optional)
    std::optional<double> band_a, band_b, band_eps;
    double eta_check = 0.0;  // 0: constants.eta
    std::optional<double> per_band_a, per_band_b;
    double speed_bound = 0.0;  // 0: cbar

    std::uint64_t hash = 0;  // FNV-1a of the canonicalized key/value pairs
};

ScenarioConfig parse_config_text(const std::string& text, const std::string& origin = "config");
ScenarioConfig parse_config_file(const std::filesystem::path& path);

}  // namespace dislo::config
