#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "dislo/field_io.hpp"
#include "dislo/oracles.hpp"
#include "dislo/runner.hpp"
#include "dislo/util.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitSolverFailure = 3;

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    int threads = 1;
    double cfl = 0.0;  // 0: keep the config value
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Scenario configuration file")->required();
    cmd->add_option("--out", opts.out_dir, "Output directory");
    cmd->add_option("--threads", opts.threads, "Worker threads (0 = auto)");
    cmd->add_option("--cfl", opts.cfl, "Override the CFL number");
}

int run_solve(const CommonOpts& opts, bool want_nonlocal, bool verify_only) {
    dislo::util::set_threads(opts.threads);
    dislo::config::ScenarioConfig cfg = dislo::config::parse_config_file(opts.config_path);
    if (opts.cfl > 0.0) cfg.cfl = opts.cfl;
    if (!verify_only) {
        const bool has_kernel = cfg.kernel != dislo::config::KernelKind::none;
        if (want_nonlocal && !has_kernel) {
            std::fprintf(stderr, "solve-nonlocal: config has no [kernel] section\n");
            return kExitUsage;
        }
        if (!want_nonlocal && has_kernel) {
            std::fprintf(stderr,
                         "solve-local: config has a [kernel] section; use solve-nonlocal\n");
            return kExitUsage;
        }
    }
    const dislo::runner::Scenario sc = dislo::runner::build_scenario(cfg);
    const dislo::runner::RunResult res = dislo::runner::run_scenario(sc);
    const auto reports = dislo::runner::verify_scenario(sc, res);
    dislo::runner::write_run(opts.out_dir, sc, res, reports);
    int failed = 0;
    for (const auto& r : reports)
        if (!r.pass) ++failed;
    std::printf("%s: %zu snapshots, %zu checks, %d failed; artifacts in %s\n",
                verify_only ? "verify" : (res.nonlocal ? "solve-nonlocal" : "solve-local"),
                res.traj.times.size(), reports.size(), failed, opts.out_dir.c_str());
    if (verify_only)
        for (const auto& r : reports)
            std::printf("  [%s] %-24s t=%-8.4g lhs=%-12.6g rhs=%-12.6g margin=%.6g\n",
                        r.pass ? "PASS" : "FAIL", r.name.c_str(), r.t, r.lhs, r.rhs, r.margin);
    return failed == 0 ? kExitOk : kExitCheckFailure;
}

int run_constants(const CommonOpts& opts) {
    dislo::util::set_threads(opts.threads);
    dislo::config::ScenarioConfig cfg = dislo::config::parse_config_file(opts.config_path);
    if (opts.cfl > 0.0) cfg.cfl = opts.cfl;
    const dislo::runner::Scenario sc = dislo::runner::build_scenario(cfg);
    const dislo::runner::RunResult res = dislo::runner::run_scenario(sc);
    const dislo::analysis::EstimateConstants& k = res.constants;
    const std::pair<const char*, double> rows[]{
        {"L1", k.L1},     {"L1p", k.L1p},     {"L2", k.L2}, {"L3", k.L3},
        {"eta0", k.eta0}, {"C", k.C},         {"gamma", k.gamma}, {"eta", k.eta},
        {"L4", k.L4},     {"L5", k.L5},       {"cbar", k.cbar},   {"M", k.M}};
    for (const auto& [name, value] : rows) std::printf("%-6s = %.12g\n", name, value);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Level-set front propagation with nonlocal convolution velocity"};
    app.require_subcommand(1);

    CommonOpts solve_opts, nonlocal_opts, verify_opts, constants_opts;
    CLI::App* solve_local = app.add_subcommand("solve-local", "Solve u_t = c(x,t)|Du|");
    add_common(solve_local, solve_opts);
    CLI::App* solve_nonlocal =
        app.add_subcommand("solve-nonlocal", "Solve u_t = c[1_{u>=0}]|Du| by Picard iteration");
    add_common(solve_nonlocal, nonlocal_opts);
    CLI::App* verify =
        app.add_subcommand("verify", "Run a scenario and audit every estimate");
    add_common(verify, verify_opts);
    CLI::App* constants =
        app.add_subcommand("constants", "Print the measured estimate constants");
    add_common(constants, constants_opts);

    std::string law;
    int oracle_dim = 2;
    double oracle_r0 = 1.0, oracle_t = 0.0, oracle_cbar = 1.0;
    int table = 0;
    CLI::App* oracle = app.add_subcommand("oracle", "Closed-form radial front references");
    oracle->add_option("law", law, "constant | volume-driven")->required();
    oracle->add_option("--dim", oracle_dim, "Dimension");
    oracle->add_option("--r0", oracle_r0, "Initial radius");
    oracle->add_option("--t", oracle_t, "Query time")->required();
    oracle->add_option("--cbar", oracle_cbar, "Constant speed");
    oracle->add_option("--table", table, "Print a table with this many rows up to t");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (solve_local->parsed()) return run_solve(solve_opts, false, false);
        if (solve_nonlocal->parsed()) return run_solve(nonlocal_opts, true, false);
        if (verify->parsed()) return run_solve(verify_opts, false, true);
        if (constants->parsed()) return run_constants(constants_opts);
        if (oracle->parsed()) {
            dislo::oracles::RadialScenario sc =
                law == "constant"
                    ? dislo::oracles::RadialScenario::constant(oracle_dim, oracle_r0,
                                                               oracle_cbar)
                : law == "volume-driven"
                    ? dislo::oracles::RadialScenario::volume(oracle_dim, oracle_r0)
                    : throw dislo::InvalidArgument("oracle: unknown law '" + law + "'");
            if (table > 0) {
                for (int i = 0; i <= table; ++i) {
                    const double t = oracle_t * i / table;
                    std::printf("%.10g %.10g\n", t, dislo::oracles::radial_front(sc, t));
                }
            } else {
                std::printf("%.10g\n", dislo::oracles::radial_front(sc, oracle_t));
            }
            return kExitOk;
        }
    } catch (const dislo::config::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitUsage;
    } catch (const dislo::InvalidArgument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const dislo::fixedpoint::FixedPointFailure& e) {
        std::fprintf(stderr, "solver failure: %s\ndistance history:", e.what());
        for (double d : e.state.distances) std::fprintf(stderr, " %.6g", d);
        std::fprintf(stderr, "\n");
        return kExitSolverFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return kExitSolverFailure;
    }
    return kExitUsage;
}
