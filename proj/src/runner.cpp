#include "dislo/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>
#include <sstream>

#include "dislo/field_io.hpp"
#include "dislo/oracles.hpp"

namespace dislo::runner {

namespace {

double radial(const Vec3& x, int dim) {
    double r2 = 0.0;
    for (int d = 0; d < dim; ++d) r2 += x[d] * x[d];
    return std::sqrt(r2);
}

/// Kernel grids carry a half-cell offset so their nodes land on integer
/// multiples of the field spacing (the alignment convolve() requires).
Grid kernel_grid(const Vec3& h, int dim, double reach, long pad_cells) {
    Idx3 n{1, 1, 1};
    Vec3 lo{}, hi{};
    for (int d = 0; d < dim; ++d) {
        const long r_cells = static_cast<long>(std::ceil(reach / h[d])) + pad_cells;
        n[d] = 2 * r_cells + 1;
        lo[d] = -(static_cast<double>(r_cells) + 0.5) * h[d];
        hi[d] = -lo[d];
    }
    return Grid::make(dim, lo, hi, n);
}

}  // namespace

ScalarField build_kernel_field(const config::ScenarioConfig& cfg, const Vec3& h, int dim) {
    using config::KernelKind;
    switch (cfg.kernel) {
        case KernelKind::gaussian: {
            const double reach = 4.0 * cfg.sigma;
            const Grid kg = kernel_grid(h, dim, reach, 1);
            ScalarField raw = sample(kg, [&](const Vec3& x) {
                const double r = radial(x, dim);
                if (r > reach) return 0.0;
                return cfg.amplitude * std::exp(-r * r / (2.0 * cfg.sigma * cfg.sigma));
            });
            if (cfg.kernel_l1 > 0.0) return field_scale(raw, cfg.kernel_l1 / l1_norm(raw));
            return raw;
        }
        case KernelKind::bump: {
            const Grid kg = kernel_grid(h, dim, cfg.radius, 1);
            ScalarField raw = sample(kg, [&](const Vec3& x) {
                return radial(x, dim) <= cfg.radius ? cfg.amplitude : 0.0;
            });
            if (cfg.kernel_l1 > 0.0) return field_scale(raw, cfg.kernel_l1 / l1_norm(raw));
            return raw;
        }
        case KernelKind::constant: {
            const Grid kg = kernel_grid(h, dim, cfg.box_radius, 0);
            return sample(kg, [&](const Vec3&) { return cfg.value; });
        }
        case KernelKind::delta: {
            const Grid kg = kernel_grid(h, dim, 2.0 * *std::max_element(h.begin(), h.end()), 0);
            std::vector<double> v(kg.size(), 0.0);
            Idx3 center{};
            for (int d = 0; d < 3; ++d) center[d] = kg.n()[d] / 2;
            v[kg.flat(center)] = 1.0 / kg.cell_volume();
            return ScalarField(kg, std::move(v));
        }
        case KernelKind::file:
            return io::read_field(cfg.kernel_path);
        case KernelKind::none:
            break;
    }
    throw InvalidArgument("build_kernel_field: no kernel configured");
}

Scenario build_scenario(const config::ScenarioConfig& cfg) {
    const Grid grid = Grid::make(cfg.dim, cfg.lo, cfg.hi, cfg.n);

    ScalarField u0 = [&]() -> ScalarField {
        switch (cfg.initial) {
            case config::InitialKind::cone:
                return sample(grid, [&](const Vec3& x) {
                    return 1.0 - radial(x, cfg.dim) / cfg.r0;
                });
            case config::InitialKind::ball_sdf:
                return sample(grid,
                              [&](const Vec3& x) { return cfg.r0 - radial(x, cfg.dim); });
            case config::InitialKind::union_of_balls:
                return analysis::interior_ball_construct(cfg.centers, cfg.ball_r, grid);
            case config::InitialKind::file: {
                ScalarField f = io::read_field(cfg.initial_path);
                if (!f.grid().same_as(grid))
                    throw config::ConfigError("initial.path: field grid differs from [grid]");
                return f;
            }
        }
        throw config::ConfigError("unknown initial kind");
    }();

    double R0 = cfg.r0;
    if (cfg.initial == config::InitialKind::union_of_balls) {
        R0 = 0.0;
        for (const Vec3& c : cfg.centers) R0 = std::max(R0, radial(c, cfg.dim) + cfg.ball_r);
    }

    hj::VelocityFn c1;
    if (cfg.c1 == config::FieldKind::constant) {
        const double value = cfg.c1_value;
        c1 = [grid, value](double t) {
            std::vector<double> v(grid.size(), value);
            return ScalarField(grid, std::move(v), t);
        };
    } else {
        auto f = std::make_shared<ScalarField>(io::read_field(cfg.c1_path));
        if (!f->grid().same_as(grid))
            throw config::ConfigError("c1.path: field grid differs from [grid]");
        c1 = [f](double t) { return f->with_time(t); };
    }

    std::optional<nonlocal::Kernel> kernel;
    if (cfg.kernel != config::KernelKind::none)
        kernel = nonlocal::Kernel::constant_in_time(build_kernel_field(cfg, grid.h(), cfg.dim));

    return Scenario{cfg, grid, std::move(u0), std::move(kernel), std::move(c1), R0};
}

double front_radius_radial(const ScalarField& u) {
    const Grid& g = u.grid();
    const double bin_w = 0.5 * g.min_h();
    std::vector<double> sum, cnt;
    for (std::size_t f = 0; f < u.size(); ++f) {
        const double r = radial(g.node(f), g.dim());
        const std::size_t bin = static_cast<std::size_t>(r / bin_w);
        if (bin >= sum.size()) {
            sum.resize(bin + 1, 0.0);
            cnt.resize(bin + 1, 0.0);
        }
        sum[bin] += u[f];
        cnt[bin] += 1.0;
    }
    double prev_r = -1.0, prev_v = 0.0;
    bool have_prev = false;
    for (std::size_t b = 0; b < sum.size(); ++b) {
        if (cnt[b] == 0.0) continue;
        const double r = (b + 0.5) * bin_w;
        const double v = sum[b] / cnt[b];
        if (have_prev && prev_v >= 0.0 && v < 0.0)
            return prev_r + (r - prev_r) * prev_v / (prev_v - v);
        prev_r = r;
        prev_v = v;
        have_prev = true;
    }
    return prev_v >= 0.0 && have_prev ? prev_r : 0.0;
}

RunResult run_scenario(const Scenario& sc) {
    RunResult res;
    const config::ScenarioConfig& cfg = sc.cfg;
    if (sc.kernel) {
        fixedpoint::DislocationProblem problem = fixedpoint::DislocationProblem::make(
            *sc.kernel, sc.c1, sc.u0, cfg.T, sc.R0, cfg.allow_h5_violation, cfg.eta_override);
        problem.sign_mode = cfg.sign_mode;
        fixedpoint::SlabOptions opt;
        opt.cfl = cfg.cfl;
        opt.sample_scale = cfg.sample_scale;
        fixedpoint::NonlocalSolution sol =
            fixedpoint::solve_nonlocal(problem, cfg.output_times, cfg.tol_fp, cfg.max_iter, opt);
        res.traj = std::move(sol.traj);
        res.rho = std::move(sol.rho);
        res.slabs = std::move(sol.slabs);
        res.constants = sol.constants;
        res.nonlocal = true;
    } else {
        hj::LocalProblem problem{sc.u0, sc.c1, cfg.T, cfg.sign_mode};
        res.traj = hj::solve_local(problem, cfg.output_times, cfg.cfl);
        std::vector<ScalarField> c_snaps;
        for (double t : res.traj.times) c_snaps.push_back(sc.c1(t));
        res.constants = analysis::estimate_constants(c_snaps, sc.u0, 4);
        analysis::derive_constants(res.constants, sc.u0, &res.traj, cfg.T, sc.R0, 0.0,
                                   cfg.eta_override);
    }
    for (std::size_t i = 0; i < res.traj.times.size(); ++i)
        res.front_radius.emplace_back(res.traj.times[i],
                                      front_radius_radial(res.traj.snapshots[i]));
    return res;
}

std::vector<analysis::EstimateReport> verify_scenario(const Scenario& sc,
                                                      const RunResult& res) {
    const config::ScenarioConfig& cfg = sc.cfg;
    const analysis::EstimateConstants& k = res.constants;
    std::vector<analysis::EstimateReport> all;
    auto take = [&all](std::vector<analysis::EstimateReport> rows) {
        for (auto& r : rows) all.push_back(std::move(r));
    };

    const double speed = cfg.speed_bound > 0.0 ? cfg.speed_bound
                         : res.nonlocal        ? k.cbar
                                               : k.L1p;
    take(analysis::check_front_containment(res.traj, sc.R0, speed));
    take(analysis::check_lower_gradient_bound(res.traj, k.eta, k.gamma));

    if (cfg.band_a && cfg.band_b && cfg.band_eps) {
        const BandSpec band = BandSpec::make(*cfg.band_a, *cfg.band_b, *cfg.band_eps);
        const double eta_gate = cfg.eta_check > 0.0 ? cfg.eta_check : k.eta;
        take(analysis::gronwall_band_check(res.traj, band, k.L4, eta_gate));
        for (const ScalarField& snap : res.traj.snapshots)
            all.push_back(analysis::initial_band_bound(
                snap, std::max(*cfg.band_a, -0.49 * k.eta),
                std::min(*cfg.band_b, 0.49 * k.eta), k, sc.R0));
    }
    if (cfg.per_band_a && cfg.per_band_b)
        take(analysis::perimeter_band_bound(sc.u0, res.traj, *cfg.per_band_a, *cfg.per_band_b,
                                            k));

    if (res.rho) {
        double per_max = 0.0;
        for (const ScalarField& rho : res.rho->densities)
            per_max = std::max(per_max, analysis::perimeter(rho));
        take(analysis::l1_continuity_check(*res.rho, k.cbar, per_max));
        if (sc.kernel && !cfg.allow_h5_violation) {
            const double h5_times[]{0.0, cfg.T};
            for (const auto& row : nonlocal::check_h5(*sc.kernel, sc.c1, h5_times))
                all.push_back(analysis::EstimateReport::of("h5_margin", row.t, row.c0_l1,
                                                           row.c0_l1 + row.margin, 1e-12));
        }
    }
    return all;
}

std::string manifest_text(const Scenario& sc, const RunResult& res, bool with_timestamp) {
    std::ostringstream os;
    os << "dislo-run v1\n";
    char hex[32];
    std::snprintf(hex, sizeof hex, "0x%016llx",
                  static_cast<unsigned long long>(sc.cfg.hash));
    os << "config_hash = " << hex << "\n";
    if (with_timestamp) {
        const std::time_t now = std::time(nullptr);
        char buf[64];
        std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&now));
        os << "timestamp = " << buf << "\n";
    }
    os << "mode = " << (res.nonlocal ? "nonlocal" : "local") << "\n";
    os << "grid = dim=" << sc.grid.dim();
    os << " n=";
    for (int d = 0; d < sc.grid.dim(); ++d) os << (d ? "," : "") << sc.grid.n()[d];
    os << "\n";
    os << "[constants]\n";
    const analysis::EstimateConstants& k = res.constants;
    const std::pair<const char*, double> rows[]{
        {"L1", k.L1},   {"L1p", k.L1p}, {"L2", k.L2},     {"L3", k.L3}, {"eta0", k.eta0},
        {"C", k.C},     {"gamma", k.gamma}, {"eta", k.eta}, {"L4", k.L4}, {"L5", k.L5},
        {"cbar", k.cbar}, {"M", k.M}};
    for (const auto& [name, value] : rows) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.12g", value);
        os << name << " = " << buf << "\n";
    }
    for (const fixedpoint::PicardState& s : res.slabs) {
        os << "[slab " << s.slab_index << "]\n";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.12g", s.tau);
        os << "tau = " << buf << "\n";
        os << "iterations = " << s.iterations << "\n";
        os << "tau_floored = " << (s.tau_floored ? 1 : 0) << "\n";
        std::snprintf(buf, sizeof buf, "%.12g", s.lip_start);
        os << "lip_start = " << buf << "\n";
        std::snprintf(buf, sizeof buf, "%.6g", s.contraction_ratio_max);
        os << "contraction_ratio_max = " << buf << "\n";
        os << "distances =";
        for (double d : s.distances) {
            std::snprintf(buf, sizeof buf, " %.12g", d);
            os << buf;
        }
        os << "\n";
    }
    os << "[front_radius]\n";
    for (const auto& [t, r] : res.front_radius) {
        char buf[80];
        std::snprintf(buf, sizeof buf, "%.12g %.12g", t, r);
        os << buf << "\n";
    }
    return os.str();
}

void write_run(const std::filesystem::path& dir, const Scenario& sc, const RunResult& res,
               std::span<const analysis::EstimateReport> reports) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "manifest.txt");
        out << manifest_text(sc, res);
    }
    io::write_trajectory(dir, res.traj, "u");
    if (res.rho) io::write_indicator_density(dir, *res.rho, "rho");
    io::write_report(dir / "verification.csv", reports);
    {
        std::ofstream out(dir / "front_radius.txt");
        char buf[80];
        for (const auto& [t, r] : res.front_radius) {
            std::snprintf(buf, sizeof buf, "%.12g %.12g", t, r);
            out << buf << "\n";
        }
    }
}

}  // namespace dislo::runner
