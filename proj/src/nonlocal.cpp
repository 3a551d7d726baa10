#include "dislo/nonlocal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <sstream>

#include "dislo/fft.hpp"

namespace dislo::nonlocal {

ScalarField Kernel::at(double t) const {
    if (time_constant && cache_) return *cache_;
    if (!provider) throw InvalidArgument("Kernel: no provider");
    ScalarField snap = provider(t);
    const double l1 = l1_norm(snap);
    if (l1 > l1_bound * (1.0 + 1e-9) + 1e-12) {
        std::ostringstream os;
        os << "Kernel: |c0(.,t)|_L1 = " << l1 << " exceeds the declared bound " << l1_bound;
        throw NumericalError(os.str());
    }
    if (time_constant) {
        cache_ = std::make_shared<const ScalarField>(snap);
        return *cache_;
    }
    return snap;
}

Kernel Kernel::constant_in_time(ScalarField c0) {
    Kernel k;
    k.l1_bound = l1_norm(c0);
    k.time_constant = true;
    auto shared = std::make_shared<const ScalarField>(std::move(c0));
    k.provider = [shared](double) { return *shared; };
    return k;
}

std::size_t IndicatorDensity::left_index(double t) const {
    if (times.empty()) throw InvalidArgument("IndicatorDensity: empty");
    std::size_t i = 0;
    while (i + 1 < times.size() && times[i + 1] <= t + 1e-12) ++i;
    return i;
}

void IndicatorDensity::validate() const {
    if (times.size() != densities.size() || times.size() != support_radius.size())
        throw InvalidArgument("IndicatorDensity: inconsistent sample counts");
    for (std::size_t s = 0; s < times.size(); ++s) {
        const ScalarField& rho = densities[s];
        const double R = support_radius[s];
        for (std::size_t f = 0; f < rho.size(); ++f) {
            if (rho[f] < -1e-12 || rho[f] > 1.0 + 1e-12)
                throw NumericalError("IndicatorDensity: value outside [0, 1]");
            if (rho[f] != 0.0 && std::isfinite(R)) {
                const Vec3 x = rho.grid().node(f);
                double r2 = 0.0;
                for (int d = 0; d < rho.grid().dim(); ++d) r2 += x[d] * x[d];
                if (std::sqrt(r2) > R + 1e-12)
                    throw NumericalError("IndicatorDensity: mass outside the support radius");
            }
        }
    }
}

namespace {

struct ConvPlan {
    Idx3 kn{1, 1, 1};     // kernel extents
    Idx3 off{0, 0, 0};    // index shift: rho index = out index + kernel index + off
    Idx3 n{1, 1, 1};      // field extents
};

ConvPlan plan_convolution(const ScalarField& c0, const ScalarField& rho) {
    const Grid& kg = c0.grid();
    const Grid& fg = rho.grid();
    if (kg.dim() != fg.dim()) throw InvalidArgument("convolve: dimension mismatch");
    ConvPlan p;
    p.kn = kg.n();
    p.n = fg.n();
    for (int d = 0; d < fg.dim(); ++d) {
        const double h = fg.h()[d];
        if (std::abs(kg.h()[d] - h) > 1e-9 * h)
            throw InvalidArgument("convolve: kernel and field spacings differ");
        const double off_real = kg.lo()[d] / h + 0.5;
        const double off_round = std::round(off_real);
        if (std::abs(off_real - off_round) > 1e-6)
            throw InvalidArgument("convolve: kernel grid is not node-aligned with the field");
        p.off[d] = static_cast<long>(off_round);
    }
    return p;
}

void require_compact_support(const ScalarField& rho) {
    const Grid& g = rho.grid();
    Idx3 i{0, 0, 0};
    for (i[0] = 0; i[0] < g.n()[0]; ++i[0])
        for (i[1] = 0; i[1] < g.n()[1]; ++i[1])
            for (i[2] = 0; i[2] < g.n()[2]; ++i[2]) {
                bool edge = false;
                for (int d = 0; d < g.dim(); ++d)
                    edge = edge || i[d] == 0 || i[d] == g.n()[d] - 1;
                if (edge && rho[g.flat(i)] != 0.0)
                    throw InvalidArgument(
                        "convolve: field support overflows the evaluation box "
                        "(nonzero value on the outermost cell layer)");
            }
}

ScalarField convolve_direct(const ScalarField& c0, const ScalarField& rho, const ConvPlan& p) {
    const Grid& fg = rho.grid();
    const Grid& kg = c0.grid();
    const double vol = fg.cell_volume();
    std::vector<double> out(rho.size(), 0.0);

    // Nonzero kernel entries with their index shifts.
    struct Tap {
        Idx3 s;
        double w;
    };
    std::vector<Tap> taps;
    Idx3 m{0, 0, 0};
    for (m[0] = 0; m[0] < p.kn[0]; ++m[0])
        for (m[1] = 0; m[1] < p.kn[1]; ++m[1])
            for (m[2] = 0; m[2] < p.kn[2]; ++m[2]) {
                const double w = c0[kg.flat(m)];
                if (w != 0.0)
                    taps.push_back(
                        Tap{{m[0] + p.off[0], m[1] + p.off[1], m[2] + p.off[2]}, w});
            }

    Idx3 j{0, 0, 0};
    for (j[0] = 0; j[0] < p.n[0]; ++j[0])
        for (j[1] = 0; j[1] < p.n[1]; ++j[1])
            for (j[2] = 0; j[2] < p.n[2]; ++j[2]) {
                double s = 0.0, comp = 0.0;
                for (const Tap& tap : taps) {
                    const Idx3 a{j[0] + tap.s[0], j[1] + tap.s[1], j[2] + tap.s[2]};
                    if (a[0] < 0 || a[0] >= p.n[0] || a[1] < 0 || a[1] >= p.n[1] || a[2] < 0 ||
                        a[2] >= p.n[2])
                        continue;
                    const double term = tap.w * rho[fg.flat(a)];
                    const double y = term - comp;
                    const double t = s + y;
                    comp = (t - s) - y;
                    s = t;
                }
                out[fg.flat(j)] = vol * s;
            }
    return ScalarField(fg, std::move(out));
}

// Constant-on-a-full-rectangle kernels (the volume-driven scenario) reduce to
// a box sum, evaluated with summed-area tables in O(n).
struct BoxKernel {
    double value;
    Idx3 mlo, mhi;  // inclusive nonzero index range
};

std::optional<BoxKernel> detect_box_kernel(const ScalarField& c0) {
    const Grid& kg = c0.grid();
    BoxKernel bk{0.0, {0, 0, 0}, {-1, -1, -1}};
    bool have = false;
    Idx3 m{0, 0, 0};
    for (m[0] = 0; m[0] < kg.n()[0]; ++m[0])
        for (m[1] = 0; m[1] < kg.n()[1]; ++m[1])
            for (m[2] = 0; m[2] < kg.n()[2]; ++m[2]) {
                const double w = c0[kg.flat(m)];
                if (w == 0.0) continue;
                if (!have) {
                    bk.value = w;
                    bk.mlo = bk.mhi = m;
                    have = true;
                } else {
                    if (w != bk.value) return std::nullopt;
                    for (int d = 0; d < 3; ++d) {
                        bk.mlo[d] = std::min(bk.mlo[d], m[d]);
                        bk.mhi[d] = std::max(bk.mhi[d], m[d]);
                    }
                }
            }
    if (!have) return std::nullopt;
    // All cells of the bounding rectangle must carry the value.
    std::size_t rect = 1;
    for (int d = 0; d < 3; ++d) rect *= static_cast<std::size_t>(bk.mhi[d] - bk.mlo[d] + 1);
    std::size_t nonzero = 0;
    for (std::size_t f = 0; f < c0.size(); ++f)
        if (c0[f] != 0.0) ++nonzero;
    if (nonzero != rect) return std::nullopt;
    return bk;
}

ScalarField convolve_boxsum(const ScalarField& rho, const ConvPlan& p,
                            const BoxKernel& bk) {
    const Grid& fg = rho.grid();
    const Idx3& n = p.n;
    // Summed-area table S(i) = sum over rho[0..i-1] (exclusive prefix).
    const long N0 = n[0] + 1, N1 = n[1] + 1, N2 = n[2] + 1;
    std::vector<double> S(static_cast<std::size_t>(N0) * N1 * N2, 0.0);
    auto sat = [&](long a, long b, long c) -> double& {
        return S[(static_cast<std::size_t>(a) * N1 + b) * N2 + c];
    };
    for (long a = 1; a < N0; ++a)
        for (long b = 1; b < N1; ++b)
            for (long c = 1; c < N2; ++c)
                sat(a, b, c) = rho[fg.flat({a - 1, b - 1, c - 1})] + sat(a - 1, b, c) +
                               sat(a, b - 1, c) - sat(a - 1, b - 1, c) + sat(a, b, c - 1) -
                               sat(a - 1, b, c - 1) - sat(a, b - 1, c - 1) +
                               sat(a - 1, b - 1, c - 1);

    auto rect_sum = [&](const Idx3& lo, const Idx3& hi) -> double {
        Idx3 l, u;
        for (int d = 0; d < 3; ++d) {
            l[d] = std::clamp(lo[d], 0L, n[d]);
            u[d] = std::clamp(hi[d] + 1, 0L, n[d]);
            if (u[d] <= l[d]) return 0.0;
        }
        return sat(u[0], u[1], u[2]) - sat(l[0], u[1], u[2]) - sat(u[0], l[1], u[2]) +
               sat(l[0], l[1], u[2]) - sat(u[0], u[1], l[2]) + sat(l[0], u[1], l[2]) +
               sat(u[0], l[1], l[2]) - sat(l[0], l[1], l[2]);
    };

    const double scale = fg.cell_volume() * bk.value;
    std::vector<double> out(rho.size());
    Idx3 j{0, 0, 0};
    for (j[0] = 0; j[0] < n[0]; ++j[0])
        for (j[1] = 0; j[1] < n[1]; ++j[1])
            for (j[2] = 0; j[2] < n[2]; ++j[2]) {
                Idx3 lo, hi;
                for (int d = 0; d < 3; ++d) {
                    lo[d] = j[d] + bk.mlo[d] + p.off[d];
                    hi[d] = j[d] + bk.mhi[d] + p.off[d];
                }
                out[fg.flat(j)] = scale * rect_sum(lo, hi);
            }
    return ScalarField(fg, std::move(out));
}

ScalarField convolve_fft(const ScalarField& c0, const ScalarField& rho, const ConvPlan& p) {
    const Grid& fg = rho.grid();
    const Grid& kg = c0.grid();
    std::array<std::size_t, 3> L{1, 1, 1};
    for (int d = 0; d < fg.dim(); ++d) {
        if (p.kn[d] - 1 + p.off[d] < 0)
            throw InvalidArgument("convolve: kernel box does not reach the evaluation box");
        L[d] = fft::next_pow2(static_cast<std::size_t>(p.n[d] + p.kn[d] - 1 +
                                                       std::max(0L, p.off[d])));
    }
    const std::size_t total = L[0] * L[1] * L[2];
    std::vector<std::complex<double>> A(total, 0.0), B(total, 0.0);
    auto flat_pad = [&](long a, long b, long c) {
        return (static_cast<std::size_t>(a) * L[1] + b) * L[2] + c;
    };

    Idx3 i{0, 0, 0};
    for (i[0] = 0; i[0] < p.n[0]; ++i[0])
        for (i[1] = 0; i[1] < p.n[1]; ++i[1])
            for (i[2] = 0; i[2] < p.n[2]; ++i[2])
                A[flat_pad(i[0], i[1], i[2])] = rho[fg.flat(i)];
    // Kernel reversed along each axis so that the linear convolution realizes
    // the y - x (correlation) orientation.
    Idx3 m{0, 0, 0};
    for (m[0] = 0; m[0] < p.kn[0]; ++m[0])
        for (m[1] = 0; m[1] < p.kn[1]; ++m[1])
            for (m[2] = 0; m[2] < p.kn[2]; ++m[2])
                B[flat_pad(p.kn[0] - 1 - m[0], p.kn[1] - 1 - m[1], p.kn[2] - 1 - m[2])] =
                    c0[kg.flat(m)];

    fft::transform_nd(A, L, false);
    fft::transform_nd(B, L, false);
    for (std::size_t f = 0; f < total; ++f) A[f] *= B[f];
    fft::transform_nd(A, L, true);

    const double vol = fg.cell_volume();
    std::vector<double> out(rho.size());
    Idx3 j{0, 0, 0};
    for (j[0] = 0; j[0] < p.n[0]; ++j[0])
        for (j[1] = 0; j[1] < p.n[1]; ++j[1])
            for (j[2] = 0; j[2] < p.n[2]; ++j[2]) {
                Idx3 t{};
                bool inside = true;
                for (int d = 0; d < 3; ++d) {
                    t[d] = j[d] + p.kn[d] - 1 + p.off[d];
                    inside = inside && t[d] >= 0 && t[d] < static_cast<long>(L[d]);
                }
                const double v =
                    inside ? A[flat_pad(t[0], t[1], t[2])].real() : 0.0;
                out[fg.flat(j)] = vol * v;
            }
    return ScalarField(fg, std::move(out));
}

}  // namespace

ScalarField convolve(const ScalarField& c0, const ScalarField& rho, ConvolvePath path) {
    const ConvPlan p = plan_convolution(c0, rho);
    require_compact_support(rho);
    if (path == ConvolvePath::direct) return convolve_direct(c0, rho, p);
    if (path == ConvolvePath::automatic || path == ConvolvePath::transform) {
        if (const auto bk = detect_box_kernel(c0)) return convolve_boxsum(rho, p, *bk);
        return convolve_fft(c0, rho, p);
    }
    return convolve_direct(c0, rho, p);
}

ScalarField assemble_velocity(const Kernel& kernel, const hj::VelocityFn& c1,
                              const IndicatorDensity& rho, double t, bool enforce_h2,
                              double tol_sign) {
    const ScalarField conv = convolve(kernel.at(t), rho.left_sample(t));
    const ScalarField c = field_add(conv, c1(t));
    if (enforce_h2) {
        double worst = 0.0;
        std::size_t worst_f = 0;
        for (std::size_t f = 0; f < c.size(); ++f)
            if (c[f] < worst) {
                worst = c[f];
                worst_f = f;
            }
        if (worst < -tol_sign) {
            const Vec3 x = c.grid().node(worst_f);
            std::ostringstream os;
            os << "assemble_velocity: (H5) declared but c[rho] = " << worst << " at ("
               << x[0] << ", " << x[1] << ", " << x[2] << ")";
            throw NumericalError(os.str());
        }
    }
    return c.with_time(t);
}

std::vector<H5Row> check_h5(const Kernel& kernel, const hj::VelocityFn& c1,
                            std::span<const double> times, double tol_sign) {
    std::vector<H5Row> rows;
    rows.reserve(times.size());
    for (double t : times) {
        const double c0_l1 = l1_norm(kernel.at(t));
        const ScalarField c1t = c1(t);
        double cmin = std::numeric_limits<double>::infinity();
        for (double v : c1t.values()) cmin = std::min(cmin, v);
        const double margin = cmin - c0_l1;
        rows.push_back(H5Row{t, c0_l1, margin, margin >= -tol_sign});
    }
    return rows;
}

}  // namespace dislo::nonlocal
