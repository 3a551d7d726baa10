#include "dislo/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

namespace dislo::oracles {

RadialScenario RadialScenario::constant(int dim, double R0, double cbar) {
    if (R0 <= 0.0) throw InvalidArgument("RadialScenario: R0 must be positive");
    if (cbar < 0.0) throw InvalidArgument("RadialScenario: cbar must be nonnegative");
    return RadialScenario{R0, dim, RadialLaw::constant_speed, cbar, {}};
}

RadialScenario RadialScenario::time_dependent(int dim, double R0,
                                              std::function<double(double)> c) {
    if (R0 <= 0.0) throw InvalidArgument("RadialScenario: R0 must be positive");
    return RadialScenario{R0, dim, RadialLaw::time_speed, 0.0, std::move(c)};
}

RadialScenario RadialScenario::volume(int dim, double R0) {
    if (R0 <= 0.0) throw InvalidArgument("RadialScenario: R0 must be positive");
    return RadialScenario{R0, dim, RadialLaw::volume_driven, 0.0, {}};
}

double RadialScenario::blow_up_time() const {
    if (law != RadialLaw::volume_driven || dim < 2)
        return std::numeric_limits<double>::infinity();
    const double cn = unit_ball_measure(dim);
    return 1.0 / ((dim - 1) * cn * std::pow(R0, dim - 1));
}

namespace {

struct SearchBox {
    Vec3 center;
    double half;   // per-axis half width
    double value;  // u0 value at projected center
};

// Projection of y onto the closed ball B(x, r); 1-Lipschitz, so composing
// with u0 keeps the Lipschitz bound and the constrained maximum.
Vec3 project_to_ball(const Vec3& y, const Vec3& x, double r, int dim) {
    double d2 = 0.0;
    for (int k = 0; k < dim; ++k) d2 += (y[k] - x[k]) * (y[k] - x[k]);
    const double d = std::sqrt(d2);
    if (d <= r) return y;
    Vec3 p = x;
    const double s = r / d;
    for (int k = 0; k < dim; ++k) p[k] = x[k] + s * (y[k] - x[k]);
    return p;
}

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    if (b <= a) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double oleinik_lax(const std::function<double(const Vec3&)>& u0, double cbar, const Vec3& x,
                   double t, int dim, double lip) {
    if (cbar < 0.0 || t < 0.0) throw InvalidArgument("oleinik_lax: requires cbar >= 0, t >= 0");
    const double r = cbar * t;
    if (r == 0.0) return u0(x);
    lip = std::max(lip, 1e-12);

    const auto eval = [&](const Vec3& y) { return u0(project_to_ball(y, x, r, dim)); };
    const double tol = 1e-7;
    const double diag = std::sqrt(static_cast<double>(dim));

    // Branch and bound on the upper bound f(center) + lip * half * sqrt(dim).
    // Kink-type maxima (cones) certify quickly; smooth maxima have flat tops
    // the Lipschitz bound cannot certify cheaply, so the search is budgeted
    // and a compass polish recovers the remaining accuracy.
    auto cmp = [](const SearchBox& a, const SearchBox& b) { return a.value < b.value; };
    std::priority_queue<SearchBox, std::vector<SearchBox>, decltype(cmp)> boxes(cmp);
    boxes.push(SearchBox{x, r, eval(x)});
    double best = eval(x);
    Vec3 best_at = x;

    long budget = 200000;
    while (!boxes.empty() && budget-- > 0) {
        const SearchBox box = boxes.top();
        boxes.pop();
        if (box.value + lip * box.half * diag <= best + tol) break;
        const double hw = 0.5 * box.half;
        const long parts = 1L << dim;
        for (long m = 0; m < parts; ++m) {
            Vec3 c = box.center;
            for (int k = 0; k < dim; ++k) c[k] += ((m >> k) & 1L) ? hw : -hw;
            const double v = eval(c);
            if (v > best) {
                best = v;
                best_at = c;
            }
            if (v + lip * hw * diag > best + tol) boxes.push(SearchBox{c, hw, v});
        }
    }

    for (double step = 0.25 * r; step > 1e-10 * std::max(r, 1.0); step *= 0.5) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (int k = 0; k < dim; ++k)
                for (double s : {-step, step}) {
                    Vec3 c = best_at;
                    c[k] += s;
                    const double v = eval(c);
                    if (v > best) {
                        best = v;
                        best_at = c;
                        improved = true;
                    }
                }
        }
    }
    return best;
}

double radial_front(const RadialScenario& sc, double t) {
    if (t < 0.0) throw InvalidArgument("radial_front: requires t >= 0");
    switch (sc.law) {
        case RadialLaw::constant_speed:
            return sc.R0 + sc.cbar * t;
        case RadialLaw::time_speed:
            return sc.R0 + integrate(sc.speed_of_t, 0.0, t, 1e-10);
        case RadialLaw::volume_driven: {
            const double cn = unit_ball_measure(sc.dim);
            if (sc.dim == 1) return sc.R0 * std::exp(cn * t);
            const double tstar = sc.blow_up_time();
            if (t > 0.95 * tstar) {
                std::ostringstream os;
                os << "radial_front: t = " << t << " beyond the validity window 0.95 t* = "
                   << 0.95 * tstar << "; there is a blow-up at t* = " << tstar;
                throw InvalidArgument(os.str());
            }
            return sc.R0 / std::pow(1.0 - t / tstar, 1.0 / (sc.dim - 1));
        }
    }
    throw InvalidArgument("radial_front: unknown law");
}

double annulus_measure(double r_in, double r_out, int dim) {
    if (r_in < 0.0 || r_out < r_in)
        throw InvalidArgument("annulus_measure: requires 0 <= r_in <= r_out");
    return unit_ball_measure(dim) * (std::pow(r_out, dim) - std::pow(r_in, dim));
}

}  // namespace dislo::oracles
