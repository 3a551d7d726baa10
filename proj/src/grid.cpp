#include "dislo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace dislo {

Grid Grid::make(int dim, Vec3 lo, Vec3 hi, Idx3 n) {
    if (dim < 1 || dim > 3) throw InvalidArgument("Grid: dim must be 1, 2 or 3");
    Grid g;
    g.dim_ = dim;
    for (int d = 0; d < 3; ++d) {
        if (d >= dim) {
            lo[d] = 0.0;
            hi[d] = 1.0;
            n[d] = 1;
        } else {
            if (n[d] < 4) {
                std::ostringstream os;
                os << "Grid: axis " << d << " needs at least 4 cells, got " << n[d];
                throw InvalidArgument(os.str());
            }
            if (!(hi[d] > lo[d])) throw InvalidArgument("Grid: hi must exceed lo on every axis");
        }
        g.lo_[d] = lo[d];
        g.hi_[d] = hi[d];
        g.n_[d] = n[d];
        g.h_[d] = (hi[d] - lo[d]) / static_cast<double>(n[d]);
    }
    g.size_ = static_cast<std::size_t>(n[0]) * n[1] * n[2];
    g.vol_ = 1.0;
    for (int d = 0; d < dim; ++d) g.vol_ *= g.h_[d];
    return g;
}

double Grid::min_h() const {
    double m = h_[0];
    for (int d = 1; d < dim_; ++d) m = std::min(m, h_[d]);
    return m;
}

double Grid::max_h() const {
    double m = h_[0];
    for (int d = 1; d < dim_; ++d) m = std::max(m, h_[d]);
    return m;
}

double Grid::box_measure() const {
    double m = 1.0;
    for (int d = 0; d < dim_; ++d) m *= hi_[d] - lo_[d];
    return m;
}

bool Grid::same_as(const Grid& o, double rel_tol) const {
    if (dim_ != o.dim_ || n_ != o.n_) return false;
    for (int d = 0; d < dim_; ++d) {
        const double scale = std::max({std::abs(lo_[d]), std::abs(hi_[d]), 1.0});
        if (std::abs(lo_[d] - o.lo_[d]) > rel_tol * scale) return false;
        if (std::abs(hi_[d] - o.hi_[d]) > rel_tol * scale) return false;
    }
    return true;
}

ScalarField::ScalarField(Grid grid, std::vector<double> values, std::optional<double> time)
    : grid_(std::move(grid)), values_(std::move(values)), time_(time) {
    if (values_.size() != grid_.size())
        throw InvalidArgument("ScalarField: value count does not match grid size");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            std::ostringstream os;
            const Vec3 x = grid_.node(i);
            os << "ScalarField: non-finite value at node (" << x[0] << ", " << x[1] << ", "
               << x[2] << ")";
            throw NumericalError(os.str());
        }
    }
}

BandSpec BandSpec::make(double a, double b, double epsilon) {
    if (!(a < b)) throw InvalidArgument("BandSpec: requires a < b");
    if (!(epsilon > 0.0)) throw InvalidArgument("BandSpec: requires epsilon > 0");
    if (epsilon > 0.25 * (b - a))
        throw InvalidArgument("BandSpec: requires epsilon <= (b - a)/4");
    return BandSpec{a, b, epsilon};
}

ScalarField sample(const Grid& grid, const std::function<double(const Vec3&)>& f) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec3 x = grid.node(i);
        const double val = f(x);
        if (!std::isfinite(val)) {
            std::ostringstream os;
            os << "sample: non-finite value at node (" << x[0] << ", " << x[1] << ", " << x[2]
               << ")";
            throw NumericalError(os.str());
        }
        v[i] = val;
    }
    return ScalarField(grid, std::move(v));
}

double kahan_sum(std::span<const double> v) {
    double s = 0.0, c = 0.0;
    for (double x : v) {
        const double y = x - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s;
}

double sup_norm(const ScalarField& field) {
    double m = 0.0;
    for (double v : field.values()) m = std::max(m, std::abs(v));
    return m;
}

double l1_norm(const ScalarField& field) {
    double s = 0.0, c = 0.0;
    for (double x : field.values()) {
        const double y = std::abs(x) - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return field.grid().cell_volume() * s;
}

double band_measure(const ScalarField& field, double a, double b) {
    if (a > b) throw InvalidArgument("band_measure: requires a <= b");
    std::size_t count = 0;
    for (double v : field.values())
        if (v >= a && v <= b) ++count;
    return field.grid().cell_volume() * static_cast<double>(count);
}

namespace {

template <typename Op>
double scan_second_differences(const ScalarField& field, long k, Op op, double init) {
    if (k < 1) throw InvalidArgument("second_difference: step must be >= 1");
    const Grid& g = field.grid();
    for (int d = 0; d < g.dim(); ++d)
        if (g.n()[d] < 2 * k + 1)
            throw InvalidArgument("second_difference: grid too small for requested step");
    const auto v = field.values();
    double best = init;
    for (int d = 0; d < g.dim(); ++d) {
        const double denom = (k * g.h()[d]) * (k * g.h()[d]);
        Idx3 stride{static_cast<long>(g.n()[1]) * g.n()[2], g.n()[2], 1};
        Idx3 i{0, 0, 0};
        for (i[0] = 0; i[0] < g.n()[0]; ++i[0])
            for (i[1] = 0; i[1] < g.n()[1]; ++i[1])
                for (i[2] = 0; i[2] < g.n()[2]; ++i[2]) {
                    if (i[d] < k || i[d] >= g.n()[d] - k) continue;
                    const std::size_t f = g.flat(i);
                    const double sd =
                        (v[f + k * stride[d]] - 2.0 * v[f] + v[f - k * stride[d]]) / denom;
                    best = op(best, sd);
                }
    }
    return best;
}

}  // namespace

double second_difference_min(const ScalarField& field, long step) {
    return scan_second_differences(
        field, step, [](double a, double b) { return std::min(a, b); },
        std::numeric_limits<double>::infinity());
}

double second_difference_max(const ScalarField& field, long step) {
    return scan_second_differences(
        field, step, [](double a, double b) { return std::max(a, b); },
        -std::numeric_limits<double>::infinity());
}

double max_difference_quotient(const ScalarField& field) {
    const Grid& g = field.grid();
    const auto v = field.values();
    Idx3 stride{static_cast<long>(g.n()[1]) * g.n()[2], g.n()[2], 1};
    double m = 0.0;
    for (int d = 0; d < g.dim(); ++d) {
        Idx3 i{0, 0, 0};
        for (i[0] = 0; i[0] < g.n()[0]; ++i[0])
            for (i[1] = 0; i[1] < g.n()[1]; ++i[1])
                for (i[2] = 0; i[2] < g.n()[2]; ++i[2]) {
                    if (i[d] >= g.n()[d] - 1) continue;
                    const std::size_t f = g.flat(i);
                    m = std::max(m, std::abs(v[f + stride[d]] - v[f]) / g.h()[d]);
                }
    }
    return m;
}

namespace {

ScalarField zip(const ScalarField& a, const ScalarField& b, double sb) {
    if (!a.grid().same_as(b.grid()))
        throw InvalidArgument("field arithmetic: grids do not match");
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] + sb * b[i];
    return ScalarField(a.grid(), std::move(v));
}

}  // namespace

ScalarField field_add(const ScalarField& a, const ScalarField& b) { return zip(a, b, 1.0); }
ScalarField field_sub(const ScalarField& a, const ScalarField& b) { return zip(a, b, -1.0); }

ScalarField field_scale(const ScalarField& a, double s) {
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = s * a[i];
    return ScalarField(a.grid(), std::move(v));
}

ScalarField field_add_scalar(const ScalarField& a, double s) {
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a[i] + s;
    return ScalarField(a.grid(), std::move(v));
}

double unit_ball_measure(int dim) {
    switch (dim) {
        case 1: return 2.0;
        case 2: return std::numbers::pi;
        case 3: return 4.0 * std::numbers::pi / 3.0;
        default: throw InvalidArgument("unit_ball_measure: dim must be 1, 2 or 3");
    }
}

double ball_measure(int dim, double r) {
    return unit_ball_measure(dim) * std::pow(r, dim);
}

}  // namespace dislo
