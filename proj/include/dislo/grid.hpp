#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dislo {

using Vec3 = std::array<double, 3>;
using Idx3 = std::array<long, 3>;

/// Thrown on precondition violations (bad arguments, incompatible grids, ...).
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical operation produced or met an inadmissible state.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Uniform cell-centered Cartesian grid in dimension 1, 2 or 3.
///
/// Nodes sit at cell centers: x_d(i) = lo_d + (i + 1/2) h_d. Unused axes are
/// collapsed to a single cell with spacing 1 so that cell_volume() is the
/// N-dimensional cell measure. Storage is row-major with the last used axis
/// fastest.
class Grid {
public:
    static Grid make(int dim, Vec3 lo, Vec3 hi, Idx3 n);

    int dim() const { return dim_; }
    const Vec3& lo() const { return lo_; }
    const Vec3& hi() const { return hi_; }
    const Idx3& n() const { return n_; }
    const Vec3& h() const { return h_; }

    std::size_t size() const { return size_; }
    double cell_volume() const { return vol_; }
    double min_h() const;
    double max_h() const;
    /// Total measure of the box, Prod_d (hi_d - lo_d).
    double box_measure() const;

    std::size_t flat(const Idx3& i) const {
        return (static_cast<std::size_t>(i[0]) * n_[1] + i[1]) * n_[2] + i[2];
    }
    Idx3 unflat(std::size_t f) const {
        Idx3 i;
        i[2] = static_cast<long>(f % n_[2]);
        f /= n_[2];
        i[1] = static_cast<long>(f % n_[1]);
        i[0] = static_cast<long>(f / n_[1]);
        return i;
    }
    Vec3 node(const Idx3& i) const {
        return {lo_[0] + (i[0] + 0.5) * h_[0], lo_[1] + (i[1] + 0.5) * h_[1],
                lo_[2] + (i[2] + 0.5) * h_[2]};
    }
    Vec3 node(std::size_t f) const { return node(unflat(f)); }

    bool same_as(const Grid& o, double rel_tol = 1e-12) const;

private:
    int dim_ = 0;
    Vec3 lo_{}, hi_{}, h_{};
    Idx3 n_{};
    std::size_t size_ = 0;
    double vol_ = 0.0;
};

/// Scalar values on the nodes of a Grid, immutable after construction, with
/// an optional time tag. Construction validates finiteness of every value.
class ScalarField {
public:
    ScalarField(Grid grid, std::vector<double> values,
                std::optional<double> time = std::nullopt);

    const Grid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::size_t size() const { return values_.size(); }
    std::optional<double> time() const { return time_; }

    ScalarField with_time(double t) const { return ScalarField(grid_, values_, t); }

private:
    Grid grid_;
    std::vector<double> values_;
    std::optional<double> time_;
};

/// Thresholds and mollification width for band estimates: a < b, eps <= (b-a)/4.
struct BandSpec {
    double a;
    double b;
    double epsilon;

    static BandSpec make(double a, double b, double epsilon);
};

/// Evaluate f at every node center.
ScalarField sample(const Grid& grid, const std::function<double(const Vec3&)>& f);

/// max_i |v_i|
double sup_norm(const ScalarField& field);

/// cell_volume * sum_i |v_i|  (compensated summation)
double l1_norm(const ScalarField& field);

/// cell_volume * #{ nodes with a <= v <= b }
double band_measure(const ScalarField& field, double a, double b);

/// min over interior nodes and used axes of (v(x+k h e_d) - 2 v(x) + v(x-k h e_d)) / (k h_d)^2.
/// The negative of the result is the empirical semiconvexity constant.
double second_difference_min(const ScalarField& field, long step);

/// Companion of second_difference_min for the semiconcave (c <= 0) checks.
double second_difference_max(const ScalarField& field, long step);

/// max over nodes and used axes of |forward difference quotient|; the
/// empirical Lipschitz constant of the field.
double max_difference_quotient(const ScalarField& field);

// Arithmetic on matching grids. The result carries no time tag.
ScalarField field_add(const ScalarField& a, const ScalarField& b);
ScalarField field_sub(const ScalarField& a, const ScalarField& b);
ScalarField field_scale(const ScalarField& a, double s);
ScalarField field_add_scalar(const ScalarField& a, double s);

/// Compensated (Kahan) sum; deterministic and order-robust to ~1e-16.
double kahan_sum(std::span<const double> v);

/// Measure of the N-dimensional unit ball: C_1 = 2, C_2 = pi, C_3 = 4 pi / 3.
double unit_ball_measure(int dim);

/// Measure of B(0, r) in dimension dim.
double ball_measure(int dim, double r);

}  // namespace dislo
