#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "chrelax/errors.hpp"

namespace chrelax {

/// Uniform tensor grid on an interval or rectangle with homogeneous Neumann
/// boundary conditions. Node i of axis a sits at i * spacing[a]; quadrature
/// uses trapezoidal node weights (h/2 at boundary nodes, h inside), which
/// makes the mirror-ghost Laplacian exactly self-adjoint and conservative
/// with respect to the discrete inner product.
class Grid {
public:
    static std::shared_ptr<const Grid> interval(double length, int nodes) {
        return std::shared_ptr<const Grid>(new Grid(1, {length, 0.0}, {nodes, 1}));
    }
    static std::shared_ptr<const Grid> rectangle(double lx, double ly, int nx, int ny) {
        return std::shared_ptr<const Grid>(new Grid(2, {lx, ly}, {nx, ny}));
    }

    int dim() const { return dim_; }
    int count(int axis) const { return counts_[axis]; }
    double extent(int axis) const { return extents_[axis]; }
    double spacing(int axis) const { return spacing_[axis]; }
    int total_nodes() const { return total_; }
    double measure() const { return measure_; }

    /// Trapezoidal quadrature weight of node k.
    double weight(int k) const { return weights_[k]; }
    const std::vector<double>& weights() const { return weights_; }

    int index(int i, int j = 0) const { return j * counts_[0] + i; }
    double x(int k) const { return (k % counts_[0]) * spacing_[0]; }
    double y(int k) const { return (k / counts_[0]) * spacing_[1]; }

    bool same_as(const Grid& other) const {
        return dim_ == other.dim_ && counts_ == other.counts_ && extents_ == other.extents_;
    }

    /// dst += coeff * (mirror-ghost Laplacian of v). No aliasing allowed.
    void add_laplacian(const std::vector<double>& v, std::vector<double>& dst,
                       double coeff = 1.0) const {
        const int nx = counts_[0];
        const double ax = coeff / (spacing_[0] * spacing_[0]);
        if (dim_ == 1) {
            dst[0] += ax * 2.0 * (v[1] - v[0]);
            for (int i = 1; i + 1 < nx; ++i)
                dst[i] += ax * (v[i - 1] - 2.0 * v[i] + v[i + 1]);
            dst[nx - 1] += ax * 2.0 * (v[nx - 2] - v[nx - 1]);
            return;
        }
        const int ny = counts_[1];
        const double ay = coeff / (spacing_[1] * spacing_[1]);
        for (int j = 0; j < ny; ++j) {
            for (int i = 0; i < nx; ++i) {
                const int k = j * nx + i;
                const double c = v[k];
                const double xl = (i == 0) ? v[k + 1] : v[k - 1];
                const double xr = (i == nx - 1) ? v[k - 1] : v[k + 1];
                const double yl = (j == 0) ? v[k + nx] : v[k - nx];
                const double yr = (j == ny - 1) ? v[k - nx] : v[k + nx];
                dst[k] += ax * (xl - 2.0 * c + xr) + ay * (yl - 2.0 * c + yr);
            }
        }
    }

    /// Row k of the Laplacian as (column, value) pairs; 1D only (used by the
    /// banded step assembly).
    void laplacian_row_1d(int i, int cols[3], double vals[3], int& n) const {
        const int nx = counts_[0];
        const double a = 1.0 / (spacing_[0] * spacing_[0]);
        n = 0;
        if (i == 0) {
            cols[n] = 0; vals[n++] = -2.0 * a;
            cols[n] = 1; vals[n++] = 2.0 * a;
        } else if (i == nx - 1) {
            cols[n] = nx - 2; vals[n++] = 2.0 * a;
            cols[n] = nx - 1; vals[n++] = -2.0 * a;
        } else {
            cols[n] = i - 1; vals[n++] = a;
            cols[n] = i;     vals[n++] = -2.0 * a;
            cols[n] = i + 1; vals[n++] = a;
        }
    }

private:
    Grid(int dim, std::array<double, 2> ext, std::array<int, 2> cnt)
        : dim_(dim), extents_(ext), counts_(cnt) {
        for (int a = 0; a < dim_; ++a) {
            if (counts_[a] < 3) throw Error("grid needs at least 3 nodes per axis");
            if (!(extents_[a] > 0.0)) throw Error("grid extent must be positive");
            spacing_[a] = extents_[a] / (counts_[a] - 1);
        }
        if (dim_ == 1) { counts_[1] = 1; spacing_[1] = 0.0; }
        total_ = counts_[0] * counts_[1];
        measure_ = extents_[0] * (dim_ == 2 ? extents_[1] : 1.0);
        weights_.resize(total_);
        auto axis_w = [&](int a, int i) {
            return (i == 0 || i == counts_[a] - 1) ? 0.5 * spacing_[a] : spacing_[a];
        };
        for (int j = 0; j < counts_[1]; ++j)
            for (int i = 0; i < counts_[0]; ++i)
                weights_[index(i, j)] = axis_w(0, i) * (dim_ == 2 ? axis_w(1, j) : 1.0);
    }

    int dim_;
    std::array<double, 2> extents_;
    std::array<int, 2> counts_;
    std::array<double, 2> spacing_{};
    int total_ = 0;
    double measure_ = 0.0;
    std::vector<double> weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// One real value per grid node. Fields are plain value types; operations
/// that combine two fields require them to live on the same grid.
struct Field {
    GridPtr grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(GridPtr g, double fill = 0.0)
        : grid(std::move(g)), values(grid->total_nodes(), fill) {}

    int size() const { return static_cast<int>(values.size()); }
    double& operator[](int k) { return values[k]; }
    double operator[](int k) const { return values[k]; }
};

inline void require_same_grid(const Field& a, const Field& b, const char* where) {
    if (!a.grid || !b.grid || !a.grid->same_as(*b.grid))
        throw GridMismatch(std::string(where) + ": fields live on different grids");
    if (a.size() != b.size() || a.size() != a.grid->total_nodes())
        throw GridMismatch(std::string(where) + ": field size does not match grid");
}

inline Field make_field(const GridPtr& g, const std::function<double(double, double)>& f) {
    Field out(g);
    for (int k = 0; k < g->total_nodes(); ++k) out.values[k] = f(g->x(k), g->y(k));
    return out;
}

inline Field constant_field(const GridPtr& g, double c) { return Field(g, c); }

/// Neumaier-compensated accumulator; keeps the discrete conservation and
/// duality identities at the single-rounding level instead of O(n) roundings.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
        else comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Discrete L2(Omega) inner product with trapezoidal node weights.
inline double inner_product(const Field& a, const Field& b) {
    require_same_grid(a, b, "inner_product");
    CompensatedSum s;
    const auto& w = a.grid->weights();
    for (int k = 0; k < a.size(); ++k) s.add(w[k] * a.values[k] * b.values[k]);
    return s.value();
}

/// Mean value |Omega|^{-1} <v, 1>.
inline double mean(const Field& v) {
    CompensatedSum s;
    const auto& w = v.grid->weights();
    for (int k = 0; k < v.size(); ++k) s.add(w[k] * v.values[k]);
    return s.value() / v.grid->measure();
}

/// Applies the mirror-ghost Neumann Laplacian. Symmetric with respect to
/// inner_product and annihilated by integration: <lap v, 1> = 0 for all v.
inline Field laplacian_apply(const Grid& g, const Field& v) {
    if (!v.grid || !v.grid->same_as(g))
        throw GridMismatch("laplacian_apply: field does not live on the given grid");
    Field out(v.grid, 0.0);
    g.add_laplacian(v.values, out.values);
    return out;
}

inline Field laplacian_apply(const Field& v) { return laplacian_apply(*v.grid, v); }

struct FieldNorms {
    double l2 = 0.0;
    double linf = 0.0;
    double h1_semi = 0.0;
};

inline FieldNorms norms(const Field& v) {
    FieldNorms n;
    n.l2 = std::sqrt(inner_product(v, v));
    for (double x : v.values) n.linf = std::max(n.linf, std::abs(x));
    Field lap = laplacian_apply(v);
    n.h1_semi = std::sqrt(std::max(0.0, -inner_product(lap, v)));
    return n;
}

inline double norm_l2(const Field& v) { return std::sqrt(inner_product(v, v)); }

inline double norm_linf(const Field& v) {
    double m = 0.0;
    for (double x : v.values) m = std::max(m, std::abs(x));
    return m;
}

// Small vocabulary of field arithmetic used throughout the solvers.

inline Field& operator+=(Field& a, const Field& b) {
    require_same_grid(a, b, "operator+=");
    for (int k = 0; k < a.size(); ++k) a.values[k] += b.values[k];
    return a;
}

inline Field& operator-=(Field& a, const Field& b) {
    require_same_grid(a, b, "operator-=");
    for (int k = 0; k < a.size(); ++k) a.values[k] -= b.values[k];
    return a;
}

inline Field& operator*=(Field& a, double s) {
    for (double& x : a.values) x *= s;
    return a;
}

inline Field operator+(Field a, const Field& b) { a += b; return a; }
inline Field operator-(Field a, const Field& b) { a -= b; return a; }
inline Field operator*(double s, Field a) { a *= s; return a; }

inline void axpy(double a, const Field& x, Field& y) {
    require_same_grid(x, y, "axpy");
    for (int k = 0; k < x.size(); ++k) y.values[k] += a * x.values[k];
}

inline bool all_finite(const Field& v) {
    for (double x : v.values)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace chrelax
