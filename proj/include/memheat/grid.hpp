#pragma once

// One-dimensional spatial discretization: uniform grid on (0, L) with
// homogeneous Dirichlet conditions, 3-point Laplacian and discrete L2
// products. Fields store interior nodes only; the boundary values are
// structurally zero.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "memheat/errors.hpp"

namespace memheat {

struct SpatialGrid {
    double length = 0.0;  // domain is (0, length)
    int n_interior = 0;
    double spacing = 0.0;  // h = length / (n_interior + 1)

    // Interior node i sits at x = (i+1) * h, i in [0, n_interior).
    [[nodiscard]] double node(int i) const { return (i + 1) * spacing; }

    friend bool operator==(const SpatialGrid& a, const SpatialGrid& b) {
        return a.length == b.length && a.n_interior == b.n_interior;
    }
};

inline SpatialGrid build_grid(double length, int n_interior) {
    if (!(length > 0.0) || !std::isfinite(length))
        throw config_error("domain.length must be a positive finite real, got " +
                           std::to_string(length));
    if (n_interior < 2)
        throw config_error("domain.n_interior must be >= 2, got " +
                           std::to_string(n_interior));
    return SpatialGrid{length, n_interior, length / (n_interior + 1)};
}

// Values at the interior nodes of one grid.
struct Field {
    SpatialGrid grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const SpatialGrid& g) : grid(g), values(g.n_interior, 0.0) {}
    Field(const SpatialGrid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (static_cast<int>(values.size()) != g.n_interior)
            throw usage_error("Field: value count does not match grid");
    }

    [[nodiscard]] int size() const { return static_cast<int>(values.size()); }
    double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
    double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
};

// 3-point stencil (f_{i-1} - 2 f_i + f_{i+1}) / h^2 with zero ghost values.
inline Field apply_laplacian(const Field& f) {
    const int n = f.size();
    const double inv_h2 = 1.0 / (f.grid.spacing * f.grid.spacing);
    Field out(f.grid);
    for (int i = 0; i < n; ++i) {
        const double left = (i > 0) ? f[i - 1] : 0.0;
        const double right = (i + 1 < n) ? f[i + 1] : 0.0;
        out[i] = (left - 2.0 * f[i] + right) * inv_h2;
    }
    return out;
}

// Discrete L2(0,L) product: h * sum_i f_i g_i.
inline double inner(const Field& f, const Field& g) {
    if (!(f.grid == g.grid)) throw usage_error("inner: fields live on different grids");
    double s = 0.0;
    for (int i = 0; i < f.size(); ++i) s += f[i] * g[i];
    return f.grid.spacing * s;
}

inline double norm(const Field& f) { return std::sqrt(inner(f, f)); }

}  // namespace memheat
