#pragma once

// Moving control region omega(t) = (a(t), b(t)), a single interval whose
// endpoints are piecewise-linear in time. Provides the cell-averaged grid
// indicator and the two geometric checks: coverage (every node is inside
// omega(t) at some time-grid point) and splitting (omega(t) stays strictly
// interior, so the complement has exactly two components).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "memheat/errors.hpp"
#include "memheat/grid.hpp"

namespace memheat {

struct SupportBreakpoint {
    double t;
    double left;   // a_j
    double right;  // b_j
};

struct MovingSupport {
    std::vector<SupportBreakpoint> breakpoints;

    // Endpoints (a(t), b(t)) interpolated linearly between breakpoints.
    // A single breakpoint means a time-constant interval.
    [[nodiscard]] std::pair<double, double> interval(double t) const {
        const auto& bp = breakpoints;
        if (bp.size() == 1) return {bp[0].left, bp[0].right};
        const double t0 = bp.front().t, t1 = bp.back().t;
        const double slack = 1e-12 * std::max(1.0, std::abs(t1));
        if (t < t0 - slack || t > t1 + slack)
            throw usage_error("support: t=" + std::to_string(t) +
                              " outside schedule [" + std::to_string(t0) + ", " +
                              std::to_string(t1) + "]");
        const double tc = std::clamp(t, t0, t1);
        std::size_t j = 1;
        while (j + 1 < bp.size() && tc > bp[j].t) ++j;
        const double w = (tc - bp[j - 1].t) / (bp[j].t - bp[j - 1].t);
        return {bp[j - 1].left + w * (bp[j].left - bp[j - 1].left),
                bp[j - 1].right + w * (bp[j].right - bp[j - 1].right)};
    }

    [[nodiscard]] bool is_static() const {
        for (const auto& b : breakpoints)
            if (b.left != breakpoints[0].left || b.right != breakpoints[0].right) return false;
        return true;
    }

    // Largest endpoint speed over all segments.
    [[nodiscard]] double max_speed() const {
        double v = 0.0;
        for (std::size_t j = 1; j < breakpoints.size(); ++j) {
            const double dt = breakpoints[j].t - breakpoints[j - 1].t;
            v = std::max(v, std::abs(breakpoints[j].left - breakpoints[j - 1].left) / dt);
            v = std::max(v, std::abs(breakpoints[j].right - breakpoints[j - 1].right) / dt);
        }
        return v;
    }
};

// Validates the schedule; `domain_length` bounds the right endpoints.
inline MovingSupport make_support(std::vector<SupportBreakpoint> breakpoints,
                                  double domain_length) {
    if (breakpoints.empty()) throw config_error("support.breakpoints must be nonempty");
    for (std::size_t j = 0; j < breakpoints.size(); ++j) {
        const auto& b = breakpoints[j];
        const std::string at = "support.breakpoints[" + std::to_string(j) + "]";
        if (!std::isfinite(b.t) || !std::isfinite(b.left) || !std::isfinite(b.right))
            throw config_error(at + ": non-finite entry");
        if (b.left < 0.0) throw config_error(at + ".left must be >= 0, got " + std::to_string(b.left));
        if (!(b.left < b.right))
            throw config_error(at + ": requires left < right, got [" + std::to_string(b.left) +
                               ", " + std::to_string(b.right) + "]");
        if (b.right > domain_length)
            throw config_error(at + ".right must be <= domain length " +
                               std::to_string(domain_length) + ", got " + std::to_string(b.right));
        if (j > 0 && !(b.t > breakpoints[j - 1].t))
            throw config_error(at + ".t: breakpoint times must be strictly increasing");
    }
    return MovingSupport{std::move(breakpoints)};
}

inline MovingSupport static_support(double left, double right, double domain_length) {
    return make_support({SupportBreakpoint{0.0, left, right}}, domain_length);
}

// Cell average of the sharp indicator of (a(t), b(t)):
//   weight_i = |cell_i ∩ omega(t)| / h,   cell_i = (x_i - h/2, x_i + h/2).
inline Field indicator_weights(const MovingSupport& s, double t, const SpatialGrid& grid) {
    const auto [a, b] = s.interval(t);
    const double h = grid.spacing;
    Field w(grid);
    for (int i = 0; i < grid.n_interior; ++i) {
        const double lo = grid.node(i) - 0.5 * h;
        const double hi = grid.node(i) + 0.5 * h;
        const double overlap = std::min(hi, b) - std::max(lo, a);
        w[i] = std::clamp(overlap / h, 0.0, 1.0);
    }
    return w;
}

struct CoverageReport {
    bool covered = false;
    std::vector<int> uncovered;  // interior node indices never inside omega(t_n)

    explicit operator bool() const { return covered; }
};

// True iff every interior node lies in the open interval omega(t_n) for at
// least one time-grid point t_n.
inline CoverageReport check_coverage(const MovingSupport& s, const SpatialGrid& grid,
                                     const std::vector<double>& times) {
    std::vector<char> seen(static_cast<std::size_t>(grid.n_interior), 0);
    for (const double t : times) {
        const auto [a, b] = s.interval(t);
        for (int i = 0; i < grid.n_interior; ++i) {
            const double x = grid.node(i);
            if (a < x && x < b) seen[static_cast<std::size_t>(i)] = 1;
        }
    }
    CoverageReport rep;
    for (int i = 0; i < grid.n_interior; ++i)
        if (!seen[static_cast<std::size_t>(i)]) rep.uncovered.push_back(i);
    rep.covered = rep.uncovered.empty();
    return rep;
}

// True iff omega(t_n) stays strictly interior at every time-grid point; the
// complement then has exactly the two components (0, a) and (b, L).
inline bool check_split(const MovingSupport& s, const SpatialGrid& grid,
                        const std::vector<double>& times) {
    for (const double t : times) {
        const auto [a, b] = s.interval(t);
        if (!(a > 0.0 && b < grid.length)) return false;
    }
    return true;
}

}  // namespace memheat
