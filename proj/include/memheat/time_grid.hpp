#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "memheat/errors.hpp"
#include "memheat/grid.hpp"

namespace memheat {

struct TimeGrid {
    double horizon = 0.0;  // T
    int n_steps = 0;
    double dt = 0.0;

    [[nodiscard]] double time(int n) const { return n * dt; }
    [[nodiscard]] std::vector<double> times() const {
        std::vector<double> t(static_cast<std::size_t>(n_steps) + 1);
        for (int n = 0; n <= n_steps; ++n) t[static_cast<std::size_t>(n)] = time(n);
        return t;
    }

    friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
        return a.horizon == b.horizon && a.n_steps == b.n_steps;
    }
};

inline TimeGrid build_time_grid(double horizon, int n_steps) {
    if (!(horizon > 0.0))
        throw config_error("time.horizon must be positive, got " + std::to_string(horizon));
    if (n_steps < 1)
        throw config_error("time.n_steps must be >= 1, got " + std::to_string(n_steps));
    return TimeGrid{horizon, n_steps, horizon / n_steps};
}

// Control values u(t_n, .) at every time node; applied through the moving
// indicator weights, so values outside omega(t) have no effect.
struct ControlField {
    TimeGrid time_grid;
    std::vector<Field> values;  // one Field per time node, 0..n_steps

    ControlField() = default;
    ControlField(const TimeGrid& tg, const SpatialGrid& grid)
        : time_grid(tg), values(static_cast<std::size_t>(tg.n_steps) + 1, Field(grid)) {}

    [[nodiscard]] const Field& at(int n) const { return values[static_cast<std::size_t>(n)]; }
    Field& at(int n) { return values[static_cast<std::size_t>(n)]; }
};

// Time-indexed snapshots of the full coupled state (y, z_1..z_m).
struct Trajectory {
    TimeGrid time_grid;
    SpatialGrid grid;
    std::vector<std::string> field_names;       // e.g. {"y", "z1", ..., "zm"}
    std::vector<std::vector<Field>> snapshots;  // [time node][field]
    std::string scheme;
    std::uint64_t system_hash = 0;

    [[nodiscard]] int n_fields() const { return static_cast<int>(field_names.size()); }
    [[nodiscard]] const Field& field(int n, int r) const {
        return snapshots[static_cast<std::size_t>(n)][static_cast<std::size_t>(r)];
    }
    [[nodiscard]] const std::vector<Field>& state(int n) const {
        return snapshots[static_cast<std::size_t>(n)];
    }
    [[nodiscard]] const std::vector<Field>& final_state() const { return snapshots.back(); }

    // Nearest time-grid index for t; throws if t is not on the grid.
    [[nodiscard]] int index_of(double t) const {
        const double raw = t / time_grid.dt;
        const int n = static_cast<int>(raw + 0.5);
        if (n < 0 || n > time_grid.n_steps ||
            std::abs(t - time_grid.time(n)) > 1e-9 * std::max(1.0, time_grid.horizon))
            throw usage_error("trajectory: t=" + std::to_string(t) + " is not on the time grid");
        return n;
    }
};

namespace detail {

// FNV-1a, for tagging trajectories with the system that produced them.
inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

}  // namespace memheat
