#pragma once

// Coupled heat + ODE-cascade systems. A memory kernel with companion order m
// is replaced by auxiliary states z_k(t) = \int_0^t M^(k-1)(t-s) (L y)(s) ds,
// k = 1..m, where L is the Laplacian (memory on Δy) or the identity (memory
// on y). Differentiating each z_k closes the system:
//
//   y_t   = b Δy + sigma z_1 + chi_{omega(t)} u
//   z_k,t = s_{k-1} (L y) + z_{k+1},              k < m
//   z_m,t = s_{m-1} (L y) + sum_{j<m} c_j z_{j+1}
//
// with sigma = +1 when the memory acts on Δy and -1 when it acts on y
// (matching the sign with which the integral enters the evolution), and
// s_k = M^(k)(0). All z_k start from zero.

#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "memheat/errors.hpp"
#include "memheat/grid.hpp"
#include "memheat/kernel.hpp"
#include "memheat/support.hpp"

namespace memheat {

enum class MemoryPlacement {
    OnLaplacian,  // integral of M(t-s) Δy(s) ds
    OnState,      // integral of M(t-s) y(s) ds
};

inline const char* to_string(MemoryPlacement p) {
    return p == MemoryPlacement::OnLaplacian ? "on_laplacian" : "on_state";
}

// One contribution to d/dt(field `row`): (lap_coeff * Δ + id_coeff * I)
// applied to field `col`.
struct BlockTerm {
    int row = 0;
    int col = 0;
    double lap_coeff = 0.0;
    double id_coeff = 0.0;
};

struct BuildOptions {
    bool allow_zero_diffusivity = false;
};

// A spatially discretized linear evolution x' = A x + chi_{omega(t)} u with
// block-structured A. State layout is (y, z_1, ..., z_m) for cascades and
// (z, y) for the integrated transform.
struct CoupledSystem {
    SpatialGrid grid;
    MemoryPlacement placement = MemoryPlacement::OnLaplacian;
    double diffusivity = 0.0;
    CompanionSystem companion;
    MovingSupport support;
    double horizon = 0.0;

    int n_fields = 0;
    std::vector<BlockTerm> terms;
    std::vector<double> control_injection;  // per-field coefficient on chi*u
    std::vector<double> initial_injection;  // per-field coefficient on y0 at t=0
    std::vector<std::string> field_names;
    int y_index = 0;       // physical state
    int memory_index = 0;  // field realizing the Eq.-style memory integral

    [[nodiscard]] int state_size() const { return n_fields * grid.n_interior; }

    // Default target set {y(T), z_1(T)}; optionally every state field.
    [[nodiscard]] std::vector<int> target_indices(bool all_states = false) const {
        if (all_states) {
            std::vector<int> all(static_cast<std::size_t>(n_fields));
            for (int r = 0; r < n_fields; ++r) all[static_cast<std::size_t>(r)] = r;
            return all;
        }
        if (y_index == memory_index) return {y_index};
        return {y_index, memory_index};
    }

    [[nodiscard]] std::string describe() const {
        std::ostringstream os;
        os << "fields=" << n_fields << ";placement=" << to_string(placement)
           << ";b=" << diffusivity << ";T=" << horizon << ";L=" << grid.length
           << ";n=" << grid.n_interior << ";order=" << companion.order << ";rec=";
        for (const double c : companion.recurrence) os << c << ",";
        os << ";seeds=";
        for (const double s : companion.seeds) os << s << ",";
        os << ";inj=";
        for (const double g : control_injection) os << g << ",";
        os << ";init=";
        for (const double g : initial_injection) os << g << ",";
        return os.str();
    }
};

inline CoupledSystem build_cascade(const Kernel& kernel, MemoryPlacement placement,
                                   double diffusivity, const SpatialGrid& grid,
                                   const MovingSupport& support, double horizon,
                                   const BuildOptions& options = {}) {
    if (kernel.variant == Kernel::Variant::Taylor)
        throw usage_error("build_cascade: truncate the Taylor kernel first");
    if (diffusivity < 0.0)
        throw config_error("diffusivity must be >= 0, got " + std::to_string(diffusivity));
    if (diffusivity == 0.0 && placement == MemoryPlacement::OnLaplacian &&
        !options.allow_zero_diffusivity)
        throw config_error(
            "diffusivity: b=0 with memory on the Laplacian leaves no instantaneous "
            "diffusion; set allow_zero_diffusivity to override");
    if (!(horizon > 0.0))
        throw config_error("time.horizon must be positive, got " + std::to_string(horizon));

    CoupledSystem sys;
    sys.grid = grid;
    sys.placement = placement;
    sys.diffusivity = diffusivity;
    sys.companion = companion(kernel);
    sys.support = support;
    sys.horizon = horizon;

    const int m = sys.companion.order;
    sys.n_fields = m + 1;
    sys.field_names.emplace_back("y");
    for (int k = 1; k <= m; ++k) sys.field_names.push_back("z" + std::to_string(k));
    sys.y_index = 0;
    sys.memory_index = 1;
    sys.control_injection.assign(static_cast<std::size_t>(m) + 1, 0.0);
    sys.control_injection[0] = 1.0;
    sys.initial_injection.assign(static_cast<std::size_t>(m) + 1, 0.0);
    sys.initial_injection[0] = 1.0;  // z_k(0) = 0

    const bool on_lap = placement == MemoryPlacement::OnLaplacian;
    const double sigma = on_lap ? 1.0 : -1.0;

    sys.terms.push_back(BlockTerm{0, 0, diffusivity, 0.0});  // b Δy
    sys.terms.push_back(BlockTerm{0, 1, 0.0, sigma});        // sigma z_1

    for (int k = 1; k <= m; ++k) {
        const double seed = sys.companion.seeds[static_cast<std::size_t>(k - 1)];
        sys.terms.push_back(on_lap ? BlockTerm{k, 0, seed, 0.0} : BlockTerm{k, 0, 0.0, seed});
        if (k < m) {
            sys.terms.push_back(BlockTerm{k, k + 1, 0.0, 1.0});
        } else {
            for (int j = 0; j < m; ++j) {
                const double c = sys.companion.recurrence[static_cast<std::size_t>(j)];
                if (c != 0.0) sys.terms.push_back(BlockTerm{k, j + 1, 0.0, c});
            }
        }
    }
    return sys;
}

// The M ≡ 1, b = 1 special case via z = y + \int_0^t y: after substituting
// z_t into the y equation the pair evolves as
//   z_t = Δz + y + chi u,   y_t = Δz + chi u,
// with z(0) = y(0) = y0. State layout (z, y); both equations carry the
// control.
inline CoupledSystem build_integrated_transform(double diffusivity, const SpatialGrid& grid,
                                                const MovingSupport& support, double horizon) {
    if (diffusivity != 1.0)
        throw usage_error("build_integrated_transform: requires b = 1");
    if (!(horizon > 0.0))
        throw config_error("time.horizon must be positive, got " + std::to_string(horizon));

    CoupledSystem sys;
    sys.grid = grid;
    sys.placement = MemoryPlacement::OnLaplacian;
    sys.diffusivity = diffusivity;
    sys.companion = companion(Kernel::exp_poly(0.0, {1.0}));
    sys.support = support;
    sys.horizon = horizon;

    sys.n_fields = 2;
    sys.field_names = {"z", "y"};
    sys.y_index = 1;
    sys.memory_index = 0;
    sys.control_injection = {1.0, 1.0};
    sys.initial_injection = {1.0, 1.0};  // z(0) = y(0) = y0
    sys.terms = {
        BlockTerm{0, 0, 1.0, 0.0},  // Δz
        BlockTerm{0, 1, 0.0, 1.0},  // + y
        BlockTerm{1, 0, 1.0, 0.0},  // y_t = Δz
    };
    return sys;
}

}  // namespace memheat
