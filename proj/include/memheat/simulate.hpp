#pragma once

// Time integration. Both integrators use the theta = 1/2 (Crank-Nicolson)
// rule; the control enters through the indicator weights averaged over the
// step endpoints. simulate() advances the coupled cascade state with one
// banded solve per step. simulate_convolution() is the independent
// reference: it never builds a cascade and instead evaluates the memory
// integral by trapezoidal quadrature over the stored history, at
// O(n_steps^2) cost.

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memheat/detail/banded.hpp"
#include "memheat/errors.hpp"
#include "memheat/grid.hpp"
#include "memheat/kernel.hpp"
#include "memheat/support.hpp"
#include "memheat/system.hpp"
#include "memheat/time_grid.hpp"

namespace memheat {

namespace detail {

// shift*I + scale*A on the node-major interleaved layout (node i, field r)
// -> i * n_fields + r.
inline BandMatrix assemble_band(const CoupledSystem& sys, double scale, double shift) {
    const int f = sys.n_fields;
    const int nx = sys.grid.n_interior;
    int kl = 0, ku = 0;
    for (const auto& t : sys.terms) {
        const int d = t.row - t.col;  // row index minus col index within a node block
        if (t.id_coeff != 0.0 || t.lap_coeff != 0.0) {
            kl = std::max(kl, d);
            ku = std::max(ku, -d);
        }
        if (t.lap_coeff != 0.0) {
            kl = std::max(kl, d + f);
            ku = std::max(ku, f - d);
        }
    }
    BandMatrix band(f * nx, kl, ku);
    for (int i = 0; i < f * nx; ++i) band.add(i, i, shift);
    const double inv_h2 = 1.0 / (sys.grid.spacing * sys.grid.spacing);
    for (const auto& t : sys.terms) {
        for (int i = 0; i < nx; ++i) {
            const int row = i * f + t.row;
            if (t.id_coeff != 0.0) band.add(row, i * f + t.col, scale * t.id_coeff);
            if (t.lap_coeff != 0.0) {
                const double c = scale * t.lap_coeff * inv_h2;
                band.add(row, i * f + t.col, -2.0 * c);
                if (i > 0) band.add(row, (i - 1) * f + t.col, c);
                if (i + 1 < nx) band.add(row, (i + 1) * f + t.col, c);
            }
        }
    }
    return band;
}

inline void check_finite(std::span<const double> x, int step) {
    for (const double v : x)
        if (!std::isfinite(v))
            throw numeric_error("simulate: non-finite state after step " + std::to_string(step));
}

}  // namespace detail

// One assembled Crank-Nicolson step operator for a coupled system on a time
// grid. The operator is time-invariant (the moving support only shapes the
// source term), so the factorization is done once per engine. The adjoint
// machinery reuses the same bands transposed.
class StepEngine {
public:
    StepEngine(const CoupledSystem& sys, const TimeGrid& tg, bool with_adjoint = false)
        : sys_(sys), tg_(tg),
          b_plus_(detail::assemble_band(sys, 0.5 * tg.dt, 1.0)),
          lu_minus_(detail::assemble_band(sys, -0.5 * tg.dt, 1.0)) {
        if (!(tg.horizon > 0.0) || tg.n_steps < 1) throw usage_error("StepEngine: bad time grid");
        node_weights_.reserve(static_cast<std::size_t>(tg.n_steps) + 1);
        for (int n = 0; n <= tg.n_steps; ++n)
            node_weights_.push_back(indicator_weights(sys.support, tg.time(n), sys.grid));
        if (with_adjoint) {
            b_plus_t_ = detail::assemble_band(sys, 0.5 * tg.dt, 1.0).transposed();
            lu_minus_t_.emplace(detail::assemble_band(sys, -0.5 * tg.dt, 1.0).transposed());
        }
    }

    [[nodiscard]] const CoupledSystem& system() const { return sys_; }
    [[nodiscard]] const TimeGrid& time_grid() const { return tg_; }
    [[nodiscard]] const Field& weights(int n) const {
        return node_weights_[static_cast<std::size_t>(n)];
    }

    [[nodiscard]] std::vector<double> initial_state(const Field& y0) const {
        const int f = sys_.n_fields;
        const int nx = sys_.grid.n_interior;
        std::vector<double> x(static_cast<std::size_t>(f) * nx, 0.0);
        for (int r = 0; r < f; ++r) {
            const double c = sys_.initial_injection[static_cast<std::size_t>(r)];
            if (c != 0.0)
                for (int i = 0; i < nx; ++i) x[static_cast<std::size_t>(i * f + r)] = c * y0[i];
        }
        return x;
    }

    // Forward sweep; u == nullptr means zero control. `on_state` receives
    // (step index, flat state) for every node including 0.
    template <typename StateFn>
    void run(const ControlField* u, const Field& y0, StateFn&& on_state) const {
        const int N = tg_.n_steps;
        const std::size_t dim = static_cast<std::size_t>(sys_.state_size());
        std::vector<double> x = initial_state(y0);
        on_state(0, std::span<const double>(x));
        std::vector<double> rhs(dim), src_lo(dim), src_hi(dim);
        source(u, 0, src_hi);
        for (int n = 0; n < N; ++n) {
            std::swap(src_lo, src_hi);
            source(u, n + 1, src_hi);
            b_plus_.matvec(x, rhs);
            for (std::size_t i = 0; i < dim; ++i)
                rhs[i] += 0.5 * tg_.dt * (src_lo[i] + src_hi[i]);
            lu_minus_.solve_inplace(rhs);
            std::swap(x, rhs);
            detail::check_finite(x, n + 1);
            on_state(n + 1, std::span<const double>(x));
        }
    }

    [[nodiscard]] std::vector<double> run_terminal(const ControlField* u, const Field& y0) const {
        std::vector<double> last;
        const int N = tg_.n_steps;
        run(u, y0, [&](int n, std::span<const double> x) {
            if (n == N) last.assign(x.begin(), x.end());
        });
        return last;
    }

    [[nodiscard]] Trajectory run_trajectory(const ControlField* u, const Field& y0) const {
        Trajectory traj;
        traj.time_grid = tg_;
        traj.grid = sys_.grid;
        traj.field_names = sys_.field_names;
        traj.scheme = "crank_nicolson";
        traj.system_hash = detail::fnv1a(sys_.describe() + ";steps=" + std::to_string(tg_.n_steps));
        traj.snapshots.reserve(static_cast<std::size_t>(tg_.n_steps) + 1);
        run(u, y0, [&](int, std::span<const double> x) {
            traj.snapshots.push_back(unflatten(x));
        });
        return traj;
    }

    // Backward sweep of the transposed step operators. Given the terminal
    // seed g = dJ/dx_N, returns the control-space contribution
    //   G_n = (dt/2) P_n^T (lambda_n [n>0] + lambda_{n+1} [n<N]),
    // where lambda_N = S^{-T} g and lambda_n = S^{-T} B_+^T lambda_{n+1}.
    [[nodiscard]] ControlField adjoint_control_gradient(std::vector<double> terminal_seed) const {
        if (!lu_minus_t_) throw usage_error("StepEngine: built without adjoint support");
        const int N = tg_.n_steps;
        const std::size_t dim = static_cast<std::size_t>(sys_.state_size());
        ControlField grad(tg_, sys_.grid);

        std::vector<double> lambda = std::move(terminal_seed);
        lu_minus_t_->solve_inplace(lambda);     // lambda_N
        accumulate_injection(lambda, N, grad);  // G_N gets lambda_N only
        std::vector<double> work(dim);
        for (int n = N - 1; n >= 0; --n) {
            accumulate_injection(lambda, n, grad);  // lambda_{n+1} -> G_n
            if (n == 0) break;                      // G_0 gets lambda_1 only
            b_plus_t_.matvec(lambda, work);
            lu_minus_t_->solve_inplace(work);
            std::swap(lambda, work);                // lambda_n
            accumulate_injection(lambda, n, grad);  // lambda_n -> G_n
        }
        return grad;
    }

    [[nodiscard]] std::vector<Field> unflatten(std::span<const double> x) const {
        const int f = sys_.n_fields;
        const int nx = sys_.grid.n_interior;
        std::vector<Field> fields(static_cast<std::size_t>(f), Field(sys_.grid));
        for (int i = 0; i < nx; ++i)
            for (int r = 0; r < f; ++r)
                fields[static_cast<std::size_t>(r)][i] = x[static_cast<std::size_t>(i * f + r)];
        return fields;
    }

private:
    // chi_{omega(t_n)} u(t_n) injected into the controlled rows.
    void source(const ControlField* u, int n, std::vector<double>& out) const {
        std::fill(out.begin(), out.end(), 0.0);
        if (!u) return;
        const int f = sys_.n_fields;
        const int nx = sys_.grid.n_interior;
        const Field& w = weights(n);
        const Field& uv = u->at(n);
        for (int r = 0; r < f; ++r) {
            const double c = sys_.control_injection[static_cast<std::size_t>(r)];
            if (c == 0.0) continue;
            for (int i = 0; i < nx; ++i)
                out[static_cast<std::size_t>(i * f + r)] += c * w[i] * uv[i];
        }
    }

    // grad[node] += (dt/2) P_node^T lambda.
    void accumulate_injection(const std::vector<double>& lambda, int node,
                              ControlField& grad) const {
        const int f = sys_.n_fields;
        const int nx = sys_.grid.n_interior;
        const Field& w = weights(node);
        Field& g = grad.at(node);
        for (int r = 0; r < f; ++r) {
            const double c = sys_.control_injection[static_cast<std::size_t>(r)];
            if (c == 0.0) continue;
            for (int i = 0; i < nx; ++i)
                g[i] += 0.5 * tg_.dt * c * w[i] * lambda[static_cast<std::size_t>(i * f + r)];
        }
    }

    CoupledSystem sys_;
    TimeGrid tg_;
    std::vector<Field> node_weights_;
    detail::BandMatrix b_plus_;
    detail::BandLU lu_minus_;
    detail::BandMatrix b_plus_t_;
    std::optional<detail::BandLU> lu_minus_t_;
};

inline Trajectory simulate(const CoupledSystem& sys, const ControlField& u, const Field& y0,
                           const TimeGrid& tg) {
    if (!(y0.grid == sys.grid)) throw usage_error("simulate: y0 grid does not match the system");
    if (!(u.time_grid == tg)) throw usage_error("simulate: control time grid does not match");
    return StepEngine(sys, tg).run_trajectory(&u, y0);
}

inline Trajectory simulate_free(const CoupledSystem& sys, const Field& y0, const TimeGrid& tg) {
    if (!(y0.grid == sys.grid)) throw usage_error("simulate: y0 grid does not match the system");
    return StepEngine(sys, tg).run_trajectory(nullptr, y0);
}

// Direct-history reference integrator: same theta = 1/2 stepping, but the
// memory term g(t) = int_0^t M(t-s) (L y)(s) ds is evaluated by trapezoidal
// quadrature over the stored (L y) history. The implicit endpoint
// contribution (dt/2) M(0) (L y)_{n+1} is folded into the step matrix. The
// reported z1 is the quadrature value of the integral itself.
inline Trajectory simulate_convolution(const Kernel& kernel, MemoryPlacement placement,
                                       double diffusivity, const MovingSupport& support,
                                       const ControlField& u, const Field& y0,
                                       const TimeGrid& tg, const BuildOptions& options = {}) {
    const SpatialGrid grid = y0.grid;
    const int nx = grid.n_interior;
    const int N = tg.n_steps;
    if (!(u.time_grid == tg))
        throw usage_error("simulate_convolution: control time grid does not match");
    if (diffusivity < 0.0)
        throw config_error("diffusivity must be >= 0, got " + std::to_string(diffusivity));
    if (diffusivity == 0.0 && placement == MemoryPlacement::OnLaplacian &&
        !options.allow_zero_diffusivity)
        throw config_error(
            "diffusivity: b=0 with memory on the Laplacian leaves no instantaneous "
            "diffusion; set allow_zero_diffusivity to override");

    const bool on_lap = placement == MemoryPlacement::OnLaplacian;
    const double sigma = on_lap ? 1.0 : -1.0;

    // Kernel values at lag multiples of dt; Taylor kernels throw here if the
    // horizon exceeds their validity radius.
    std::vector<double> kv(static_cast<std::size_t>(N) + 1);
    for (int d = 0; d <= N; ++d) kv[static_cast<std::size_t>(d)] = eval_kernel(kernel, tg.time(d));

    // Single-field CN matrices; the memory endpoint term shifts the
    // implicit side by -sigma (dt^2/4) M(0) L.
    const double inv_h2 = 1.0 / (grid.spacing * grid.spacing);
    detail::BandMatrix minus(nx, 1, 1), plus(nx, 1, 1);
    const double cb = 0.5 * tg.dt * diffusivity * inv_h2;
    const double ce = 0.25 * tg.dt * tg.dt * sigma * kv[0];
    for (int i = 0; i < nx; ++i) {
        minus.add(i, i, 1.0 + 2.0 * cb);
        plus.add(i, i, 1.0 - 2.0 * cb);
        if (on_lap) {
            minus.add(i, i, 2.0 * ce * inv_h2);
        } else {
            minus.add(i, i, -ce);
        }
        if (i > 0) {
            minus.add(i, i - 1, -cb);
            plus.add(i, i - 1, cb);
            if (on_lap) minus.add(i, i - 1, -ce * inv_h2);
        }
        if (i + 1 < nx) {
            minus.add(i, i + 1, -cb);
            plus.add(i, i + 1, cb);
            if (on_lap) minus.add(i, i + 1, -ce * inv_h2);
        }
    }
    detail::BandLU lu(std::move(minus));

    Trajectory traj;
    traj.time_grid = tg;
    traj.grid = grid;
    traj.field_names = {"y", "z1"};
    traj.scheme = "crank_nicolson+trapezoid_history";
    traj.system_hash = detail::fnv1a("convolution;placement=" + std::string(to_string(placement)) +
                                     ";b=" + std::to_string(diffusivity));
    traj.snapshots.reserve(static_cast<std::size_t>(N) + 1);

    std::vector<std::vector<double>> ly_hist;  // (L y)(t_j), flat
    ly_hist.reserve(static_cast<std::size_t>(N) + 1);

    Field y = y0;
    const auto ly_of = [&](const Field& f) {
        if (!on_lap) return f.values;
        return apply_laplacian(f).values;
    };
    ly_hist.push_back(ly_of(y));
    traj.snapshots.push_back({y, Field(grid)});  // g(0) = 0

    const auto source_at = [&](int n, std::vector<double>& out) {
        const Field w = indicator_weights(support, tg.time(n), grid);
        const Field& uv = u.at(n);
        for (int i = 0; i < nx; ++i) out[static_cast<std::size_t>(i)] = w[i] * uv[i];
    };

    std::vector<double> g_n(static_cast<std::size_t>(nx), 0.0);
    std::vector<double> g_known(static_cast<std::size_t>(nx));
    std::vector<double> rhs(static_cast<std::size_t>(nx));
    std::vector<double> f_lo(static_cast<std::size_t>(nx)), f_hi(static_cast<std::size_t>(nx));
    source_at(0, f_hi);

    for (int n = 0; n < N; ++n) {
        std::swap(f_lo, f_hi);
        source_at(n + 1, f_hi);

        // g_{n+1}^known = dt [ 1/2 M(t_{n+1}) Ly_0 + sum_{j=1..n} M(t_{n+1-j}) Ly_j ]
        std::fill(g_known.begin(), g_known.end(), 0.0);
        for (int j = 0; j <= n; ++j) {
            const double wq = (j == 0) ? 0.5 : 1.0;
            const double mv = wq * kv[static_cast<std::size_t>(n + 1 - j)];
            if (mv == 0.0) continue;
            const auto& ly = ly_hist[static_cast<std::size_t>(j)];
            for (int i = 0; i < nx; ++i) g_known[static_cast<std::size_t>(i)] += mv * ly[i];
        }
        for (int i = 0; i < nx; ++i) g_known[static_cast<std::size_t>(i)] *= tg.dt;

        plus.matvec(y.values, rhs);
        for (int i = 0; i < nx; ++i)
            rhs[static_cast<std::size_t>(i)] +=
                0.5 * tg.dt *
                (sigma * (g_n[static_cast<std::size_t>(i)] + g_known[static_cast<std::size_t>(i)]) +
                 f_lo[static_cast<std::size_t>(i)] + f_hi[static_cast<std::size_t>(i)]);
        lu.solve_inplace(rhs);
        y.values = rhs;
        detail::check_finite(y.values, n + 1);

        ly_hist.push_back(ly_of(y));
        const auto& ly_new = ly_hist.back();
        for (int i = 0; i < nx; ++i)
            g_n[static_cast<std::size_t>(i)] =
                g_known[static_cast<std::size_t>(i)] + 0.5 * tg.dt * kv[0] * ly_new[i];

        Field z1(grid, g_n);
        traj.snapshots.push_back({y, std::move(z1)});
    }
    return traj;
}

// The memory integral recomputed from a trajectory's y history by
// trapezoidal quadrature, independent of any cascade state.
inline Field memory_quadrature_field(const Trajectory& traj, const Kernel& kernel,
                                     MemoryPlacement placement, double t) {
    const int n = traj.index_of(t);
    const SpatialGrid& grid = traj.grid;
    Field q(grid);
    if (n == 0) return q;
    const double dt = traj.time_grid.dt;
    const int y_idx = 0;
    for (int j = 0; j <= n; ++j) {
        const double wq = (j == 0 || j == n) ? 0.5 : 1.0;
        const double mv = wq * eval_kernel(kernel, traj.time_grid.time(n - j));
        if (mv == 0.0) continue;
        const Field& yj = traj.field(j, y_idx);
        if (placement == MemoryPlacement::OnLaplacian) {
            const Field ly = apply_laplacian(yj);
            for (int i = 0; i < grid.n_interior; ++i) q[i] += mv * ly[i];
        } else {
            for (int i = 0; i < grid.n_interior; ++i) q[i] += mv * yj[i];
        }
    }
    for (int i = 0; i < grid.n_interior; ++i) q[i] *= dt;
    return q;
}

// Norm of the recomputed memory integral at time t.
inline double memory_residual(const Trajectory& traj, const Kernel& kernel,
                              MemoryPlacement placement, double t) {
    return norm(memory_quadrature_field(traj, kernel, placement, t));
}

}  // namespace memheat
