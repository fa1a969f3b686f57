#pragma once

// Penalized null control. For a coupled system with terminal targets
// (y(T) and the memory state z_1(T) by default) the objective is
//
//   J_eps(u) = 1/2 sum_n dt ||chi_{omega(t_n)} u(t_n)||^2
//            + 1/(2 eps) sum_{r in targets} ||x_r(T)||^2 .
//
// Everything is discretize-then-optimize: the gradient is the exact
// gradient of this discrete quadratic (backward sweep of the transposed
// step operators), and the minimizer is found by conjugate gradients on
// control space starting from u = 0 (or a warm start). Bounded control
// energy as eps -> 0 is numerical evidence of controllability; unbounded
// growth is evidence against it.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "memheat/errors.hpp"
#include "memheat/simulate.hpp"
#include "memheat/system.hpp"
#include "memheat/time_grid.hpp"

namespace memheat {

struct ControlProblem {
    CoupledSystem system;
    Field y0;
    TimeGrid time_grid;
    double epsilon = 1e-4;
    bool penalize_all_states = false;  // target all z_k(T), not just Eq.-style pair

    [[nodiscard]] std::vector<int> targets() const {
        return system.target_indices(penalize_all_states);
    }
};

struct PenalizedSolution {
    ControlField control;
    double cost = 0.0;    // J_eps at the returned control
    double energy = 0.0;  // 1/2 sum_n dt ||chi u||^2
    double residual_y = 0.0;
    double residual_z1 = 0.0;
    std::vector<double> target_residuals;  // aligned with ControlProblem::targets()
    int iterations = 0;
    double gradient_norm = 0.0;
    bool converged = false;
    std::vector<double> cost_history;  // J_eps per CG iteration, starting value first
};

namespace detail {

inline void validate_problem(const ControlProblem& p) {
    if (!(p.epsilon > 0.0))
        throw config_error("epsilon must be positive, got " + std::to_string(p.epsilon));
    if (!(p.y0.grid == p.system.grid))
        throw usage_error("control: y0 grid does not match the system");
}

inline double dot(const ControlField& a, const ControlField& b) {
    double s = 0.0;
    for (std::size_t n = 0; n < a.values.size(); ++n)
        for (int i = 0; i < a.values[n].size(); ++i) s += a.values[n][i] * b.values[n][i];
    return s;
}

inline void axpy(double alpha, const ControlField& x, ControlField& y) {
    for (std::size_t n = 0; n < y.values.size(); ++n)
        for (int i = 0; i < y.values[n].size(); ++i) y.values[n][i] += alpha * x.values[n][i];
}

// Shared machinery for objective/gradient/Hessian applications on one
// problem; owns the step engine so repeated calls reuse the factorization.
class PenalizedOperator {
public:
    explicit PenalizedOperator(const ControlProblem& p)
        : p_(p), engine_(p.system, p.time_grid, /*with_adjoint=*/true), targets_(p.targets()) {
        validate_problem(p);
    }

    [[nodiscard]] const StepEngine& engine() const { return engine_; }
    [[nodiscard]] const std::vector<int>& targets() const { return targets_; }

    [[nodiscard]] double control_energy(const ControlField& u) const {
        const TimeGrid& tg = p_.time_grid;
        const double h = p_.system.grid.spacing;
        double s = 0.0;
        for (int n = 0; n <= tg.n_steps; ++n) {
            const Field& w = engine_.weights(n);
            const Field& uv = u.at(n);
            for (int i = 0; i < uv.size(); ++i) {
                const double v = w[i] * uv[i];
                s += v * v;
            }
        }
        return 0.5 * tg.dt * h * s;
    }

    [[nodiscard]] std::vector<double> terminal_state(const ControlField* u, const Field& y0) const {
        return engine_.run_terminal(u, y0);
    }

    [[nodiscard]] std::vector<double> target_norms(const std::vector<double>& terminal) const {
        const int f = p_.system.n_fields;
        const int nx = p_.system.grid.n_interior;
        const double h = p_.system.grid.spacing;
        std::vector<double> out;
        out.reserve(targets_.size());
        for (const int r : targets_) {
            double s = 0.0;
            for (int i = 0; i < nx; ++i) {
                const double v = terminal[static_cast<std::size_t>(i * f + r)];
                s += v * v;
            }
            out.push_back(std::sqrt(h * s));
        }
        return out;
    }

    [[nodiscard]] double penalty_of(const std::vector<double>& target_residuals) const {
        double s = 0.0;
        for (const double r : target_residuals) s += r * r;
        return s / (2.0 * p_.epsilon);
    }

    [[nodiscard]] double objective(const ControlField& u) const {
        return control_energy(u) + penalty_of(target_norms(terminal_state(&u, p_.y0)));
    }

    // Exact gradient of the discrete objective with respect to the raw
    // control values u_i(t_n). Indicator-masked by construction.
    [[nodiscard]] ControlField gradient(const ControlField& u) const {
        ControlField g = adjoint_part(terminal_state(&u, p_.y0));
        add_energy_gradient(u, g);
        return g;
    }

    // Hessian application H v (the y0-independent, linear part of the
    // gradient), for conjugate gradients.
    [[nodiscard]] ControlField hessian_apply(const ControlField& v) const {
        Field zero(p_.system.grid);
        ControlField g = adjoint_part(terminal_state(&v, zero));
        add_energy_gradient(v, g);
        return g;
    }

    [[nodiscard]] double norm_y(const std::vector<double>& terminal) const {
        return field_norm(terminal, p_.system.y_index);
    }
    [[nodiscard]] double norm_memory(const std::vector<double>& terminal) const {
        return field_norm(terminal, p_.system.memory_index);
    }

private:
    [[nodiscard]] double field_norm(const std::vector<double>& terminal, int r) const {
        const int f = p_.system.n_fields;
        const int nx = p_.system.grid.n_interior;
        double s = 0.0;
        for (int i = 0; i < nx; ++i) {
            const double v = terminal[static_cast<std::size_t>(i * f + r)];
            s += v * v;
        }
        return std::sqrt(p_.system.grid.spacing * s);
    }

    [[nodiscard]] ControlField adjoint_part(const std::vector<double>& terminal) const {
        const int f = p_.system.n_fields;
        const int nx = p_.system.grid.n_interior;
        const double h = p_.system.grid.spacing;
        std::vector<double> seed(terminal.size(), 0.0);
        for (const int r : targets_)
            for (int i = 0; i < nx; ++i) {
                const std::size_t k = static_cast<std::size_t>(i * f + r);
                seed[k] = (h / p_.epsilon) * terminal[k];
            }
        return engine_.adjoint_control_gradient(std::move(seed));
    }

    void add_energy_gradient(const ControlField& u, ControlField& g) const {
        const TimeGrid& tg = p_.time_grid;
        const double h = p_.system.grid.spacing;
        for (int n = 0; n <= tg.n_steps; ++n) {
            const Field& w = engine_.weights(n);
            const Field& uv = u.at(n);
            Field& gv = g.at(n);
            for (int i = 0; i < uv.size(); ++i) gv[i] += tg.dt * h * w[i] * w[i] * uv[i];
        }
    }

    ControlProblem p_;
    StepEngine engine_;
    std::vector<int> targets_;
};

}  // namespace detail

inline double objective(const ControlProblem& p, const ControlField& u) {
    return detail::PenalizedOperator(p).objective(u);
}

inline ControlField gradient(const ControlProblem& p, const ControlField& u) {
    return detail::PenalizedOperator(p).gradient(u);
}

namespace detail {

inline PenalizedSolution solve_penalized_with(const PenalizedOperator& op,
                                              const ControlProblem& p, double tol, int max_iter,
                                              const ControlField* warm_start) {
    if (!(tol > 0.0)) throw config_error("solver.tol must be positive, got " + std::to_string(tol));
    if (max_iter < 0)
        throw config_error("solver.max_iter must be >= 0, got " + std::to_string(max_iter));

    ControlField u = warm_start ? *warm_start : ControlField(p.time_grid, p.system.grid);

    PenalizedSolution sol;
    double cost = op.objective(u);
    sol.cost_history.push_back(cost);

    // CG on the quadratic: residual r = -grad J(u).
    ControlField r = op.gradient(u);
    for (auto& fld : r.values)
        for (auto& v : fld.values) v = -v;
    double rr = dot(r, r);
    const double r0 = std::sqrt(rr);
    const double stop = tol * r0;

    ControlField pdir = r;
    int it = 0;
    bool converged = std::sqrt(rr) <= stop || r0 == 0.0;
    while (!converged && it < max_iter) {
        const ControlField hp = op.hessian_apply(pdir);
        const double php = dot(pdir, hp);
        if (!(php > 0.0)) break;  // operator is PSD; a null direction means stagnation
        const double alpha = rr / php;
        axpy(alpha, pdir, u);
        axpy(-alpha, hp, r);
        // Exact-line-search decrease of the quadratic along pdir.
        cost -= 0.5 * alpha * rr;
        sol.cost_history.push_back(cost);
        const double rr_new = dot(r, r);
        ++it;
        if (std::sqrt(rr_new) <= stop) {
            rr = rr_new;
            converged = true;
            break;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t n = 0; n < pdir.values.size(); ++n)
            for (int i = 0; i < pdir.values[n].size(); ++i)
                pdir.values[n][i] = r.values[n][i] + beta * pdir.values[n][i];
    }

    const std::vector<double> terminal = op.terminal_state(&u, p.y0);
    sol.energy = op.control_energy(u);
    sol.target_residuals = op.target_norms(terminal);
    sol.residual_y = op.norm_y(terminal);
    sol.residual_z1 = op.norm_memory(terminal);
    sol.cost = sol.energy + op.penalty_of(sol.target_residuals);
    sol.iterations = it;
    sol.gradient_norm = std::sqrt(rr);
    sol.converged = converged;
    sol.control = std::move(u);
    return sol;
}

}  // namespace detail

// Conjugate gradients on J_eps from u = 0. Non-convergence within max_iter
// is reported through the `converged` flag, not an exception: slow
// convergence is itself a controllability signal.
inline PenalizedSolution solve_penalized(const ControlProblem& p, double tol = 1e-8,
                                         int max_iter = 500) {
    detail::PenalizedOperator op(p);
    return detail::solve_penalized_with(op, p, tol, max_iter, nullptr);
}

struct SweepPoint {
    double epsilon = 0.0;
    double energy = 0.0;
    double residual_y = 0.0;
    double residual_z1 = 0.0;
    int iterations = 0;
    bool converged = false;
    double cost = 0.0;
    double gradient_norm = 0.0;
};

struct SweepCurve {
    std::vector<SweepPoint> points;
    // Least-squares slope of log(energy) against log(epsilon); near zero
    // means bounded energy as eps -> 0, strongly negative means blow-up.
    // NaN when fewer than two points have positive energy.
    double log_energy_slope = std::numeric_limits<double>::quiet_NaN();
    // Control of the last (smallest-eps) solve, for trajectory export.
    ControlField final_control;
};

// Solves the penalized problem for each eps in a decreasing list, warm
// starting every solve from the previous minimizer.
inline SweepCurve epsilon_sweep(const ControlProblem& problem_template,
                                const std::vector<double>& epsilons, double tol = 1e-8,
                                int max_iter = 500) {
    if (epsilons.empty()) throw config_error("task.epsilons must be nonempty");
    for (std::size_t k = 0; k < epsilons.size(); ++k) {
        if (!(epsilons[k] > 0.0))
            throw config_error("task.epsilons[" + std::to_string(k) + "] must be positive");
        if (k > 0 && !(epsilons[k] < epsilons[k - 1]))
            throw config_error("task.epsilons must be strictly decreasing at index " +
                               std::to_string(k));
    }

    SweepCurve curve;
    std::optional<ControlField> warm;
    for (const double eps : epsilons) {
        ControlProblem p = problem_template;
        p.epsilon = eps;
        detail::PenalizedOperator op(p);
        const PenalizedSolution sol =
            detail::solve_penalized_with(op, p, tol, max_iter, warm ? &*warm : nullptr);
        curve.points.push_back(SweepPoint{eps, sol.energy, sol.residual_y, sol.residual_z1,
                                          sol.iterations, sol.converged, sol.cost,
                                          sol.gradient_norm});
        warm = sol.control;
    }
    if (warm) curve.final_control = std::move(*warm);

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int m = 0;
    for (const auto& pt : curve.points) {
        if (!(pt.energy > 0.0)) continue;
        const double x = std::log(pt.epsilon), y = std::log(pt.energy);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m >= 2) {
        const double denom = m * sxx - sx * sx;
        if (denom != 0.0) curve.log_energy_slope = (m * sxy - sx * sy) / denom;
    }
    return curve;
}

}  // namespace memheat
