#pragma once

// Experiment configuration: one JSON file describes one experiment and one
// output directory. Parsing is strict; every violation names the offending
// field. The normalized config (defaults filled in) is echoed into the run
// summary so results can be reproduced from the summary alone.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "memheat/errors.hpp"
#include "memheat/grid.hpp"
#include "memheat/kernel.hpp"
#include "memheat/support.hpp"
#include "memheat/system.hpp"
#include "memheat/time_grid.hpp"

namespace memheat {

struct InitialDataSpec {
    std::string profile = "eigenmode";  // eigenmode | gaussian | constant
    int mode = 1;                       // eigenmode index k
    double center = 0.5, width = 0.1;   // gaussian parameters
    double value = 1.0;                 // constant value
};

struct TaskSpec {
    std::string type = "simulate";  // simulate | control | sweep
    double epsilon = 1e-4;          // control task
    std::vector<double> epsilons;   // sweep task
};

struct SolverSpec {
    double tol = 1e-8;
    int max_iter = 500;
};

struct OutputSpec {
    std::string directory;  // resolved against the output root when relative
    int stride = 1;         // trajectory export stride in time steps
};

struct ExperimentConfig {
    double length = 1.0;
    int n_interior = 100;
    double horizon = 1.0;
    int n_steps = 100;
    Kernel kernel = Kernel::zero();
    std::optional<int> truncation;  // Taylor kernels: cascade truncation order
    MemoryPlacement placement = MemoryPlacement::OnLaplacian;
    double diffusivity = 1.0;
    bool allow_zero_diffusivity = false;
    std::vector<SupportBreakpoint> support_breakpoints;
    InitialDataSpec initial_data;
    TaskSpec task;
    SolverSpec solver;
    bool penalize_all_states = false;
    OutputSpec output;
};

namespace cfg_detail {

using nlohmann::json;

inline const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw config_error(path + " must be an object");
    auto it = j.find(key);
    if (it == j.end()) throw config_error(path + "." + key + " is required");
    return *it;
}

inline double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw config_error(path + " must be a number");
    return j.get<double>();
}

inline int as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw config_error(path + " must be an integer");
    return j.get<int>();
}

inline bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw config_error(path + " must be a boolean");
    return j.get<bool>();
}

inline std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw config_error(path + " must be a string");
    return j.get<std::string>();
}

inline std::vector<double> as_number_array(const json& j, const std::string& path) {
    if (!j.is_array()) throw config_error(path + " must be an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(as_number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

}  // namespace cfg_detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using namespace cfg_detail;
    if (!j.is_object()) throw config_error("config root must be a JSON object");
    ExperimentConfig cfg;

    {
        const json& dom = require(j, "domain", "config");
        cfg.length = as_number(require(dom, "length", "domain"), "domain.length");
        cfg.n_interior = as_int(require(dom, "n_interior", "domain"), "domain.n_interior");
    }
    {
        const json& tm = require(j, "time", "config");
        cfg.horizon = as_number(require(tm, "horizon", "time"), "time.horizon");
        cfg.n_steps = as_int(require(tm, "n_steps", "time"), "time.n_steps");
    }
    {
        const json& k = require(j, "kernel", "config");
        const std::string variant = as_string(require(k, "variant", "kernel"), "kernel.variant");
        if (variant == "zero") {
            cfg.kernel = Kernel::zero();
        } else if (variant == "exp_poly") {
            const double rate = k.contains("rate") ? as_number(k["rate"], "kernel.rate") : 0.0;
            cfg.kernel =
                Kernel::exp_poly(rate, as_number_array(require(k, "coeffs", "kernel"), "kernel.coeffs"));
        } else if (variant == "taylor") {
            cfg.kernel = Kernel::taylor(
                as_number_array(require(k, "coeffs", "kernel"), "kernel.coeffs"),
                as_number(require(k, "radius", "kernel"), "kernel.radius"));
            if (k.contains("truncation"))
                cfg.truncation = as_int(k["truncation"], "kernel.truncation");
        } else {
            throw config_error("kernel.variant must be one of zero|exp_poly|taylor, got '" +
                               variant + "'");
        }
    }
    {
        const std::string p = as_string(require(j, "placement", "config"), "placement");
        if (p == "on_laplacian")
            cfg.placement = MemoryPlacement::OnLaplacian;
        else if (p == "on_state")
            cfg.placement = MemoryPlacement::OnState;
        else
            throw config_error("placement must be on_laplacian|on_state, got '" + p + "'");
    }
    cfg.diffusivity = as_number(require(j, "diffusivity", "config"), "diffusivity");
    if (j.contains("allow_zero_diffusivity"))
        cfg.allow_zero_diffusivity = as_bool(j["allow_zero_diffusivity"], "allow_zero_diffusivity");
    {
        const json& sup = require(j, "support", "config");
        const json& bps = require(sup, "breakpoints", "support");
        if (!bps.is_array() || bps.empty())
            throw config_error("support.breakpoints must be a nonempty array");
        for (std::size_t i = 0; i < bps.size(); ++i) {
            const std::string at = "support.breakpoints[" + std::to_string(i) + "]";
            cfg.support_breakpoints.push_back(
                SupportBreakpoint{as_number(require(bps[i], "t", at), at + ".t"),
                                  as_number(require(bps[i], "left", at), at + ".left"),
                                  as_number(require(bps[i], "right", at), at + ".right")});
        }
    }
    {
        const json& init = require(j, "initial_data", "config");
        cfg.initial_data.profile =
            as_string(require(init, "profile", "initial_data"), "initial_data.profile");
        if (cfg.initial_data.profile == "eigenmode") {
            cfg.initial_data.mode =
                as_int(require(init, "mode", "initial_data"), "initial_data.mode");
            if (cfg.initial_data.mode < 1)
                throw config_error("initial_data.mode must be >= 1, got " +
                                   std::to_string(cfg.initial_data.mode));
        } else if (cfg.initial_data.profile == "gaussian") {
            cfg.initial_data.center =
                as_number(require(init, "center", "initial_data"), "initial_data.center");
            cfg.initial_data.width =
                as_number(require(init, "width", "initial_data"), "initial_data.width");
            if (!(cfg.initial_data.width > 0.0))
                throw config_error("initial_data.width must be positive");
        } else if (cfg.initial_data.profile == "constant") {
            cfg.initial_data.value =
                as_number(require(init, "value", "initial_data"), "initial_data.value");
        } else {
            throw config_error("initial_data.profile must be eigenmode|gaussian|constant, got '" +
                               cfg.initial_data.profile + "'");
        }
    }
    {
        const json& task = require(j, "task", "config");
        cfg.task.type = as_string(require(task, "type", "task"), "task.type");
        if (cfg.task.type == "simulate") {
        } else if (cfg.task.type == "control") {
            cfg.task.epsilon = as_number(require(task, "epsilon", "task"), "task.epsilon");
        } else if (cfg.task.type == "sweep") {
            cfg.task.epsilons =
                as_number_array(require(task, "epsilons", "task"), "task.epsilons");
        } else {
            throw config_error("task.type must be simulate|control|sweep, got '" + cfg.task.type +
                               "'");
        }
    }
    if (j.contains("solver")) {
        const json& s = j["solver"];
        if (s.contains("tol")) cfg.solver.tol = as_number(s["tol"], "solver.tol");
        if (s.contains("max_iter")) cfg.solver.max_iter = as_int(s["max_iter"], "solver.max_iter");
    }
    if (j.contains("penalize_all_states"))
        cfg.penalize_all_states = as_bool(j["penalize_all_states"], "penalize_all_states");
    {
        const json& out = require(j, "output", "config");
        cfg.output.directory =
            as_string(require(out, "directory", "output"), "output.directory");
        if (out.contains("stride")) {
            cfg.output.stride = as_int(out["stride"], "output.stride");
            if (cfg.output.stride < 1)
                throw config_error("output.stride must be >= 1, got " +
                                   std::to_string(cfg.output.stride));
        }
    }
    return cfg;
}

// Cross-field validation and construction of the run objects. Throws
// config_error naming the offending field.
struct ValidatedExperiment {
    ExperimentConfig config;
    SpatialGrid grid;
    TimeGrid time_grid;
    MovingSupport support;
    Kernel cascade_kernel;  // truncated when the input kernel is a Taylor list
    CoupledSystem system;
    Field y0;
};

inline Field make_initial_data(const InitialDataSpec& spec, const SpatialGrid& grid) {
    Field f(grid);
    for (int i = 0; i < grid.n_interior; ++i) {
        const double x = grid.node(i);
        if (spec.profile == "eigenmode")
            f[i] = std::sin(spec.mode * M_PI * x / grid.length);
        else if (spec.profile == "gaussian")
            f[i] = std::exp(-0.5 * (x - spec.center) * (x - spec.center) /
                            (spec.width * spec.width));
        else
            f[i] = spec.value;
    }
    return f;
}

inline ValidatedExperiment validate_experiment(const ExperimentConfig& cfg) {
    ValidatedExperiment v;
    v.config = cfg;
    v.grid = build_grid(cfg.length, cfg.n_interior);
    v.time_grid = build_time_grid(cfg.horizon, cfg.n_steps);
    v.support = make_support(cfg.support_breakpoints, cfg.length);
    // The schedule must cover the whole horizon.
    if (v.support.breakpoints.size() > 1) {
        if (v.support.breakpoints.front().t > 0.0)
            throw config_error("support.breakpoints[0].t must be 0, got " +
                               std::to_string(v.support.breakpoints.front().t));
        if (v.support.breakpoints.back().t < cfg.horizon)
            throw config_error("support.breakpoints: schedule ends at t=" +
                               std::to_string(v.support.breakpoints.back().t) +
                               " before time.horizon=" + std::to_string(cfg.horizon));
    }

    v.cascade_kernel = cfg.kernel;
    if (cfg.kernel.variant == Kernel::Variant::Taylor) {
        if (!cfg.truncation)
            throw config_error("kernel.truncation is required for taylor kernels");
        v.cascade_kernel = truncate(cfg.kernel, *cfg.truncation);
    }
    v.system = build_cascade(v.cascade_kernel, cfg.placement, cfg.diffusivity, v.grid, v.support,
                             cfg.horizon, BuildOptions{cfg.allow_zero_diffusivity});
    v.y0 = make_initial_data(cfg.initial_data, v.grid);
    return v;
}

// Normalized echo of a parsed config, defaults filled in.
inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["domain"] = {{"length", cfg.length}, {"n_interior", cfg.n_interior}};
    j["time"] = {{"horizon", cfg.horizon}, {"n_steps", cfg.n_steps}};
    switch (cfg.kernel.variant) {
        case Kernel::Variant::Zero:
            j["kernel"] = {{"variant", "zero"}};
            break;
        case Kernel::Variant::ExpPoly:
            j["kernel"] = {{"variant", "exp_poly"},
                           {"rate", cfg.kernel.rate},
                           {"coeffs", cfg.kernel.coeffs}};
            break;
        case Kernel::Variant::Taylor:
            j["kernel"] = {{"variant", "taylor"},
                           {"coeffs", cfg.kernel.coeffs},
                           {"radius", cfg.kernel.radius}};
            if (cfg.truncation) j["kernel"]["truncation"] = *cfg.truncation;
            break;
    }
    j["placement"] = to_string(cfg.placement);
    j["diffusivity"] = cfg.diffusivity;
    j["allow_zero_diffusivity"] = cfg.allow_zero_diffusivity;
    nlohmann::json bps = nlohmann::json::array();
    for (const auto& b : cfg.support_breakpoints)
        bps.push_back({{"t", b.t}, {"left", b.left}, {"right", b.right}});
    j["support"]["breakpoints"] = bps;
    if (cfg.initial_data.profile == "eigenmode")
        j["initial_data"] = {{"profile", "eigenmode"}, {"mode", cfg.initial_data.mode}};
    else if (cfg.initial_data.profile == "gaussian")
        j["initial_data"] = {{"profile", "gaussian"},
                             {"center", cfg.initial_data.center},
                             {"width", cfg.initial_data.width}};
    else
        j["initial_data"] = {{"profile", "constant"}, {"value", cfg.initial_data.value}};
    if (cfg.task.type == "simulate")
        j["task"] = {{"type", "simulate"}};
    else if (cfg.task.type == "control")
        j["task"] = {{"type", "control"}, {"epsilon", cfg.task.epsilon}};
    else
        j["task"] = {{"type", "sweep"}, {"epsilons", cfg.task.epsilons}};
    j["solver"] = {{"tol", cfg.solver.tol}, {"max_iter", cfg.solver.max_iter}};
    j["penalize_all_states"] = cfg.penalize_all_states;
    j["output"] = {{"directory", cfg.output.directory}, {"stride", cfg.output.stride}};
    return j;
}

}  // namespace memheat
