#pragma once

// Experiment execution and persistence. One config produces one output
// directory holding summary.json (config echo, geometry flags, results),
// trajectory.csv (t, x, y, z1..zm; strided, terminal snapshot always at
// full resolution) and, for sweep tasks, cost_curve.csv. CSV floats are
// written with 17 significant digits through std::to_chars, so identical
// runs produce bit-identical artifacts.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "memheat/config.hpp"
#include "memheat/control.hpp"
#include "memheat/errors.hpp"
#include "memheat/simulate.hpp"

namespace memheat {

namespace io_detail {

inline std::string format_float(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw numeric_error("cannot open " + path.string() + " for writing");
    os << content;
    if (!os) throw numeric_error("failed writing " + path.string());
}

}  // namespace io_detail

struct RunOptions {
    // Relative output directories resolve against this root (the CLI wires
    // it to MEMHEAT_OUTPUT_ROOT, defaulting to the working directory).
    std::filesystem::path output_root = ".";
    bool quiet = false;
};

struct RunResult {
    std::filesystem::path output_dir;
    nlohmann::json summary;
};

namespace run_detail {

inline void write_snapshot_rows(std::ostringstream& os, const Trajectory& traj, int n) {
    const auto& snap = traj.state(n);
    const std::string t = io_detail::format_float(traj.time_grid.time(n));
    for (int i = 0; i < traj.grid.n_interior; ++i) {
        os << t << ',' << io_detail::format_float(traj.grid.node(i));
        for (const auto& f : snap) os << ',' << io_detail::format_float(f[i]);
        os << '\n';
    }
}

inline std::string trajectory_csv(const Trajectory& traj, int stride) {
    std::ostringstream os;
    os << "t,x";
    for (const auto& name : traj.field_names) os << ',' << name;
    os << '\n';
    const int N = traj.time_grid.n_steps;
    int last_written = -1;
    for (int n = 0; n <= N; n += stride) {
        write_snapshot_rows(os, traj, n);
        last_written = n;
    }
    // Full-resolution terminal snapshot regardless of stride.
    if (last_written != N) write_snapshot_rows(os, traj, N);
    return os.str();
}

}  // namespace run_detail

inline nlohmann::json geometry_flags(const ValidatedExperiment& v) {
    const std::vector<double> times = v.time_grid.times();
    const CoverageReport cov = check_coverage(v.support, v.grid, times);
    const bool split = check_split(v.support, v.grid, times);
    nlohmann::json g;
    g["coverage"] = cov.covered;
    g["uncovered_count"] = cov.uncovered.size();
    g["split"] = split;
    g["support_static"] = v.support.is_static();
    // One-cell-per-step resolution guard for the discrete coverage check.
    g["support_resolved"] = v.support.max_speed() * v.time_grid.dt <= v.grid.spacing;
    return g;
}

inline RunResult run(const std::filesystem::path& config_path, const RunOptions& options = {}) {
    nlohmann::json cfg_json;
    {
        std::ifstream is(config_path);
        if (!is) throw config_error("cannot read config file " + config_path.string());
        try {
            is >> cfg_json;
        } catch (const nlohmann::json::exception& e) {
            throw config_error("config is not valid JSON: " + std::string(e.what()));
        }
    }
    const ExperimentConfig cfg = parse_config(cfg_json);
    const ValidatedExperiment v = validate_experiment(cfg);

    std::filesystem::path out_dir(cfg.output.directory);
    if (out_dir.is_relative()) out_dir = options.output_root / out_dir;
    std::filesystem::create_directories(out_dir);

    const auto t_start = std::chrono::steady_clock::now();
    nlohmann::json summary;
    summary["config"] = config_to_json(cfg);
    summary["geometry"] = geometry_flags(v);
    if (!summary["geometry"]["support_resolved"].get<bool>() && !options.quiet)
        std::cerr << "warning: support moves more than one cell per time step; "
                     "coverage is checked on the discrete time grid only\n";

    nlohmann::json results;
    results["task"] = cfg.task.type;

    if (cfg.task.type == "simulate") {
        const Trajectory traj = simulate_free(v.system, v.y0, v.time_grid);
        const auto& fin = traj.final_state();
        results["residual_y"] = norm(fin[static_cast<std::size_t>(v.system.y_index)]);
        results["residual_z1"] = norm(fin[static_cast<std::size_t>(v.system.memory_index)]);
        results["energy"] = 0.0;
        results["iterations"] = 0;
        io_detail::write_file(out_dir / "trajectory.csv",
                              run_detail::trajectory_csv(traj, cfg.output.stride));
    } else if (cfg.task.type == "control") {
        ControlProblem p{v.system, v.y0, v.time_grid, cfg.task.epsilon, cfg.penalize_all_states};
        const PenalizedSolution sol = solve_penalized(p, cfg.solver.tol, cfg.solver.max_iter);
        results["epsilon"] = cfg.task.epsilon;
        results["cost"] = sol.cost;
        results["energy"] = sol.energy;
        results["residual_y"] = sol.residual_y;
        results["residual_z1"] = sol.residual_z1;
        results["iterations"] = sol.iterations;
        results["gradient_norm"] = sol.gradient_norm;
        results["converged"] = sol.converged;
        const Trajectory traj = simulate(v.system, sol.control, v.y0, v.time_grid);
        io_detail::write_file(out_dir / "trajectory.csv",
                              run_detail::trajectory_csv(traj, cfg.output.stride));
    } else {  // sweep
        ControlProblem p{v.system, v.y0, v.time_grid, cfg.task.epsilons.front(),
                         cfg.penalize_all_states};
        const SweepCurve curve =
            epsilon_sweep(p, cfg.task.epsilons, cfg.solver.tol, cfg.solver.max_iter);
        std::ostringstream csv;
        csv << "epsilon,energy,residual_y,residual_z1,iterations,converged\n";
        nlohmann::json curve_json = nlohmann::json::array();
        for (const auto& pt : curve.points) {
            csv << io_detail::format_float(pt.epsilon) << ','
                << io_detail::format_float(pt.energy) << ','
                << io_detail::format_float(pt.residual_y) << ','
                << io_detail::format_float(pt.residual_z1) << ',' << pt.iterations << ','
                << (pt.converged ? 1 : 0) << '\n';
            curve_json.push_back({{"epsilon", pt.epsilon},
                                  {"energy", pt.energy},
                                  {"residual_y", pt.residual_y},
                                  {"residual_z1", pt.residual_z1},
                                  {"iterations", pt.iterations},
                                  {"converged", pt.converged},
                                  {"cost", pt.cost},
                                  {"gradient_norm", pt.gradient_norm}});
        }
        io_detail::write_file(out_dir / "cost_curve.csv", csv.str());
        results["curve"] = curve_json;
        results["log_energy_slope"] = curve.log_energy_slope;
        const auto& last = curve.points.back();
        results["energy"] = last.energy;
        results["residual_y"] = last.residual_y;
        results["residual_z1"] = last.residual_z1;
        results["iterations"] = last.iterations;
        results["converged"] = last.converged;
        const Trajectory traj = simulate(v.system, curve.final_control, v.y0, v.time_grid);
        io_detail::write_file(out_dir / "trajectory.csv",
                              run_detail::trajectory_csv(traj, cfg.output.stride));
    }

    const auto t_end = std::chrono::steady_clock::now();
    summary["results"] = results;
    summary["wall_time_seconds"] =
        std::chrono::duration_cast<std::chrono::duration<double>>(t_end - t_start).count();
    io_detail::write_file(out_dir / "summary.json", summary.dump(2) + "\n");

    return RunResult{out_dir, summary};
}

// Validation + geometry flags only; no computation.
inline nlohmann::json check(const std::filesystem::path& config_path) {
    nlohmann::json cfg_json;
    {
        std::ifstream is(config_path);
        if (!is) throw config_error("cannot read config file " + config_path.string());
        try {
            is >> cfg_json;
        } catch (const nlohmann::json::exception& e) {
            throw config_error("config is not valid JSON: " + std::string(e.what()));
        }
    }
    const ExperimentConfig cfg = parse_config(cfg_json);
    const ValidatedExperiment v = validate_experiment(cfg);
    nlohmann::json out;
    out["valid"] = true;
    out["config"] = config_to_json(cfg);
    out["geometry"] = geometry_flags(v);
    return out;
}

// Side-by-side table of all summary.json files under a results directory.
// Corrupted summaries are skipped with a warning. Returns the table; throws
// config_error when no valid summary exists.
inline std::string report(const std::filesystem::path& results_dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(results_dir))
        throw config_error("report: " + results_dir.string() + " is not a directory");

    struct Row {
        std::string name, kernel, support, coverage, split, energy, res_y, res_z1, slope;
    };
    std::vector<Row> rows;

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(results_dir))
        if (entry.is_regular_file() && entry.path().filename() == "summary.json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    for (const auto& path : files) {
        try {
            std::ifstream is(path);
            nlohmann::json s;
            is >> s;
            const auto& cfgk = s.at("config").at("kernel");
            std::string kern = cfgk.at("variant").get<std::string>();
            if (cfgk.contains("coeffs")) {
                kern += "[";
                const auto& cs = cfgk.at("coeffs");
                for (std::size_t i = 0; i < cs.size(); ++i)
                    kern += (i ? "," : "") + cs[i].dump();
                kern += "]";
            }
            if (cfgk.contains("rate") && cfgk.at("rate").get<double>() != 0.0)
                kern += "*e^" + cfgk.at("rate").dump() + "t";
            const auto& geo = s.at("geometry");
            const auto& res = s.at("results");
            Row r;
            r.name = fs::relative(path.parent_path(), results_dir).string();
            if (r.name == ".") r.name = path.parent_path().filename().string();
            r.kernel = kern;
            r.support = geo.at("support_static").get<bool>() ? "static" : "moving";
            r.coverage = geo.at("coverage").get<bool>() ? "yes" : "no";
            r.split = geo.at("split").get<bool>() ? "yes" : "no";
            const auto num = [](const nlohmann::json& x) {
                if (!x.is_number()) return std::string("-");
                std::ostringstream os;
                os.precision(4);
                os << std::scientific << x.get<double>();
                return os.str();
            };
            r.energy = res.contains("energy") ? num(res.at("energy")) : "-";
            r.res_y = res.contains("residual_y") ? num(res.at("residual_y")) : "-";
            r.res_z1 = res.contains("residual_z1") ? num(res.at("residual_z1")) : "-";
            r.slope = res.contains("log_energy_slope") ? num(res.at("log_energy_slope")) : "-";
            rows.push_back(std::move(r));
        } catch (const std::exception& e) {
            std::cerr << "warning: skipping " << path.string() << ": " << e.what() << "\n";
        }
    }
    if (rows.empty())
        throw config_error("report: no valid summary.json under " + results_dir.string());

    std::vector<std::string> header = {"run",      "kernel", "support",    "coverage", "split",
                                       "energy",   "res_y",  "res_z1",     "slope"};
    std::vector<std::size_t> width(header.size());
    const auto cells = [](const Row& r) {
        return std::vector<std::string>{r.name,  r.kernel, r.support, r.coverage, r.split,
                                        r.energy, r.res_y,  r.res_z1,  r.slope};
    };
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& r : rows) {
        const auto cs = cells(r);
        for (std::size_t c = 0; c < cs.size(); ++c) width[c] = std::max(width[c], cs[c].size());
    }
    std::ostringstream os;
    const auto emit = [&](const std::vector<std::string>& cs) {
        for (std::size_t c = 0; c < cs.size(); ++c) {
            os << cs[c] << std::string(width[c] - cs[c].size(), ' ');
            os << (c + 1 < cs.size() ? "  " : "");
        }
        os << '\n';
    };
    emit(header);
    for (const auto& r : rows) emit(cells(r));
    return os.str();
}

}  // namespace memheat
