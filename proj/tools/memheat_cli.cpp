// memheat command-line driver.
//
// Subcommands:
//   simulate <config>   free/controlled evolution per the config's task
//   control  <config>   penalized null-control solve
//   sweep    <config>   epsilon sweep
//   check    <config>   validation + geometry flags only, no computation
//   report   <dir>      tabulate summaries side by side
//
// simulate/control/sweep all execute the config file; the subcommand must
// match the config's task.type so a config never silently runs a different
// experiment than its name suggests.
//
// Exit codes: 0 success, 2 configuration/validation error, 3 numerical
// failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "memheat/memheat.hpp"

namespace {

std::filesystem::path output_root() {
    if (const char* env = std::getenv("MEMHEAT_OUTPUT_ROOT"); env && *env)
        return std::filesystem::path(env);
    return ".";
}

int run_task(const std::string& config_path, const std::string& expected_task) {
    memheat::RunOptions options;
    options.output_root = output_root();
    // Validate before running so a task mismatch is reported as a config error.
    const nlohmann::json checked = memheat::check(config_path);
    const std::string task = checked["config"]["task"]["type"].get<std::string>();
    if (task != expected_task)
        throw memheat::config_error("task.type is '" + task + "' but the '" + expected_task +
                                    "' subcommand was invoked");
    const memheat::RunResult result = memheat::run(config_path, options);
    std::cout << "wrote " << result.output_dir.string() << "\n";
    const auto& res = result.summary["results"];
    std::cout << "coverage=" << result.summary["geometry"]["coverage"]
              << " split=" << result.summary["geometry"]["split"];
    if (res.contains("residual_y"))
        std::cout << " residual_y=" << res["residual_y"] << " residual_z1=" << res["residual_z1"];
    if (res.contains("energy")) std::cout << " energy=" << res["energy"];
    std::cout << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"memheat: 1D heat equations with memory kernels, cascade reductions, "
                 "and penalized null-control experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string results_dir;

    auto* sim = app.add_subcommand("simulate", "run a simulate-task config");
    sim->add_option("config", config_path, "experiment config (JSON)")->required();

    auto* ctl = app.add_subcommand("control", "run a control-task config");
    ctl->add_option("config", config_path, "experiment config (JSON)")->required();

    auto* swp = app.add_subcommand("sweep", "run a sweep-task config");
    swp->add_option("config", config_path, "experiment config (JSON)")->required();

    auto* chk = app.add_subcommand("check", "validate a config and print geometry flags");
    chk->add_option("config", config_path, "experiment config (JSON)")->required();

    auto* rep = app.add_subcommand("report", "tabulate summaries under a results directory");
    rep->add_option("dir", results_dir, "directory containing run outputs")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) return run_task(config_path, "simulate");
        if (ctl->parsed()) return run_task(config_path, "control");
        if (swp->parsed()) return run_task(config_path, "sweep");
        if (chk->parsed()) {
            std::cout << memheat::check(config_path).dump(2) << "\n";
            return 0;
        }
        if (rep->parsed()) {
            std::cout << memheat::report(results_dir);
            return 0;
        }
    } catch (const memheat::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const memheat::usage_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const memheat::numeric_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
