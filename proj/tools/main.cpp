#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "biopepad/cli.hpp"
#include "biopepad/version.hpp"

namespace {

biopepad::CapacityMode parse_capacity(const std::string& s) {
    return s == "literal" ? biopepad::CapacityMode::Literal : biopepad::CapacityMode::Strict;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace biopepad;

    CLI::App app{"Bio-PEPAd modeling toolkit: parse models with per-action delays, explore the "
                 "stochastic transition system, run delay stochastic simulations and derive or "
                 "integrate the equivalent delay differential equations."};
    app.set_version_flag("--version", std::string(kToolName) + " " + std::string(kToolVersion));
    app.require_subcommand(1);

    // check
    cli::CheckOptions check;
    auto* check_cmd = app.add_subcommand("check", "Parse and validate a model file");
    check_cmd->add_option("model", check.model_path, "model file (.biopepad)")->required();

    // explore
    cli::ExploreOptions explore;
    std::string explore_capacity = "strict";
    std::string explore_out;
    auto* explore_cmd =
        app.add_subcommand("explore", "Build the stochastic labelled transition system");
    explore_cmd->add_option("model", explore.model_path, "model file")->required();
    explore_cmd->add_option("--format", explore.format, "output format: dot or json")
        ->check(CLI::IsMember({"dot", "json"}));
    explore_cmd->add_option("--max-states", explore.max_states, "state limit before truncation");
    explore_cmd->add_option("--max-pending", explore.max_pending,
                            "per-species pending-instance limit before truncation");
    explore_cmd->add_option("--capacity", explore_capacity, "product capacity rule")
        ->check(CLI::IsMember({"strict", "literal"}));
    explore_cmd->add_option("--out", explore_out, "output file");

    // simulate
    cli::SimulateOptions simulate;
    std::string simulate_capacity = "strict";
    std::string simulate_out;
    double simulate_grid = 0.0;
    auto* simulate_cmd = app.add_subcommand("simulate", "Run delay stochastic simulations");
    simulate_cmd->add_option("model", simulate.model_path, "model file")->required();
    simulate_cmd->add_option("--t-end", simulate.t_end, "simulation horizon")->required();
    simulate_cmd->add_option("--seed", simulate.seed, "random seed (default 1)");
    simulate_cmd->add_option("--runs", simulate.runs, "number of independent runs");
    auto* grid_opt = simulate_cmd->add_option("--grid", simulate_grid,
                                              "sampling grid step (required for ensembles)");
    simulate_cmd->add_option("--jobs", simulate.jobs, "worker threads for ensembles (0 = auto)");
    simulate_cmd->add_option("--capacity", simulate_capacity, "product capacity rule")
        ->check(CLI::IsMember({"strict", "literal"}));
    simulate_cmd->add_option("--out", simulate_out, "output CSV file");

    // dde
    cli::DdeOptions dde;
    std::string dde_out;
    auto* dde_cmd =
        app.add_subcommand("dde", "Derive the delay differential equations; optionally solve them");
    dde_cmd->add_option("model", dde.model_path, "model file")->required();
    auto* solve_flag = dde_cmd->add_flag("--solve", "integrate and write a solution CSV");
    auto* export_flag =
        dde_cmd->add_flag("--export-only", "only print/save the equations (default)");
    solve_flag->excludes(export_flag);
    dde_cmd->add_option("--t-end", dde.t_end, "integration horizon (with --solve)");
    dde_cmd->add_option("--step", dde.step, "integration step (with --solve)");
    dde_cmd->add_option("--format", dde.format, "equation format: text or json")
        ->check(CLI::IsMember({"text", "json"}));
    dde_cmd->add_option("--out", dde_out, "equation output file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kExitModelError;
    }

    if (check_cmd->parsed()) return cli::cmd_check(check, std::cout, std::cerr);
    if (explore_cmd->parsed()) {
        explore.capacity = parse_capacity(explore_capacity);
        if (!explore_out.empty()) explore.out_path = explore_out;
        return cli::cmd_explore(explore, std::cout, std::cerr);
    }
    if (simulate_cmd->parsed()) {
        simulate.capacity = parse_capacity(simulate_capacity);
        if (!simulate_out.empty()) simulate.out_path = simulate_out;
        if (grid_opt->count() > 0) simulate.grid_dt = simulate_grid;
        return cli::cmd_simulate(simulate, std::cout, std::cerr);
    }
    if (dde_cmd->parsed()) {
        dde.solve = solve_flag->count() > 0;
        if (!dde_out.empty()) dde.out_path = dde_out;
        return cli::cmd_dde(dde, std::cout, std::cerr);
    }
    return cli::kExitModelError;
}
