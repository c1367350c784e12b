// Command-line driver for the traffic mean-field game solver.
//
// Subcommands:
//   solve        backward-forward solve, writes an artifact directory
//   particles    replay stored feedback on particle ensembles
//   hydro        recompute hydrodynamic marginals from stored densities
//   check-cfl    report the admissible time step for a configuration
//   print-config print the effective configuration

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tmfg/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"robust mean-field traffic game solver"};
    app.require_subcommand(1);

    // solve
    std::string solve_config, solve_out;
    tmfg::SolveOverrides ov;
    int ov_iters = -1, ov_stride = -1;
    auto* solve = app.add_subcommand("solve", "run the backward-forward solve");
    solve->add_option("--config", solve_config, "configuration file")->required();
    solve->add_option("--out", solve_out, "artifact output directory")->required();
    solve->add_option("--iters", ov_iters, "override n_iters");
    solve->add_option("--stride", ov_stride, "override checkpoint_stride");
    solve->add_option("--relax", ov.relaxation, "Picard damping factor (default 1 = off)");
    solve->add_flag("--recompute-controls", ov.recompute_controls,
                    "rebuild feedback from value snapshots instead of storing controls densely");
    solve->add_flag("--log-all-iters", ov.log_after_stagnation,
                    "keep iterating and logging after stagnation");

    // particles
    std::string part_config, part_artifacts, w_mode = "star";
    std::vector<int> n_sweep = {100, 1000, 10000};
    std::optional<std::uint64_t> part_seed;
    std::optional<double> part_tau;
    int traj_stride = 0;
    auto* particles = app.add_subcommand("particles", "validate against particle simulation");
    particles->add_option("--config", part_config, "configuration file")->required();
    particles->add_option("--artifacts", part_artifacts, "solve artifact directory")->required();
    particles->add_option("--n-sweep", n_sweep, "ensemble sizes")->delimiter(',');
    particles->add_option("--seed", part_seed, "master RNG seed (default: config seed)");
    particles->add_option("--tau-p", part_tau, "particle time step (default: PDE tau)");
    particles->add_option("--w-mode", w_mode, "disturbance mode: star|zero|random")
        ->check(CLI::IsMember({"star", "zero", "random"}));
    particles->add_option("--traj-stride", traj_stride,
                          "dump particle trajectories every N steps (0 = off)");

    // hydro
    std::string hydro_artifacts;
    auto* hydro = app.add_subcommand("hydro", "recompute hydrodynamic marginals");
    hydro->add_option("--artifacts", hydro_artifacts, "solve artifact directory")->required();

    // check-cfl
    std::string cfl_config;
    auto* cfl = app.add_subcommand("check-cfl", "report the admissible time step");
    cfl->add_option("--config", cfl_config, "configuration file")->required();

    // print-config
    std::optional<std::string> print_path;
    auto* print = app.add_subcommand("print-config", "print the effective configuration");
    print->add_option("--config", print_path, "configuration file (defaults when omitted)");

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed()) {
        if (ov_iters > 0) ov.n_iters = ov_iters;
        if (ov_stride > 0) ov.stride = ov_stride;
        return tmfg::run_solve(solve_config, solve_out, ov);
    }
    if (particles->parsed()) {
        tmfg::ParticleRunOptions opt;
        opt.n_sweep = n_sweep;
        opt.seed = part_seed;
        opt.tau_p = part_tau;
        opt.traj_stride = traj_stride;
        if (w_mode == "zero") opt.mode = tmfg::DisturbanceMode::Zero;
        else if (w_mode == "random") opt.mode = tmfg::DisturbanceMode::UniformRandom;
        return tmfg::run_particles(part_config, part_artifacts, opt);
    }
    if (hydro->parsed()) return tmfg::run_hydro(hydro_artifacts);
    if (cfl->parsed()) return tmfg::run_check_cfl(cfl_config);
    if (print->parsed()) return tmfg::run_print_config(print_path);
    return tmfg::exit_code::generic;
}
