#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tmfg/field_io.hpp"
#include "tmfg/fixed_point.hpp"
#include "tmfg/hydro.hpp"
#include "tmfg/params.hpp"
#include "tmfg/particles.hpp"

namespace tmfg {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int generic = 1;
inline constexpr int bad_config = 2;
inline constexpr int cfl_violation = 3;
inline constexpr int solver_nan = 4;
inline constexpr int no_convergence = 5;
inline constexpr int bad_artifacts = 6;
}  // namespace exit_code

namespace detail {

inline std::string theta_name(const std::string& kind, int theta) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "fields/%s_%06d.bin", kind.c_str(), theta);
    return buf;
}

}  // namespace detail

inline void write_manifest(const std::filesystem::path& path, const RunConfig& cfg,
                           const PhaseGrid& g, const TimeGrid& tg) {
    std::ofstream out(path);
    if (!out) throw ArtifactError("cannot open '" + path.string() + "' for writing");
    out << "# run manifest (valid as a config file)\n"
        << "# version " << kVersion << "\n"
        << "# grid: h = " << format_g17(g.h) << " m, k = " << format_g17(g.k)
        << " m/s, N_T = " << tg.n_t << "\n";
    write_config(cfg, out);
}

inline void write_iteration_log(const std::filesystem::path& path, const IterationLog& log) {
    std::ofstream out(path);
    if (!out) throw ArtifactError("cannot open '" + path.string() + "' for writing");
    out << "n,delta2,log10_delta2,D,stopped\n";
    for (const auto& r : log.iterations)
        out << r.n << ',' << format_g17(r.delta2) << ',' << format_g17(std::log10(r.delta2))
            << ',' << format_g17(r.cumulative) << ',' << (r.stopped_here ? 1 : 0) << "\n";
}

inline void write_hydro_series(const std::filesystem::path& path,
                               const TrajectoryStore<DensityField>& rho_traj,
                               const PhaseGrid& g) {
    std::ofstream out(path);
    if (!out) throw ArtifactError("cannot open '" + path.string() + "' for writing");
    out << "time,xi,kappa,momentum,bulk_velocity\n";
    for (std::size_t s = 0; s < rho_traj.size(); ++s) {
        const HydroFields hf = marginals(rho_traj.snapshot(s), g);
        for (int i = 0; i < g.nx; ++i) {
            out << format_g17(rho_traj.time(s)) << ',' << format_g17(g.xi[i]) << ','
                << format_g17(hf.kappa[i]) << ',' << format_g17(hf.momentum[i]) << ',';
            if (hf.defined(i)) out << format_g17(hf.bulk_velocity[i]);
            out << "\n";
        }
    }
}

struct SolveOverrides {
    std::optional<int> n_iters;
    std::optional<int> stride;
    double relaxation = 1.0;
    bool recompute_controls = false;
    bool log_after_stagnation = false;
};

// Full solve pipeline: config -> CFL gate -> backward-forward iteration ->
// artifacts (manifest, iteration log, field checkpoints, hydro series).
inline int run_solve(const std::string& config_path, const std::string& out_dir,
                     const SolveOverrides& ov = {}, std::ostream& msg = std::cerr) {
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
        if (ov.n_iters) cfg.n_iters = *ov.n_iters;
        if (ov.stride) cfg.checkpoint_stride = *ov.stride;
        validate(cfg);
    } catch (const ConfigError& e) {
        msg << "config error: " << e.what() << "\n";
        return exit_code::bad_config;
    }

    const PhaseGrid grid = PhaseGrid::make(cfg.nx, cfg.model);
    const TimeGrid tg = TimeGrid::make(cfg.model.horizon, cfg.tau, cfg.checkpoint_stride);
    const CflReport cfl = check_cfl(grid, cfg.tau, cfg.model);
    if (!cfl.ok) {
        msg << "CFL violation: tau = " << format_g17(cfl.tau)
            << " exceeds tau_max = " << format_g17(cfl.tau_max) << "\n";
        return exit_code::cfl_violation;
    }

    namespace fs = std::filesystem;
    const fs::path out(out_dir);
    fs::create_directories(out / "fields");
    write_manifest(out / "manifest.cfg", cfg, grid, tg);

    Algorithm1Result res;
    try {
        const DensityField rho0 = sample_initial_density(InitialDensity{}, grid);
        FixedPointOptions opt;
        opt.relaxation = ov.relaxation;
        opt.recompute_controls_from_value = ov.recompute_controls;
        opt.log_after_stagnation = ov.log_after_stagnation;
        res = run_algorithm1(rho0, grid, tg, cfg.model, CongestionKernel{}, cfg.n_iters, opt);
    } catch (const SolverError& e) {
        msg << "solver failure: " << e.what() << "\n";
        return exit_code::solver_nan;
    }

    write_iteration_log(out / "iterations.csv", res.log);
    std::vector<CheckpointEntry> index;
    auto dump_traj = [&](const std::string& kind, const TrajectoryStore<ScalarField>& traj) {
        for (std::size_t s = 0; s < traj.size(); ++s) {
            const std::string rel = detail::theta_name(kind, traj.theta(s));
            write_field(out / rel, traj.snapshot(s));
            index.push_back({kind, traj.theta(s), traj.time(s), rel});
        }
    };
    dump_traj("V", res.value);
    dump_traj("rho", res.density);
    for (std::size_t s = 0; s < res.controls.size(); ++s) {
        const ControlFields& cf = res.controls.snapshot(s);
        const std::string rel_u = detail::theta_name("ustar", res.controls.theta(s));
        const std::string rel_w = detail::theta_name("wstar", res.controls.theta(s));
        write_field(out / rel_u, cf.u_star);
        write_field(out / rel_w, cf.w_star);
        index.push_back({"ustar", res.controls.theta(s), res.controls.time(s), rel_u});
        index.push_back({"wstar", res.controls.theta(s), res.controls.time(s), rel_w});
    }
    write_checkpoint_index(out / "fields" / "index.csv", index);
    write_hydro_series(out / "hydro.csv", res.density, grid);

    if (!res.log.stop_iter) {
        msg << "warning: no stagnation within " << cfg.n_iters << " iterations\n";
        return exit_code::no_convergence;
    }
    msg << "stagnated at iteration " << *res.log.stop_iter << "\n";
    return exit_code::ok;
}

struct LoadedArtifacts {
    RunConfig cfg;
    PhaseGrid grid;
    TrajectoryStore<DensityField> rho;
    TrajectoryStore<ControlFields> controls;
};

inline LoadedArtifacts load_artifacts(const std::string& artifacts_dir, bool with_controls) {
    namespace fs = std::filesystem;
    const fs::path dir(artifacts_dir);
    if (!fs::exists(dir / "manifest.cfg")) throw ArtifactError("missing manifest.cfg");
    LoadedArtifacts a;
    try {
        a.cfg = load_config((dir / "manifest.cfg").string());
    } catch (const ConfigError& e) {
        throw ArtifactError(std::string("bad manifest: ") + e.what());
    }
    a.grid = PhaseGrid::make(a.cfg.nx, a.cfg.model);
    const auto index = read_checkpoint_index(dir / "fields" / "index.csv");
    a.rho = load_field_trajectory(dir, index, "rho");
    if (a.rho.snapshot(0).nx != a.cfg.nx)
        throw ArtifactError("field grid does not match manifest Nx");
    if (with_controls) a.controls = load_control_trajectory(dir, index);
    return a;
}

struct ParticleRunOptions {
    std::vector<int> n_sweep = {100, 1000, 10000};
    std::optional<std::uint64_t> seed;
    std::optional<double> tau_p;
    DisturbanceMode mode = DisturbanceMode::WorstCase;
    int traj_stride = 0;  // 0 disables the trajectory dump
};

// Replay the stored feedback on particle ensembles of increasing size and
// write the L1-distance time series (one row per checkpoint per N).
inline int run_particles(const std::string& config_path, const std::string& artifacts_dir,
                         const ParticleRunOptions& opt = {}, std::ostream& msg = std::cerr) {
    RunConfig cli_cfg;
    try {
        cli_cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        msg << "config error: " << e.what() << "\n";
        return exit_code::bad_config;
    }
    LoadedArtifacts art;
    try {
        art = load_artifacts(artifacts_dir, true);
    } catch (const ArtifactError& e) {
        msg << "artifacts error: " << e.what() << "\n";
        return exit_code::bad_artifacts;
    }

    const std::uint64_t seed = opt.seed ? *opt.seed : cli_cfg.seed;
    const double tau_p = opt.tau_p ? *opt.tau_p : art.cfg.tau;
    namespace fs = std::filesystem;
    const fs::path dir(artifacts_dir);
    std::ofstream out(dir / "particles.csv");
    if (!out) {
        msg << "cannot write particles.csv\n";
        return exit_code::generic;
    }
    out << "n,time,l1_position,l1_velocity\n";
    for (int n : opt.n_sweep) {
        std::ofstream traj_out;
        TrajectorySink sink;
        if (opt.traj_stride > 0) {
            traj_out.open(dir / ("trajectories_n" + std::to_string(n) + ".csv"));
            traj_out << "time,id,x,v\n";
            sink = [&traj_out](double t, int id, double x, double v) {
                traj_out << format_g17(t) << ',' << id << ',' << format_g17(x) << ','
                         << format_g17(v) << "\n";
            };
        }
        const auto series = replay_particles(art.controls, art.rho, art.grid, art.cfg.model, n,
                                             seed, tau_p, opt.mode, opt.traj_stride, sink);
        for (const auto& pt : series)
            out << n << ',' << format_g17(pt.time) << ',' << format_g17(pt.l1_position) << ','
                << format_g17(pt.l1_velocity) << "\n";
    }
    msg << "particle statistics written to " << (dir / "particles.csv").string() << "\n";
    return exit_code::ok;
}

// Recompute the hydrodynamic series from stored density checkpoints.
inline int run_hydro(const std::string& artifacts_dir, std::ostream& msg = std::cerr) {
    LoadedArtifacts art;
    try {
        art = load_artifacts(artifacts_dir, false);
    } catch (const ArtifactError& e) {
        msg << "artifacts error: " << e.what() << "\n";
        return exit_code::bad_artifacts;
    }
    write_hydro_series(std::filesystem::path(artifacts_dir) / "hydro.csv", art.rho, art.grid);
    msg << "hydro series written\n";
    return exit_code::ok;
}

inline int run_check_cfl(const std::string& config_path, std::ostream& out = std::cout) {
    RunConfig cfg;
    try {
        cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        out << "config error: " << e.what() << "\n";
        return exit_code::bad_config;
    }
    const PhaseGrid grid = PhaseGrid::make(cfg.nx, cfg.model);
    const CflReport r = check_cfl(grid, cfg.tau, cfg.model);
    out << "tau = " << format_g17(r.tau) << "\n"
        << "tau_max = " << format_g17(r.tau_max) << " (safety " << format_g17(r.safety) << ")\n"
        << "psi_max = " << format_g17(r.psi_max) << "\n"
        << "limit_advection_xi = " << format_g17(r.limit_advection_xi) << "\n"
        << "limit_advection_ups = " << format_g17(r.limit_advection_ups) << "\n"
        << "limit_diffusion = " << format_g17(r.limit_diffusion) << "\n"
        << "literal_bound = " << format_g17(r.literal_bound) << "\n"
        << "ok = " << (r.ok ? "yes" : "no") << "\n";
    return r.ok ? exit_code::ok : exit_code::cfl_violation;
}

inline int run_print_config(const std::optional<std::string>& config_path,
                            std::ostream& out = std::cout) {
    try {
        RunConfig cfg = config_path ? load_config(*config_path) : RunConfig{};
        write_config(cfg, out);
    } catch (const ConfigError& e) {
        out << "config error: " << e.what() << "\n";
        return exit_code::bad_config;
    }
    return exit_code::ok;
}

}  // namespace tmfg
