#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "tmfg/fk.hpp"
#include "tmfg/grid.hpp"
#include "tmfg/hjbi.hpp"
#include "tmfg/time_grid.hpp"

namespace tmfg {

struct IterationRecord {
    int n = 0;
    double delta2 = 0.0;      // squared increment of this backward-forward pass
    double cumulative = 0.0;  // running sum D after this iteration
    bool stopped_here = false;
    double wall_seconds = 0.0;
};

struct IterationLog {
    std::vector<IterationRecord> iterations;
    std::optional<int> stop_iter;
    double cumulative = 0.0;
};

// Squared distance between consecutive backward-forward iterates:
//   sum_theta sum_ij ||(V, rho)^n - (V, rho)^{n-1}||_2^2 * h * k * tau_eff
// over checkpointed times, with tau_eff = stride * tau.
inline double compute_delta2(const TrajectoryStore<ScalarField>& Vn,
                             const TrajectoryStore<DensityField>& rhon,
                             const TrajectoryStore<ScalarField>& Vprev,
                             const TrajectoryStore<DensityField>& rhoprev, const PhaseGrid& g,
                             const TimeGrid& tg) {
    if (Vn.size() != Vprev.size() || rhon.size() != rhoprev.size() || Vn.size() != rhon.size())
        throw std::invalid_argument("compute_delta2: trajectories have mismatched checkpoints");
    const double tau_eff = tg.stride * tg.tau;
    double total = 0.0;
    for (std::size_t s = 0; s < Vn.size(); ++s) {
        const ScalarField& a = Vn.snapshot(s);
        const ScalarField& b = Vprev.snapshot(s);
        const ScalarField& c = rhon.snapshot(s);
        const ScalarField& d = rhoprev.snapshot(s);
        if (a.size() != b.size() || c.size() != d.size() || a.size() != c.size())
            throw std::invalid_argument("compute_delta2: fields have mismatched shapes");
        double acc = 0.0;
        for (std::size_t n = 0; n < a.v.size(); ++n) {
            const double dv = a.v[n] - b.v[n];
            const double dr = c.v[n] - d.v[n];
            acc += dv * dv + dr * dr;
        }
        total += acc;
    }
    return total * g.cell_area() * tau_eff;
}

struct FixedPointOptions {
    // Picard damping on the density handed to the next backward solve;
    // 1.0 is the plain alternation.
    double relaxation = 1.0;
    // Keep iterating (and logging) after the stagnation test fires.
    bool log_after_stagnation = false;
    // Rebuild feedback fields from stored value snapshots instead of holding
    // a dense control trajectory.
    bool recompute_controls_from_value = false;
    // Difference selection inside the numerical Hamiltonian.
    UpwindMode upwind = UpwindMode::ForwardBoth;
};

struct Algorithm1Result {
    TrajectoryStore<ScalarField> value;
    TrajectoryStore<DensityField> density;
    TrajectoryStore<ControlFields> controls;
    IterationLog log;
    FkStats fk_stats;  // aggregated over every forward solve in the run
};

namespace detail {

inline TrajectoryStore<DensityField> blend_trajectories(
    const TrajectoryStore<DensityField>& fresh, const TrajectoryStore<DensityField>& held,
    double weight_fresh) {
    TrajectoryStore<DensityField> out;
    for (std::size_t s = 0; s < fresh.size(); ++s) {
        DensityField f = fresh.snapshot(s);
        const DensityField& h = held.snapshot(s);
        for (std::size_t n = 0; n < f.v.size(); ++n)
            f.v[n] = weight_fresh * f.v[n] + (1.0 - weight_fresh) * h.v[n];
        out.record(fresh.theta(s), fresh.time(s), std::move(f));
    }
    return out;
}

}  // namespace detail

// Backward-forward Picard iteration. The pre-loop pass (iteration 0) solves
// the value equation against the initial density held constant in time, then
// transports the density under the resulting feedback. The loop then
// alternates, accumulating D = sum delta2_n, and stops early exactly when
// D + delta2_n == D in double precision.
inline Algorithm1Result run_algorithm1(const DensityField& rho0, const PhaseGrid& g,
                                       const TimeGrid& tg, const ModelParams& p,
                                       const CongestionKernel& kernel, int n_iters,
                                       const FixedPointOptions& opt = {}) {
    if (n_iters < 1) throw std::invalid_argument("run_algorithm1: n_iters must be at least 1");
    const CongestionOperator cong(g, kernel);

    auto forward = [&](const HjbiSolution& hjbi, FkStats& stats) {
        if (opt.recompute_controls_from_value) {
            ValueDrift drift(hjbi.value, g, p, opt.upwind);
            return solve_fk(drift, rho0, g, tg, p, &stats);
        }
        StoredControlDrift drift(hjbi.controls, g, p);
        return solve_fk(drift, rho0, g, tg, p, &stats);
    };

    Algorithm1Result res;

    // rho^{-1}: the initial density held constant over [0, T]; a single
    // snapshot at t = 0 serves every sample-and-hold query.
    TrajectoryStore<DensityField> rho_static;
    rho_static.record(0, 0.0, rho0);

    HjbiSolution hjbi = solve_hjbi(rho_static, g, tg, p, cong, nullptr, opt.upwind);
    TrajectoryStore<DensityField> rho_traj = forward(hjbi, res.fk_stats);
    TrajectoryStore<DensityField> rho_input = rho_traj;  // what the next backward solve sees

    double D = 0.0;
    bool stopped = false;
    for (int n = 1; n <= n_iters; ++n) {
        const auto t0 = std::chrono::steady_clock::now();
        HjbiSolution hjbi_new = solve_hjbi(rho_input, g, tg, p, cong, nullptr, opt.upwind);
        TrajectoryStore<DensityField> rho_new = forward(hjbi_new, res.fk_stats);
        const double delta2 =
            compute_delta2(hjbi_new.value, rho_new, hjbi.value, rho_traj, g, tg);
        const bool stagnated = (D + delta2 == D);
        if (!stagnated) D += delta2;

        IterationRecord rec;
        rec.n = n;
        rec.delta2 = delta2;
        rec.cumulative = D;
        rec.stopped_here = stagnated && !stopped;
        rec.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.log.iterations.push_back(rec);

        if (opt.relaxation == 1.0)
            rho_input = rho_new;
        else
            rho_input = detail::blend_trajectories(rho_new, rho_input, opt.relaxation);
        hjbi = std::move(hjbi_new);
        rho_traj = std::move(rho_new);

        if (stagnated && !stopped) {
            res.log.stop_iter = n;
            stopped = true;
            if (!opt.log_after_stagnation) break;
        }
    }
    res.log.cumulative = D;
    res.value = std::move(hjbi.value);
    res.controls = std::move(hjbi.controls);
    res.density = std::move(rho_traj);
    return res;
}

}  // namespace tmfg
