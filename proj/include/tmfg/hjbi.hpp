#pragma once

#include <cmath>
#include <string>

#include "tmfg/grid.hpp"
#include "tmfg/hamiltonian.hpp"
#include "tmfg/time_grid.hpp"

namespace tmfg {

// Semi-discrete right-hand side of the value equation:
//   dV/dt = -H_ij - eps (D2^2 V)_ij.
// Even ghosts on V realize the homogeneous Neumann condition at v = 0 and
// v = s_max; periodic ghosts realize V(t, xi) = V(t, xi + L).
inline ScalarField hjbi_rhs(const ScalarField& V, const DensityField& rho, const PhaseGrid& g,
                            const ModelParams& p, const CongestionOperator& cong,
                            UpwindMode mode = UpwindMode::ForwardBoth) {
    const CongestionCoefficient c = cong.apply(rho);
    BorderedField b = extend_ghosts(V, GhostPolicy::EvenUpsilon);
    ScalarField out(V.nx, 0.0, V.time_tag);
    for (int i = 0; i < V.nx; ++i) {
        const double ci = c.c[i];
        for (int j = 0; j < V.nx; ++j) {
            const double p1 = (b.at(i + 1, j) - b.at(i, j)) / g.h;
            const double p2 = detail::upwind_p2(b, i, j, g.ups[j], g.k, p, mode);
            const double fwd = (b.at(i, j + 1) - b.at(i, j)) / g.k;
            const double bwd = (b.at(i, j) - b.at(i, j - 1)) / g.k;
            const double second = (fwd - bwd) / g.k;
            out(i, j) = -hamiltonian_value(g.ups[j], ci, p1, p2, p) - p.epsilon * second;
        }
    }
    return out;
}

// One backward step of size tau: integrates the time-reversed equation
// dV/ds = +H + eps D2^2 V with SSP-RK2, with rho frozen over the step.
// Produces V at time V_next.time_tag - tau.
inline ScalarField step_backward_rk2(const ScalarField& V_next, const DensityField& rho_at_t,
                                     double tau, const PhaseGrid& g, const ModelParams& p,
                                     const CongestionOperator& cong,
                                     UpwindMode mode = UpwindMode::ForwardBoth) {
    const double t_target = V_next.time_tag - tau;
    auto reversed_rhs = [&](const ScalarField& V, int /*stage*/) {
        ScalarField f = hjbi_rhs(V, rho_at_t, g, p, cong, mode);
        for (double& x : f.v) x = -x;
        return f;
    };
    ScalarField out = ssp_rk2_step(V_next, tau, reversed_rhs);
    out.time_tag = t_target;
    detail::require_finite(out, "hjbi step", t_target);
    return out;
}

struct HjbiSolution {
    TrajectoryStore<ScalarField> value;
    TrajectoryStore<ControlFields> controls;
};

// Backward sweep over the whole horizon: starts from the terminal condition
// (zero unless supplied), marches theta = N_T-1 .. 0 querying rho(t[theta])
// by sample-and-hold, and records value and feedback fields at checkpoints.
inline HjbiSolution solve_hjbi(const TrajectoryStore<DensityField>& rho_traj, const PhaseGrid& g,
                               const TimeGrid& tg, const ModelParams& p,
                               const CongestionOperator& cong,
                               const ScalarField* terminal = nullptr,
                               UpwindMode mode = UpwindMode::ForwardBoth) {
    HjbiSolution sol;
    ScalarField V = terminal ? *terminal : ScalarField::zeros(g.nx);
    V.time_tag = tg.t(tg.n_t - 1);
    sol.value.record(tg.n_t - 1, V.time_tag, V);
    sol.controls.record(tg.n_t - 1, V.time_tag, extract_controls(V, g, p, mode));
    for (int theta = tg.n_t - 2; theta >= 0; --theta) {
        const DensityField& rho = rho_traj.at_or_before(tg.t(theta));
        V = step_backward_rk2(V, rho, tg.tau, g, p, cong, mode);
        if (tg.is_checkpoint(theta)) {
            sol.value.record(theta, V.time_tag, V);
            sol.controls.record(theta, V.time_tag, extract_controls(V, g, p, mode));
        }
    }
    sol.value.finalize_ascending();
    sol.controls.finalize_ascending();
    return sol;
}

}  // namespace tmfg
