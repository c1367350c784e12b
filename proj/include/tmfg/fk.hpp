#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "tmfg/grid.hpp"
#include "tmfg/hamiltonian.hpp"
#include "tmfg/time_grid.hpp"

namespace tmfg {

// Phase-space drift in the velocity direction: psi = -alpha v^2 + u* + w*.
struct DriftField {
    double time_tag = 0.0;
    ScalarField psi;
};

inline DriftField make_drift(const ControlFields& cf, const PhaseGrid& g, const ModelParams& p) {
    DriftField d;
    d.time_tag = cf.time_tag;
    d.psi = ScalarField(g.nx, 0.0, cf.time_tag);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.nx; ++j)
            d.psi(i, j) = vehicle_drift(g.ups[j], cf.u_star(i, j), cf.w_star(i, j), p);
    return d;
}

// Face-flux containers. Position faces: face f sits between cells f-1 and f
// (f = 0..nx), so cell i is bounded by faces i and i+1. Velocity faces are
// indexed the same way in j.
struct XiFaceFlux {
    int nx;
    std::vector<double> g;
    explicit XiFaceFlux(int n) : nx(n), g(std::size_t(n + 1) * n, 0.0) {}
    double& at(int face, int j) { return g[std::size_t(face) * nx + j]; }
    double at(int face, int j) const { return g[std::size_t(face) * nx + j]; }
};

struct UpsFaceFlux {
    int nx;
    std::vector<double> g;
    explicit UpsFaceFlux(int n) : nx(n), g(std::size_t(n) * (n + 1), 0.0) {}
    double& at(int i, int face) { return g[std::size_t(i) * (nx + 1) + face]; }
    double at(int i, int face) const { return g[std::size_t(i) * (nx + 1) + face]; }
};

// Rusanov (local Lax-Friedrichs) flux in the position direction. The wave
// speed is |ups_j| and the dissipation uses the undivided cell difference.
// Since ups_j > 0 on the staggered grid this reduces to exact upwinding.
inline XiFaceFlux flux_xi(const BorderedField& rho, const PhaseGrid& g) {
    const int n = g.nx;
    XiFaceFlux out(n);
    for (int f = 0; f <= n; ++f) {
        const int L = f - 1, R = f;
        for (int j = 0; j < n; ++j) {
            const double u = g.ups[j];
            const double rl = rho.at(L, j), rr = rho.at(R, j);
            out.at(f, j) = 0.5 * (u * rl + u * rr - std::abs(u) * (rr - rl));
        }
    }
    return out;
}

// Rusanov flux in the velocity direction with face-local wave speed
// max(|psi_B|, |psi_T|). With rho even and psi odd across the boundaries the
// boundary faces carry exactly zero flux, which is what conserves mass.
inline UpsFaceFlux flux_upsilon(const BorderedField& rho, const BorderedField& psi,
                                const PhaseGrid& g) {
    const int n = g.nx;
    UpsFaceFlux out(n);
    for (int i = 0; i < n; ++i)
        for (int f = 0; f <= n; ++f) {
            const int B = f - 1, T = f;
            const double pb = psi.at(i, B), pt = psi.at(i, T);
            const double rb = rho.at(i, B), rt = rho.at(i, T);
            const double a = std::max(std::abs(pb), std::abs(pt));
            out.at(i, f) = 0.5 * (pb * rb + pt * rt - a * (rt - rb));
        }
    return out;
}

// Semi-discrete kinetic right-hand side: flux divergence plus velocity
// diffusion with even ghosts. Summed over the grid this is zero, so the
// discrete mass is conserved exactly by the time integrator.
inline ScalarField fk_rhs(const DensityField& rho, const DriftField& drift, const PhaseGrid& g,
                          const ModelParams& p) {
    const BorderedField rb = extend_ghosts(rho, GhostPolicy::EvenUpsilon);
    const BorderedField pb = extend_ghosts(drift.psi, GhostPolicy::OddUpsilon);
    const XiFaceFlux g1 = flux_xi(rb, g);
    const UpsFaceFlux g2 = flux_upsilon(rb, pb, g);
    ScalarField out(rho.nx, 0.0, rho.time_tag);
    for (int i = 0; i < rho.nx; ++i)
        for (int j = 0; j < rho.nx; ++j) {
            const double adv_xi = (g1.at(i + 1, j) - g1.at(i, j)) / g.h;
            const double adv_up = (g2.at(i, j + 1) - g2.at(i, j)) / g.k;
            const double fwd = (rb.at(i, j + 1) - rb.at(i, j)) / g.k;
            const double bwd = (rb.at(i, j) - rb.at(i, j - 1)) / g.k;
            const double second = (fwd - bwd) / g.k;
            out(i, j) = -adv_xi - adv_up + p.epsilon * second;
        }
    return out;
}

// Supplies the drift field at a queried time (sample-and-hold for stored
// trajectories). Implementations may cache the last materialized field.
class DriftSource {
public:
    virtual ~DriftSource() = default;
    virtual const DriftField& at_time(double t) = 0;
};

class FixedDrift : public DriftSource {
public:
    explicit FixedDrift(DriftField d) : d_(std::move(d)) {}
    const DriftField& at_time(double) override { return d_; }

private:
    DriftField d_;
};

class StoredControlDrift : public DriftSource {
public:
    StoredControlDrift(const TrajectoryStore<ControlFields>& controls, const PhaseGrid& g,
                       const ModelParams& p)
        : controls_(controls), grid_(g), params_(p) {}

    const DriftField& at_time(double t) override {
        const std::size_t idx = controls_.index_at_or_before(t);
        if (!cached_ || idx != cached_idx_) {
            cache_ = make_drift(controls_.snapshot(idx), grid_, params_);
            cached_idx_ = idx;
            cached_ = true;
        }
        return cache_;
    }

private:
    const TrajectoryStore<ControlFields>& controls_;
    const PhaseGrid& grid_;
    const ModelParams& params_;
    DriftField cache_;
    std::size_t cached_idx_ = 0;
    bool cached_ = false;
};

// Recomputes the feedback fields from stored value snapshots instead of
// holding a dense control trajectory; trades compute for memory.
class ValueDrift : public DriftSource {
public:
    ValueDrift(const TrajectoryStore<ScalarField>& value, const PhaseGrid& g,
               const ModelParams& p, UpwindMode mode = UpwindMode::ForwardBoth)
        : value_(value), grid_(g), params_(p), mode_(mode) {}

    const DriftField& at_time(double t) override {
        const std::size_t idx = value_.index_at_or_before(t);
        if (!cached_ || idx != cached_idx_) {
            cache_ = make_drift(extract_controls(value_.snapshot(idx), grid_, params_, mode_),
                                grid_, params_);
            cached_idx_ = idx;
            cached_ = true;
        }
        return cache_;
    }

private:
    const TrajectoryStore<ScalarField>& value_;
    const PhaseGrid& grid_;
    const ModelParams& params_;
    UpwindMode mode_;
    DriftField cache_;
    std::size_t cached_idx_ = 0;
    bool cached_ = false;
};

// Running diagnostics of a kinetic solve; the acceptance gates read these.
struct FkStats {
    double min_density = std::numeric_limits<double>::infinity();  // pre-clamp minimum
    double max_step_mass_drift = 0.0;  // max |mass(t+tau) - mass(t)| over steps
    double max_mass_error = 0.0;       // max |mass - 1| over checkpoints

    void merge(const FkStats& o) {
        min_density = std::min(min_density, o.min_density);
        max_step_mass_drift = std::max(max_step_mass_drift, o.max_step_mass_drift);
        max_mass_error = std::max(max_mass_error, o.max_mass_error);
    }
};

inline constexpr double kNegativityTolerance = 1e-14;

// One SSP-RK2 step of the kinetic equation from time t to t + tau. The drift
// is queried at the stage times t and t + tau. Aborts if the result dips
// below -1e-14 anywhere; smaller round-off negatives are clamped to zero.
inline DensityField step_forward_rk2(const DensityField& rho, DriftSource& drift, double t,
                                     double tau, const PhaseGrid& g, const ModelParams& p,
                                     FkStats* stats = nullptr) {
    const double mass_before = stats ? density_mass(rho, g) : 0.0;
    auto rhs = [&](const ScalarField& r, int stage) {
        return fk_rhs(r, drift.at_time(stage == 0 ? t : t + tau), g, p);
    };
    DensityField out = ssp_rk2_step(rho, tau, rhs);
    out.time_tag = t + tau;
    detail::require_finite(out, "fk step", out.time_tag);
    const double m = min_value(out);
    if (m < -kNegativityTolerance) {
        for (int i = 0; i < out.nx; ++i)
            for (int j = 0; j < out.nx; ++j)
                if (out(i, j) == m)
                    throw SolverError("fk step: density " + format_g17(m) + " below tolerance at node (" +
                                      std::to_string(i) + "," + std::to_string(j) + "), t=" +
                                      format_g17(out.time_tag));
    }
    for (double& x : out.v)
        if (x < 0.0) x = 0.0;
    if (stats) {
        stats->min_density = std::min(stats->min_density, m);
        stats->max_step_mass_drift =
            std::max(stats->max_step_mass_drift, std::abs(density_mass(out, g) - mass_before));
    }
    return out;
}

struct CflReport {
    bool ok = false;
    double tau = 0.0;        // the step being checked
    double tau_max = 0.0;    // largest admissible step (safety included)
    double safety = 0.5;
    double psi_max = 0.0;
    double limit_advection_xi = 0.0;   // h / s_max
    double limit_advection_ups = 0.0;  // k / psi_max
    double limit_diffusion = 0.0;      // k^2 / (2 eps), +inf when eps = 0
    double literal_bound = 0.0;        // 0.01 (h s_max + k psi_max), reported for comparison
};

// Explicit-scheme step restriction: tau_max = safety * min(h/s_max,
// k/psi_max, k^2/(2 eps)). The diffusion constraint drops out when eps = 0.
inline CflReport check_cfl(const PhaseGrid& g, double tau, const ModelParams& p,
                           double safety = 0.5) {
    CflReport r;
    r.tau = tau;
    r.safety = safety;
    r.psi_max = p.psi_bound();
    r.limit_advection_xi = g.h / p.s_max;
    r.limit_advection_ups = g.k / r.psi_max;
    r.limit_diffusion = p.epsilon > 0.0 ? g.k * g.k / (2.0 * p.epsilon)
                                        : std::numeric_limits<double>::infinity();
    const double raw =
        std::min({r.limit_advection_xi, r.limit_advection_ups, r.limit_diffusion});
    r.tau_max = safety * raw;
    r.ok = tau <= r.tau_max;
    r.literal_bound = 0.01 * (g.h * p.s_max + g.k * r.psi_max);
    return r;
}

// Forward sweep over the whole horizon from rho(0) = rho0, recording
// checkpoints. The drift source covers [0, T] by sample-and-hold.
inline TrajectoryStore<DensityField> solve_fk(DriftSource& drift, const DensityField& rho0,
                                              const PhaseGrid& g, const TimeGrid& tg,
                                              const ModelParams& p, FkStats* stats = nullptr) {
    TrajectoryStore<DensityField> traj;
    DensityField rho = rho0;
    rho.time_tag = 0.0;
    if (stats) stats->max_mass_error = std::max(stats->max_mass_error,
                                                std::abs(density_mass(rho, g) - 1.0));
    traj.record(0, 0.0, rho);
    for (int theta = 0; theta + 1 < tg.n_t; ++theta) {
        rho = step_forward_rk2(rho, drift, tg.t(theta), tg.tau, g, p, stats);
        if (tg.is_checkpoint(theta + 1)) {
            if (stats)
                stats->max_mass_error = std::max(stats->max_mass_error,
                                                 std::abs(density_mass(rho, g) - 1.0));
            traj.record(theta + 1, rho.time_tag, rho);
        }
    }
    return traj;
}

}  // namespace tmfg
