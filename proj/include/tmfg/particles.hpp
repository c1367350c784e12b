#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "tmfg/grid.hpp"
#include "tmfg/hamiltonian.hpp"
#include "tmfg/time_grid.hpp"

namespace tmfg {

namespace detail {

// splitmix64; used to derive independent per-particle stream seeds from the
// master seed.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double wrap_position(double x, double length) {
    x = std::fmod(x, length);
    if (x < 0.0) x += length;
    return x;
}

}  // namespace detail

enum class DisturbanceMode {
    WorstCase,      // replay the computed worst-case feedback
    Zero,           // no disturbance
    UniformRandom,  // i.i.d. uniform in [-w_max, w_max] per particle per step
};

// N independent copies of the reflected vehicle SDE, with one RNG stream per
// particle so runs are reproducible regardless of evaluation order.
struct ParticleEnsemble {
    double time = 0.0;
    std::uint64_t master_seed = 0;
    std::vector<double> x;
    std::vector<double> v;
    std::vector<std::mt19937_64> rng;

    int size() const { return static_cast<int>(x.size()); }

    static ParticleEnsemble with_streams(int n, std::uint64_t seed) {
        ParticleEnsemble e;
        e.master_seed = seed;
        e.x.resize(n);
        e.v.resize(n);
        e.rng.reserve(n);
        for (int p = 0; p < n; ++p) e.rng.emplace_back(detail::mix_seed(seed, p));
        return e;
    }

    // Draw i.i.d. samples from the discrete density: pick a cell by its mass,
    // then place the particle uniformly inside the cell.
    static ParticleEnsemble from_density(const DensityField& rho, const PhaseGrid& g, int n,
                                         std::uint64_t seed) {
        ParticleEnsemble e = with_streams(n, seed);
        const int nx = g.nx;
        std::vector<double> cdf(std::size_t(nx) * nx);
        double acc = 0.0;
        for (std::size_t c = 0; c < cdf.size(); ++c) {
            acc += rho.v[c];
            cdf[c] = acc;
        }
        std::mt19937_64 init_rng(detail::mix_seed(seed, 0x696e6974ULL));
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (int p = 0; p < n; ++p) {
            const double r = uni(init_rng) * acc;
            std::size_t c = std::lower_bound(cdf.begin(), cdf.end(), r) - cdf.begin();
            if (c >= cdf.size()) c = cdf.size() - 1;
            const int i = static_cast<int>(c) / nx;
            const int j = static_cast<int>(c) % nx;
            e.x[p] = detail::wrap_position(g.xi[i] + (uni(init_rng) - 0.5) * g.h, g.length);
            e.v[p] = (j + uni(init_rng)) * g.k;
        }
        return e;
    }
};

// Bilinear interpolation of the feedback fields at a phase point: periodic
// wrap in x, clamped extrapolation in v beyond the first/last cell centers.
// Queries within 1e-9 of a node weight snap to it exactly. Outputs are
// clamped to the admissible boxes.
inline std::pair<double, double> interpolate_feedback(const ControlFields& cf, double x, double v,
                                                      const PhaseGrid& g, const ModelParams& p) {
    const int nx = g.nx;
    double s = detail::wrap_position(x, g.length) / g.h;
    int i0 = static_cast<int>(std::floor(s));
    double fx = s - i0;
    if (fx < 1e-9) fx = 0.0;
    else if (fx > 1.0 - 1e-9) { ++i0; fx = 0.0; }
    i0 %= nx;
    const int i1 = (i0 + 1) % nx;

    double t = (v - 0.5 * g.k) / g.k;
    int j0 = static_cast<int>(std::floor(t));
    double fv = t - j0;
    if (fv < 1e-9) fv = 0.0;
    else if (fv > 1.0 - 1e-9) { ++j0; fv = 0.0; }
    int j1 = j0 + 1;
    if (j0 < 0) { j0 = j1 = 0; fv = 0.0; }
    else if (j0 >= nx - 1) { j0 = j1 = nx - 1; fv = 0.0; }

    auto lerp2 = [&](const ScalarField& f) {
        const double a = f(i0, j0) * (1.0 - fv) + f(i0, j1) * fv;
        const double b = f(i1, j0) * (1.0 - fv) + f(i1, j1) * fv;
        return a * (1.0 - fx) + b * fx;
    };
    const double u = std::clamp(lerp2(cf.u_star), p.u_min, p.u_max);
    const double w = std::clamp(lerp2(cf.w_star), -p.w_max, p.w_max);
    return {u, w};
}

// Mirror v back into [0, s_max]; the post-step analogue of the boundary-local
// regulator process.
inline double reflect_speed(double v, double s_max) {
    while (v < 0.0 || v > s_max) {
        if (v < 0.0) v = -v;
        if (v > s_max) v = 2.0 * s_max - v;
    }
    return v;
}

// Euler-Maruyama step with post-step reflection. Positions advance with the
// pre-step speed; the speed picks up drift, feedback, and sqrt(2 eps tau)
// noise, then is reflected into [0, s_max].
inline void step_particles(ParticleEnsemble& e, const ControlFields& controls, double tau_p,
                           const PhaseGrid& g, const ModelParams& p,
                           DisturbanceMode mode = DisturbanceMode::WorstCase) {
    const double noise = std::sqrt(2.0 * p.epsilon * tau_p);
    const int n = e.size();
    for (int q = 0; q < n; ++q) {
        auto [u, w] = interpolate_feedback(controls, e.x[q], e.v[q], g, p);
        if (mode == DisturbanceMode::Zero) {
            w = 0.0;
        } else if (mode == DisturbanceMode::UniformRandom) {
            std::uniform_real_distribution<double> uw(-p.w_max, p.w_max);
            w = uw(e.rng[q]);
        }
        std::normal_distribution<double> nd(0.0, 1.0);
        const double z = nd(e.rng[q]);
        const double xo = e.x[q], vo = e.v[q];
        e.x[q] = detail::wrap_position(xo + vo * tau_p, g.length);
        e.v[q] = reflect_speed(vo + vehicle_drift(vo, u, w, p) * tau_p + noise * z, p.s_max);
    }
    e.time += tau_p;
}

// L1 distances between the ensemble's histogram marginals (as probability
// vectors over grid cells) and those of the kinetic density.
inline std::pair<double, double> empirical_vs_fk(const ParticleEnsemble& e,
                                                 const DensityField& rho, const PhaseGrid& g) {
    const int nx = g.nx;
    std::vector<double> hx(nx, 0.0), hv(nx, 0.0);
    const int n = e.size();
    for (int q = 0; q < n; ++q) {
        int i = static_cast<int>(std::floor(e.x[q] / g.h + 0.5)) % nx;
        if (i < 0) i += nx;
        int j = static_cast<int>(std::floor(e.v[q] / g.k));
        j = std::clamp(j, 0, nx - 1);
        hx[i] += 1.0;
        hv[j] += 1.0;
    }
    std::vector<double> mx(nx, 0.0), mv(nx, 0.0);  // cell-mass marginals of rho
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < nx; ++j) {
            const double m = rho(i, j) * g.cell_area();
            mx[i] += m;
            mv[j] += m;
        }
    double l1x = 0.0, l1v = 0.0;
    for (int c = 0; c < nx; ++c) {
        l1x += std::abs(hx[c] / n - mx[c]);
        l1v += std::abs(hv[c] / n - mv[c]);
    }
    return {l1x, l1v};
}

struct ParticleSeriesPoint {
    double time = 0.0;
    double l1_position = 0.0;
    double l1_velocity = 0.0;
};

// Optional trajectory sink: receives (time, id, x, v) for every particle at
// every accepted dump step.
using TrajectorySink = std::function<void(double, int, double, double)>;

// Replay the mean-field feedback on a fresh ensemble sampled from the first
// stored density, measuring marginal agreement at every stored checkpoint.
inline std::vector<ParticleSeriesPoint> replay_particles(
    const TrajectoryStore<ControlFields>& controls, const TrajectoryStore<DensityField>& rho_traj,
    const PhaseGrid& g, const ModelParams& p, int n, std::uint64_t seed, double tau_p,
    DisturbanceMode mode = DisturbanceMode::WorstCase, int dump_stride = 0,
    const TrajectorySink& sink = nullptr) {
    if (rho_traj.empty()) throw SolverError("replay_particles: empty density trajectory");
    ParticleEnsemble e = ParticleEnsemble::from_density(rho_traj.snapshot(0), g, n, seed);
    e.time = rho_traj.first_time();

    std::vector<ParticleSeriesPoint> series;
    long step_count = 0;
    auto dump = [&]() {
        if (sink && dump_stride > 0 && step_count % dump_stride == 0)
            for (int q = 0; q < e.size(); ++q) sink(e.time, q, e.x[q], e.v[q]);
    };
    dump();
    for (std::size_t s = 0; s < rho_traj.size(); ++s) {
        const double target = rho_traj.time(s);
        while (e.time + 0.5 * tau_p < target) {
            step_particles(e, controls.at_or_before(e.time), tau_p, g, p, mode);
            ++step_count;
            dump();
        }
        auto [l1x, l1v] = empirical_vs_fk(e, rho_traj.snapshot(s), g);
        series.push_back({target, l1x, l1v});
    }
    return series;
}

}  // namespace tmfg
