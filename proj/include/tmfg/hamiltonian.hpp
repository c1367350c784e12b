#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tmfg/grid.hpp"
#include "tmfg/params.hpp"

namespace tmfg {

// Per-position congestion value c[i] = sum_{i',j'} phi(xi_i, xi_i') rho_{i'j'} h k,
// i.e. the kernel integrated against the mean-field measure.
struct CongestionCoefficient {
    double time_tag = 0.0;
    std::vector<double> c;
};

inline CongestionCoefficient congestion_coefficient(const ScalarField& rho, const PhaseGrid& g,
                                                    const CongestionKernel& phi) {
    const int n = g.nx;
    std::vector<double> colmass(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += rho(i, j);
        colmass[i] = s * g.k;
    }
    CongestionCoefficient out;
    out.time_tag = rho.time_tag;
    out.c.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int ip = 0; ip < n; ++ip) s += phi(g.xi[i], g.xi[ip]) * colmass[ip];
        out.c[i] = s * g.h;
    }
    return out;
}

// Same reduction with the kernel values cached; used in the solver loops where
// the kernel and grid are fixed and only rho changes.
class CongestionOperator {
public:
    CongestionOperator(const PhaseGrid& g, const CongestionKernel& phi)
        : nx_(g.nx), h_(g.h), k_(g.k), w_(std::size_t(g.nx) * g.nx) {
        for (int i = 0; i < nx_; ++i)
            for (int ip = 0; ip < nx_; ++ip) w_[std::size_t(i) * nx_ + ip] = phi(g.xi[i], g.xi[ip]);
    }

    CongestionCoefficient apply(const ScalarField& rho) const {
        const int n = nx_;
        std::vector<double> colmass(n, 0.0);
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += rho(i, j);
            colmass[i] = s * k_;
        }
        CongestionCoefficient out;
        out.time_tag = rho.time_tag;
        out.c.assign(n, 0.0);
        for (int i = 0; i < n; ++i) {
            const double* row = &w_[std::size_t(i) * n];
            double s = 0.0;
            for (int ip = 0; ip < n; ++ip) s += row[ip] * colmass[ip];
            out.c[i] = s * h_;
        }
        return out;
    }

private:
    int nx_;
    double h_, k_;
    std::vector<double> w_;
};

// Running cost rate: u^2/2 - w^2/(2 gamma^2) + (c(xi) - 1/beta) * upsilon.
inline double running_cost(double upsilon, double u, double w, double c_at_xi,
                           const ModelParams& p) {
    return 0.5 * u * u - (w * w) / (2.0 * p.gamma * p.gamma) + (c_at_xi - p.inv_beta()) * upsilon;
}

// Vehicle acceleration under drag, control, and disturbance.
inline double vehicle_drift(double upsilon, double u, double w, const ModelParams& p) {
    return -p.alpha * upsilon * upsilon + u + w;
}

// Closed-form minimizer of u^2/2 + p2*u over [u_min, u_max]: the objective is
// strictly convex, so the boundary comparison reduces to a clamp.
inline double optimal_control(double p2, const ModelParams& p) {
    return std::clamp(-p2, p.u_min, p.u_max);
}

// Closed-form maximizer of -w^2/(2 gamma^2) + p2*w over [-w_max, w_max]
// (strictly concave).
inline double worst_disturbance(double p2, const ModelParams& p) {
    return std::clamp(p.gamma * p.gamma * p2, -p.w_max, p.w_max);
}

// Pre-Hamiltonian at given (u, w): running cost plus costate-weighted dynamics.
inline double pre_hamiltonian(double upsilon, double u, double w, double c_at_xi, double p1,
                              double p2, const ModelParams& p) {
    return running_cost(upsilon, u, w, c_at_xi, p) + p1 * upsilon +
           p2 * vehicle_drift(upsilon, u, w, p);
}

// Isaacs value min_u max_w of the pre-Hamiltonian. w* depends on p2 only, so
// the saddle is attained at the closed-form pair.
inline double hamiltonian_value(double upsilon, double c_at_xi, double p1, double p2,
                                const ModelParams& p) {
    const double us = optimal_control(p2, p);
    const double ws = worst_disturbance(p2, p);
    return pre_hamiltonian(upsilon, us, ws, c_at_xi, p1, p2, p);
}

// Difference choice inside the numerical Hamiltonian. The default is the
// unconditional forward pair; the position direction is genuinely upwind
// there because the position drift ups_j is always positive. The adaptive
// variant re-selects the velocity-direction difference by the sign of the
// optimized drift, which can help when the feedback decelerates strongly.
enum class UpwindMode {
    ForwardBoth,
    DriftAdaptive,
};

namespace detail {

// costate component in the velocity direction at node (i, j)
inline double upwind_p2(const BorderedField& b, int i, int j, double ups_j, double k,
                        const ModelParams& p, UpwindMode mode) {
    const double fwd = (b.at(i, j + 1) - b.at(i, j)) / k;
    if (mode == UpwindMode::ForwardBoth) return fwd;
    const double us = optimal_control(fwd, p);
    const double ws = worst_disturbance(fwd, p);
    if (vehicle_drift(ups_j, us, ws, p) >= 0.0) return fwd;
    return (b.at(i, j) - b.at(i, j - 1)) / k;
}

}  // namespace detail

// Upwind numerical Hamiltonian: H evaluated with one-sided differences of V,
// periodic in xi and even in upsilon.
inline ScalarField numerical_hamiltonian(const ScalarField& V, const CongestionCoefficient& cong,
                                         const PhaseGrid& g, const ModelParams& p,
                                         UpwindMode mode = UpwindMode::ForwardBoth) {
    BorderedField b = extend_ghosts(V, GhostPolicy::EvenUpsilon);
    ScalarField out(V.nx, 0.0, V.time_tag);
    for (int i = 0; i < V.nx; ++i) {
        const double ci = cong.c[i];
        for (int j = 0; j < V.nx; ++j) {
            const double p1 = (b.at(i + 1, j) - b.at(i, j)) / g.h;
            const double p2 = detail::upwind_p2(b, i, j, g.ups[j], g.k, p, mode);
            out(i, j) = hamiltonian_value(g.ups[j], ci, p1, p2, p);
        }
    }
    return out;
}

// Feedback control and worst-case disturbance on the grid; box bounds hold by
// construction of the clamps.
struct ControlFields {
    double time_tag = 0.0;
    ScalarField u_star;
    ScalarField w_star;
};

inline ControlFields extract_controls(const ScalarField& V, const PhaseGrid& g,
                                      const ModelParams& p,
                                      UpwindMode mode = UpwindMode::ForwardBoth) {
    BorderedField b = extend_ghosts(V, GhostPolicy::EvenUpsilon);
    ControlFields cf;
    cf.time_tag = V.time_tag;
    cf.u_star = ScalarField(V.nx, 0.0, V.time_tag);
    cf.w_star = ScalarField(V.nx, 0.0, V.time_tag);
    for (int i = 0; i < V.nx; ++i)
        for (int j = 0; j < V.nx; ++j) {
            const double p2 = detail::upwind_p2(b, i, j, g.ups[j], g.k, p, mode);
            cf.u_star(i, j) = optimal_control(p2, p);
            cf.w_star(i, j) = worst_disturbance(p2, p);
        }
    return cf;
}

}  // namespace tmfg
