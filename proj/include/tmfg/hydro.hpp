#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "tmfg/grid.hpp"

namespace tmfg {

// Velocity division is suppressed where the spatial marginal falls below
// this floor; such cells are flagged undefined (NaN) and emitted as empty.
inline constexpr double kKappaFloor = 1e-12;

struct HydroFields {
    double time_tag = 0.0;
    std::vector<double> kappa;          // spatial marginal [1/m]
    std::vector<double> momentum;       // first velocity moment [1/s]
    std::vector<double> bulk_velocity;  // momentum/kappa [m/s], NaN where undefined

    bool defined(int i) const { return !std::isnan(bulk_velocity[i]); }
};

// Riemann-sum marginals of the kinetic density: kappa_i = sum_j rho_ij k,
// j_i = sum_j ups_j rho_ij k, bulk velocity = j / kappa where kappa is above
// the floor.
inline HydroFields marginals(const DensityField& rho, const PhaseGrid& g) {
    HydroFields out;
    out.time_tag = rho.time_tag;
    out.kappa.assign(g.nx, 0.0);
    out.momentum.assign(g.nx, 0.0);
    out.bulk_velocity.assign(g.nx, std::numeric_limits<double>::quiet_NaN());
    for (int i = 0; i < g.nx; ++i) {
        double k0 = 0.0, m1 = 0.0;
        for (int j = 0; j < g.nx; ++j) {
            k0 += rho(i, j);
            m1 += g.ups[j] * rho(i, j);
        }
        out.kappa[i] = k0 * g.k;
        out.momentum[i] = m1 * g.k;
        if (out.kappa[i] > kKappaFloor) out.bulk_velocity[i] = out.momentum[i] / out.kappa[i];
    }
    return out;
}

}  // namespace tmfg
