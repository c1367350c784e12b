#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "tmfg/params.hpp"

namespace tmfg {

// Phase-space grid on [0, L) x [0, s_max] with Nx nodes per direction.
// Position nodes are unstaggered on the periodic road: xi[i] = i*h.
// Velocity nodes are cell centers (staggered): ups[j] = k/2 + j*k, so the
// domain boundaries v = 0 and v = s_max fall on cell faces.
//
// Index convention: everything here is 0-based. Ghost layers described with
// 1-based indices elsewhere map as: ghost "0" -> index -1, ghost "Nx+1" ->
// index nx, interior "1..Nx" -> 0..nx-1.
struct PhaseGrid {
    int nx = 0;
    double length = 0.0;
    double s_max = 0.0;
    double h = 0.0;  // position spacing [m]
    double k = 0.0;  // velocity spacing [m/s]
    std::vector<double> xi;
    std::vector<double> ups;

    static PhaseGrid make(int nx, double length, double s_max) {
        if (nx < 2) throw std::invalid_argument("PhaseGrid: nx must be at least 2");
        PhaseGrid g;
        g.nx = nx;
        g.length = length;
        g.s_max = s_max;
        g.h = length / nx;
        g.k = s_max / nx;
        g.xi.resize(nx);
        g.ups.resize(nx);
        for (int i = 0; i < nx; ++i) g.xi[i] = i * g.h;
        for (int j = 0; j < nx; ++j) g.ups[j] = 0.5 * g.k + j * g.k;
        return g;
    }
    static PhaseGrid make(int nx, const ModelParams& p) { return make(nx, p.length, p.s_max); }

    double cell_area() const { return h * k; }
};

// Node-indexed real field; (i, j) <-> (xi[i], ups[j]), stored row-major in i.
struct ScalarField {
    int nx = 0;
    double time_tag = 0.0;
    std::vector<double> v;

    ScalarField() = default;
    ScalarField(int n, double fill, double t) : nx(n), time_tag(t), v(std::size_t(n) * n, fill) {}

    static ScalarField zeros(int n, double t = 0.0) { return ScalarField(n, 0.0, t); }
    static ScalarField constant(int n, double value, double t = 0.0) { return ScalarField(n, value, t); }

    double& operator()(int i, int j) { return v[std::size_t(i) * nx + j]; }
    double operator()(int i, int j) const { return v[std::size_t(i) * nx + j]; }
    std::size_t size() const { return v.size(); }
};

// A density is a ScalarField that additionally satisfies non-negativity and
// unit discrete mass; see density_mass / min_value for the checks.
using DensityField = ScalarField;

inline bool all_finite(const ScalarField& f) {
    for (double x : f.v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline double min_value(const ScalarField& f) {
    double m = std::numeric_limits<double>::infinity();
    for (double x : f.v) m = std::min(m, x);
    return m;
}

inline double max_abs(const ScalarField& f) {
    double m = 0.0;
    for (double x : f.v) m = std::max(m, std::abs(x));
    return m;
}

// Discrete Riemann mass: sum_ij f_ij * h * k.
inline double density_mass(const ScalarField& f, const PhaseGrid& g) {
    double s = 0.0;
    for (double x : f.v) s += x;
    return s * g.cell_area();
}

// Ghost extension policy for the velocity direction; the position direction
// is always periodic.
enum class GhostPolicy {
    EvenUpsilon,  // f(i,-1) = f(i,0), f(i,nx) = f(i,nx-1)   (rho, V)
    OddUpsilon,   // f(i,-1) = -f(i,0), f(i,nx) = -f(i,nx-1) (psi)
};

// Field with one ghost layer on each side; valid indices are -1..nx.
struct BorderedField {
    int nx = 0;
    std::vector<double> v;

    explicit BorderedField(int n) : nx(n), v(std::size_t(n + 2) * (n + 2), 0.0) {}

    double& at(int i, int j) { return v[std::size_t(i + 1) * (nx + 2) + (j + 1)]; }
    double at(int i, int j) const { return v[std::size_t(i + 1) * (nx + 2) + (j + 1)]; }
};

// Materialize the bordered copy of f: wraparound ghosts in xi, mirrored
// (even or odd) ghosts in upsilon. These are exactly the ghost values that
// make the discrete mass-conservation cancellation hold.
inline BorderedField extend_ghosts(const ScalarField& f, GhostPolicy policy) {
    double sign;
    switch (policy) {
        case GhostPolicy::EvenUpsilon: sign = 1.0; break;
        case GhostPolicy::OddUpsilon: sign = -1.0; break;
        default: throw std::invalid_argument("extend_ghosts: unknown ghost policy");
    }
    const int n = f.nx;
    BorderedField b(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b.at(i, j) = f(i, j);
    for (int j = 0; j < n; ++j) {
        b.at(-1, j) = f(n - 1, j);
        b.at(n, j) = f(0, j);
    }
    for (int i = 0; i < n; ++i) {
        b.at(i, -1) = sign * f(i, 0);
        b.at(i, n) = sign * f(i, n - 1);
    }
    b.at(-1, -1) = sign * f(n - 1, 0);
    b.at(-1, n) = sign * f(n - 1, n - 1);
    b.at(n, -1) = sign * f(0, 0);
    b.at(n, n) = sign * f(0, n - 1);
    return b;
}

// Forward/backward first differences and the centered second difference.
// The second difference is evaluated as (D2+ - D2-)/k so that the identity
// d2_second == (d2_plus - d2_minus)/k holds bit-exactly.

inline ScalarField d1_plus(const ScalarField& f, GhostPolicy policy, const PhaseGrid& g) {
    BorderedField b = extend_ghosts(f, policy);
    ScalarField out(f.nx, 0.0, f.time_tag);
    for (int i = 0; i < f.nx; ++i)
        for (int j = 0; j < f.nx; ++j) out(i, j) = (b.at(i + 1, j) - b.at(i, j)) / g.h;
    return out;
}

inline ScalarField d1_minus(const ScalarField& f, GhostPolicy policy, const PhaseGrid& g) {
    BorderedField b = extend_ghosts(f, policy);
    ScalarField out(f.nx, 0.0, f.time_tag);
    for (int i = 0; i < f.nx; ++i)
        for (int j = 0; j < f.nx; ++j) out(i, j) = (b.at(i, j) - b.at(i - 1, j)) / g.h;
    return out;
}

inline ScalarField d2_plus(const ScalarField& f, GhostPolicy policy, const PhaseGrid& g) {
    BorderedField b = extend_ghosts(f, policy);
    ScalarField out(f.nx, 0.0, f.time_tag);
    for (int i = 0; i < f.nx; ++i)
        for (int j = 0; j < f.nx; ++j) out(i, j) = (b.at(i, j + 1) - b.at(i, j)) / g.k;
    return out;
}

inline ScalarField d2_minus(const ScalarField& f, GhostPolicy policy, const PhaseGrid& g) {
    BorderedField b = extend_ghosts(f, policy);
    ScalarField out(f.nx, 0.0, f.time_tag);
    for (int i = 0; i < f.nx; ++i)
        for (int j = 0; j < f.nx; ++j) out(i, j) = (b.at(i, j) - b.at(i, j - 1)) / g.k;
    return out;
}

inline ScalarField d2_second(const ScalarField& f, GhostPolicy policy, const PhaseGrid& g) {
    BorderedField b = extend_ghosts(f, policy);
    ScalarField out(f.nx, 0.0, f.time_tag);
    for (int i = 0; i < f.nx; ++i)
        for (int j = 0; j < f.nx; ++j) {
            const double fwd = (b.at(i, j + 1) - b.at(i, j)) / g.k;
            const double bwd = (b.at(i, j) - b.at(i, j - 1)) / g.k;
            out(i, j) = (fwd - bwd) / g.k;
        }
    return out;
}

// Discrete normalizer of the initial density: the Riemann sum of the
// unnormalized values on this grid. Dividing by it gives unit discrete mass,
// which is the quantity the kinetic scheme conserves.
inline double initial_density_normalizer(const InitialDensity& d, const PhaseGrid& g) {
    double s = 0.0;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.nx; ++j) s += d.unnormalized(g.xi[i], g.ups[j]);
    return s * g.cell_area();
}

inline DensityField sample_initial_density(const InitialDensity& d, const PhaseGrid& g) {
    const double c = initial_density_normalizer(d, g);
    DensityField f(g.nx, 0.0, 0.0);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.nx; ++j) f(i, j) = d.eval(g.xi[i], g.ups[j], c);
    return f;
}

}  // namespace tmfg
