#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tmfg/hamiltonian.hpp"

using namespace tmfg;

namespace {

DensityField uniform_density(const PhaseGrid& g) {
    return DensityField(g.nx, 1.0 / (g.length * g.s_max), 0.0);
}

}  // namespace

TEST_CASE("congestion coefficient") {
    const ModelParams p = default_params();
    const PhaseGrid g = PhaseGrid::make(50, p);
    const CongestionKernel phi;

    SECTION("uniform density reproduces the closed-form ring integral") {
        // int_0^L exp(cos((xi-s)/100))/100 ds / L = 2 pi I0(1) / L for every xi
        const double expected = 2.0 * kPi * oracles::bessel_i0(1.0) / g.length;
        const CongestionCoefficient c = congestion_coefficient(uniform_density(g), g, phi);
        for (int i = 0; i < g.nx; ++i) CHECK(c.c[i] == Catch::Approx(expected).epsilon(1e-12));
        CHECK(expected == Catch::Approx(0.012661).epsilon(1e-4));
    }
    SECTION("a unit point mass sifts the kernel") {
        const int i0 = 13, j0 = 29;
        DensityField rho = DensityField::zeros(g.nx);
        rho(i0, j0) = 1.0 / g.cell_area();
        const CongestionCoefficient c = congestion_coefficient(rho, g, phi);
        for (int i = 0; i < g.nx; ++i)
            CHECK(c.c[i] == Catch::Approx(phi(g.xi[i], g.xi[i0])).epsilon(1e-12));
    }
    SECTION("zero kernel gives zero coefficient") {
        const CongestionCoefficient c =
            congestion_coefficient(uniform_density(g), g, CongestionKernel::zero());
        for (double x : c.c) CHECK(x == 0.0);
    }
    SECTION("cached operator matches the direct computation") {
        const CongestionOperator op(g, phi);
        std::mt19937 rng(9);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        DensityField rho = DensityField::zeros(g.nx);
        for (double& x : rho.v) x = uni(rng);
        const CongestionCoefficient a = congestion_coefficient(rho, g, phi);
        const CongestionCoefficient b = op.apply(rho);
        for (int i = 0; i < g.nx; ++i) CHECK(a.c[i] == Catch::Approx(b.c[i]).epsilon(1e-14));
    }
    SECTION("linearity in the density") {
        std::mt19937 rng(10);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        DensityField r1 = DensityField::zeros(g.nx), r2 = DensityField::zeros(g.nx);
        for (double& x : r1.v) x = uni(rng);
        for (double& x : r2.v) x = uni(rng);
        const double a = 0.3;
        DensityField mix = DensityField::zeros(g.nx);
        for (std::size_t n = 0; n < mix.v.size(); ++n)
            mix.v[n] = a * r1.v[n] + (1.0 - a) * r2.v[n];
        const auto c1 = congestion_coefficient(r1, g, phi);
        const auto c2 = congestion_coefficient(r2, g, phi);
        const auto cm = congestion_coefficient(mix, g, phi);
        for (int i = 0; i < g.nx; ++i)
            CHECK(cm.c[i] == Catch::Approx(a * c1.c[i] + (1.0 - a) * c2.c[i]).epsilon(1e-10));
    }
}

TEST_CASE("running cost") {
    const ModelParams p = default_params();
    CHECK(running_cost(0.0, 0.0, 0.0, 0.3, p) == 0.0);
    CHECK(running_cost(20.0, 0.0, 0.0, 0.012661, p) == Catch::Approx(-4.74678).epsilon(1e-6));
    CHECK(running_cost(0.0, 2.0, 0.0, 0.9, p) == 2.0);
}

TEST_CASE("closed-form control and disturbance") {
    const ModelParams p = default_params();
    CHECK(optimal_control(0.0, p) == 0.0);
    CHECK(optimal_control(20.0, p) == -10.0);
    CHECK(optimal_control(-5.0, p) == 5.0);
    CHECK(worst_disturbance(0.0, p) == 0.0);
    CHECK(worst_disturbance(40.0, p) == 2.0);
    CHECK(worst_disturbance(16.0, p) == 1.0);
}

TEST_CASE("Isaacs value") {
    const ModelParams p = default_params();
    SECTION("hand-evaluated point") {
        // p = (0, 1), v = 0: u* = -1, w* = 1/16; value = 1/2 - 1/32 - 15/16
        CHECK(hamiltonian_value(0.0, 0.3, 0.0, 1.0, p) == Catch::Approx(-0.46875).margin(1e-14));
    }
    SECTION("trivial zero") {
        ModelParams q = p;
        q.beta = std::numeric_limits<double>::infinity();
        CHECK(hamiltonian_value(0.0, 0.0, 0.0, 0.0, q) == 0.0);
    }
}

TEST_CASE("saddle point against the grid-search oracle") {
    const ModelParams p = default_params();
    std::mt19937 rng(123);
    std::uniform_real_distribution<double> up2(-25.0, 25.0), up1(-10.0, 10.0), uv(0.0, 30.0),
        uc(0.0, 0.1);

    SECTION("hoisted and literal scans agree on a coarse grid") {
        for (int trial = 0; trial < 25; ++trial) {
            const double v = uv(rng), c = uc(rng), p1 = up1(rng), p2 = up2(rng);
            const auto fast = oracles::grid_search_saddle(v, c, p1, p2, p, 1e-2, 1e-2);
            const auto lit = oracles::grid_search_saddle_literal(v, c, p1, p2, p, 1e-2, 1e-2);
            CHECK(fast.u == lit.u);
            CHECK(fast.w == lit.w);
            CHECK(fast.value == Catch::Approx(lit.value).margin(1e-12));
        }
    }
    SECTION("closed form matches the fine grid search") {
        for (int trial = 0; trial < 200; ++trial) {
            const double v = uv(rng), c = uc(rng), p1 = up1(rng), p2 = up2(rng);
            const auto grid = oracles::grid_search_saddle(v, c, p1, p2, p, 1e-3, 1e-3);
            const double us = optimal_control(p2, p);
            const double ws = worst_disturbance(p2, p);
            const double hv = hamiltonian_value(v, c, p1, p2, p);
            CHECK(std::abs(us - grid.u) <= 1e-3 + 1e-12);
            CHECK(std::abs(ws - grid.w) <= 1e-3 + 1e-12);
            CHECK(std::abs(hv - grid.value) <= 1e-5);
        }
    }
    SECTION("saddle inequalities hold on a subsampled grid") {
        for (int trial = 0; trial < 50; ++trial) {
            const double v = uv(rng), c = uc(rng), p1 = up1(rng), p2 = up2(rng);
            const double us = optimal_control(p2, p);
            const double ws = worst_disturbance(p2, p);
            const double hv = hamiltonian_value(v, c, p1, p2, p);
            for (double u = p.u_min; u <= p.u_max + 1e-12; u += 0.1)
                CHECK(hv <= oracles::raw_pre_hamiltonian(v, u, ws, c, p1, p2, p) + 1e-10);
            for (double w = -p.w_max; w <= p.w_max + 1e-12; w += 0.1)
                CHECK(hv >= oracles::raw_pre_hamiltonian(v, us, w, c, p1, p2, p) - 1e-10);
        }
    }
    SECTION("outputs always sit inside the boxes") {
        for (int trial = 0; trial < 1000; ++trial) {
            const double p2 = std::uniform_real_distribution<double>(-1e4, 1e4)(rng);
            const double us = optimal_control(p2, p);
            const double ws = worst_disturbance(p2, p);
            CHECK((us >= p.u_min && us <= p.u_max));
            CHECK((ws >= -p.w_max && ws <= p.w_max));
        }
    }
}

TEST_CASE("numerical Hamiltonian") {
    const ModelParams p = default_params();
    const PhaseGrid g = PhaseGrid::make(32, p);

    SECTION("constant value, zero kernel, no speed preference: identically zero") {
        ModelParams q = p;
        q.beta = std::numeric_limits<double>::infinity();
        CongestionCoefficient c{0.0, std::vector<double>(g.nx, 0.0)};
        const ScalarField H = numerical_hamiltonian(ScalarField::constant(g.nx, 5.0), c, g, q);
        CHECK(max_abs(H) == 0.0);
    }
    SECTION("constant value, uniform density: rows scale with speed") {
        const CongestionCoefficient c = congestion_coefficient(
            DensityField(g.nx, 1.0 / (g.length * g.s_max), 0.0), g, CongestionKernel{});
        const ScalarField H = numerical_hamiltonian(ScalarField::constant(g.nx, 1.0), c, g, p);
        for (int i = 0; i < g.nx; ++i)
            for (int j = 0; j < g.nx; ++j)
                CHECK(H(i, j) == Catch::Approx((c.c[i] - 0.25) * g.ups[j]).epsilon(1e-12));
    }
    SECTION("adding a constant to the value leaves it unchanged") {
        std::mt19937 rng(21);
        std::uniform_int_distribution<int> bits(0, (1 << 20) - 1);
        ScalarField V = ScalarField::zeros(g.nx);
        for (double& x : V.v) x = std::ldexp(bits(rng), -20);  // dyadic, so +1.0 is exact
        ScalarField Vs = V;
        for (double& x : Vs.v) x += 1.0;
        CongestionCoefficient c{0.0, std::vector<double>(g.nx, 0.017)};
        const ScalarField a = numerical_hamiltonian(V, c, g, p);
        const ScalarField b = numerical_hamiltonian(Vs, c, g, p);
        for (std::size_t n = 0; n < a.v.size(); ++n) CHECK(a.v[n] == b.v[n]);
    }
}

TEST_CASE("extracted feedback fields respect the boxes") {
    const ModelParams p = default_params();
    const PhaseGrid g = PhaseGrid::make(24, p);
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> uni(-50.0, 50.0);
    ScalarField V = ScalarField::zeros(g.nx);
    for (double& x : V.v) x = uni(rng);
    const ControlFields cf = extract_controls(V, g, p);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.nx; ++j) {
            CHECK((cf.u_star(i, j) >= p.u_min && cf.u_star(i, j) <= p.u_max));
            CHECK((cf.w_star(i, j) >= -p.w_max && cf.w_star(i, j) <= p.w_max));
        }
}
