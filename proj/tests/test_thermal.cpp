#include <doctest.h>

#include <cmath>

#include "softbed/thermal.hpp"

using namespace softbed;

TEST_CASE("series-resistance conduction flux") {
    // 100 K across 24 mm, both conductivities 0.5 W/m/K
    CHECK(conduction_flux(500.0, 400.0, 0.5, 0.5, 0.024) ==
          doctest::Approx(1041.6667).epsilon(1e-6));
    // antisymmetry
    CHECK(conduction_flux(400.0, 500.0, 0.5, 0.5, 0.024) ==
          doctest::Approx(-1041.6667).epsilon(1e-6));
}

TEST_CASE("radiative flux against a cold surrounding") {
    std::vector<RadiativeNeighbor> nb{{1, 0.0, 1.0}};
    CHECK(radiation_flux(1000.0, nb, 1.0) == doctest::Approx(56703.74).epsilon(1e-5));
    // emissivity scales linearly
    CHECK(radiation_flux(1000.0, nb, 0.8) == doctest::Approx(0.8 * 56703.74).epsilon(1e-5));
}

TEST_CASE("sphere view factor limits") {
    CHECK(sphere_view_factor(0.006, 1e6) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(sphere_view_factor(0.006, 0.006) == doctest::Approx(0.5));
    CHECK(sphere_view_factor(0.006, 0.012) ==
          doctest::Approx(0.5 * (1.0 - std::sqrt(0.75))));
}

TEST_CASE("shell geometry adds up") {
    const MaterialModel m = pellet_material();
    RadialThermalState th(&m, 0.006, 8, 300.0);
    double V = 0.0;
    for (int i = 0; i < 8; ++i) V += th.shell_volume(i);
    CHECK(V == doctest::Approx((4.0 / 3.0) * std::numbers::pi * std::pow(0.006, 3)));
    CHECK(th.surface_area() == doctest::Approx(4.0 * std::numbers::pi * 0.006 * 0.006));
}

TEST_CASE("enthalpy balance is exact per step, including linear cp") {
    MaterialModel m = coke_material(); // cp = 320 + 0.61 T
    RadialThermalState th(&m, 0.008, 10, 500.0);
    double absorbed_total = 0.0;
    const double H0 = th.enthalpy();
    ThermalBoundaryInputs bc;
    bc.fixed_power = 35.0;
    for (int k = 0; k < 200; ++k) {
        const double dH = th.advance(bc, 0.01);
        absorbed_total += dH;
        const double balance = th.enthalpy() - H0 - absorbed_total;
        CHECK(std::abs(balance) <= 1e-8 * std::max(std::abs(absorbed_total), 1.0));
    }
    CHECK(absorbed_total == doctest::Approx(35.0 * 2.0));
}

TEST_CASE("lumped capacitance limit, Bi < 0.01") {
    MaterialModel m = pellet_material(); // cp constant, lambda 0.5
    const double r = 0.006;
    const double h = 0.5; // Bi = h r / (3 lambda) ~ 0.002
    RadialThermalState th(&m, r, 10, 400.0);
    const double T_inf = 1000.0;
    const double A = th.surface_area();
    const double mass = m.intrinsic_density * (4.0 / 3.0) * std::numbers::pi * r * r * r;
    const double tau = mass * m.heat_capacity(0.0) / (h * A);
    ThermalBoundaryInputs bc;
    bc.htc = h;
    bc.T_inf = T_inf;
    const double dt = tau / 2000.0;
    double t = 0.0;
    while (t < 5.0 * tau) {
        th.advance(bc, dt);
        t += dt;
    }
    const double expected = T_inf + (400.0 - T_inf) * std::exp(-t / tau);
    CHECK(th.center_temperature() == doctest::Approx(expected).epsilon(0.01));
    CHECK(th.surface_temperature() == doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("radial conduction matches the series solution at Fo = 0.1") {
    MaterialModel m = pellet_material();
    const double r = 0.01;
    const double alpha = m.thermal_conductivity(0.0) / (m.intrinsic_density * m.heat_capacity(0.0));
    RadialThermalState th(&m, r, 60, 0.0); // theta = 1 initially, surface held at 0
    ThermalBoundaryInputs bc;
    bc.htc = 1e9; // effectively Dirichlet
    bc.T_inf = 1.0;
    const double Fo_target = 0.1;
    const double t_end = Fo_target * r * r / alpha;
    const int steps = 4000;
    for (int k = 0; k < steps; ++k) th.advance(bc, t_end / steps);

    // center temperature of the unit-step sphere problem
    double theta = 0.0;
    for (int n = 1; n <= 50; ++n) {
        const double s = (n % 2 == 1) ? 1.0 : -1.0;
        theta += 2.0 * s * std::exp(-double(n) * n * std::numbers::pi * std::numbers::pi * Fo_target);
    }
    const double expected_center = 1.0 - theta; // T_inf = 1, T0 = 0
    CHECK(th.center_temperature() == doctest::Approx(expected_center).epsilon(0.005));
}

TEST_CASE("slab geometry reduces to the 1D wall solution") {
    MaterialModel m = pellet_material();
    RadialThermalState th(&m, 0.01, 40, 0.0, 0);
    ThermalBoundaryInputs bc;
    bc.htc = 1e9;
    bc.T_inf = 1.0;
    const double alpha = m.thermal_conductivity(0.0) / (m.intrinsic_density * m.heat_capacity(0.0));
    const double Fo = 0.3;
    const double t_end = Fo * 0.01 * 0.01 / alpha;
    for (int k = 0; k < 3000; ++k) th.advance(bc, t_end / 3000);
    // symmetric wall: theta_center = sum 4/(n pi) sin(n pi / 2) exp(-(n pi / 2)^2 Fo)
    double theta = 0.0;
    for (int n = 1; n <= 99; n += 2) {
        const double lam = 0.5 * n * std::numbers::pi;
        const double s = ((n - 1) / 2 % 2 == 0) ? 1.0 : -1.0;
        theta += 2.0 / lam * s * std::exp(-lam * lam * Fo);
    }
    CHECK(th.center_temperature() == doctest::Approx(1.0 - theta).epsilon(0.005));
}

TEST_CASE("pairwise conduction powers are antisymmetric") {
    const double area = 1e-5, path = 0.012;
    const double p_ij = conduction_flux(900.0, 700.0, 0.5, 2.79, path) * area;
    const double p_ji = conduction_flux(700.0, 900.0, 2.79, 0.5, path) * area;
    CHECK(p_ij + p_ji == doctest::Approx(0.0).epsilon(1e-15));
}
