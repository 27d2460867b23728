#include <doctest.h>

#include "softbed/material.hpp"

using namespace softbed;

TEST_CASE("linear-of-T property evaluates a + b*T") {
    LinearOfT f{320.0, 0.61};
    CHECK(f(0.0) == doctest::Approx(320.0));
    CHECK(f(1000.0) == doctest::Approx(930.0));
    CHECK(LinearOfT::constant(0.5)(1700.0) == doctest::Approx(0.5));
}

TEST_CASE("pellet defaults match the burden property table") {
    const MaterialModel m = pellet_material();
    CHECK(m.intrinsic_density == doctest::Approx(3000.0));
    CHECK(m.thermal_conductivity(800.0) == doctest::Approx(0.5));
    CHECK(m.heat_capacity(800.0) == doctest::Approx(1000.0));
    CHECK(m.poisson_ratio == doctest::Approx(0.24));
    CHECK(m.restitution == doctest::Approx(0.15));
    CHECK(m.friction_coeff == doctest::Approx(0.7));
    m.validate();
}

TEST_CASE("coke defaults match the burden property table") {
    const MaterialModel m = coke_material();
    CHECK(m.intrinsic_density == doctest::Approx(1000.0));
    CHECK(m.thermal_conductivity(1000.0) == doctest::Approx(0.96 + 1.83));
    CHECK(m.heat_capacity(1000.0) == doctest::Approx(930.0));
    CHECK(m.poisson_ratio == doctest::Approx(0.3));
    CHECK(m.restitution == doctest::Approx(0.2));
    CHECK(m.friction_coeff == doctest::Approx(0.9));
    m.validate();
}

TEST_CASE("stiffness curve: plateau, decay and floor") {
    const auto curve = StiffnessCurve::softening(1250.0, 1377.0, 5e7, 1e4);
    CHECK(curve(300.0) == doctest::Approx(5e7));
    CHECK(curve(1250.0) == doctest::Approx(5e7));
    CHECK(curve(1377.0) == doctest::Approx(1e4));
    CHECK(curve(2000.0) == doctest::Approx(1e4)); // constant extrapolation at the floor
    // non-increasing everywhere
    double prev = curve(1200.0);
    for (double T = 1200.0; T <= 1400.0; T += 1.0) {
        const double e = curve(T);
        CHECK(e <= prev * (1.0 + 1e-12));
        prev = e;
    }
    // log-linear midpoint: geometric mean of the endpoints
    const double mid = curve(0.5 * (1250.0 + 1377.0));
    CHECK(mid == doctest::Approx(std::sqrt(5e7 * 1e4)).epsilon(0.05));
}

TEST_CASE("stiffness curve rejects bad anchor tables") {
    CHECK_THROWS(StiffnessCurve({300.0, 200.0}, {1e7, 1e6}));
    CHECK_THROWS(StiffnessCurve({200.0, 300.0}, {1e6, 1e7})); // increasing modulus
    CHECK_THROWS(StiffnessCurve({}, {}));
    CHECK_THROWS(StiffnessCurve({200.0}, {-1.0}));
}

TEST_CASE("shear modulus follows E/(2(1+nu))") {
    const MaterialModel m = pellet_material();
    CHECK(m.shear_modulus(300.0) == doctest::Approx(5e7 / (2.0 * 1.24)));
}

TEST_CASE("material validation catches out-of-range values") {
    MaterialModel m = pellet_material();
    m.restitution = 0.0;
    CHECK_THROWS(m.validate());
    m = pellet_material();
    m.poisson_ratio = 0.5;
    CHECK_THROWS(m.validate());
    m = pellet_material();
    m.intrinsic_density = -1.0;
    CHECK_THROWS(m.validate());
}
