#include <doctest.h>

#include "softbed/scenario.hpp"

using namespace softbed;

namespace {
const std::string kScenarioDir = SOFTBED_SCENARIO_DIR;

std::string minimal_scenario() {
    return R"([domain]
width = 0.2
height = 0.3
thickness = 0.02

[material pellet]
intrinsic_density = 3000
thermal_conductivity = 0.5
heat_capacity = 1000
poisson_ratio = 0.24
restitution = 0.15
friction = 0.7
stiffness = softening 1250 1377

[layer 1]
material = pellet
type = ore
diameter_min = 0.011
diameter_max = 0.013
y_min = 0.0
y_max = 0.1

[inlet]
side = left
from = 0.0
to = 0.05
velocity = 2
temperature = 1800

[grid fine]
nx = 20
ny = 30
)";
}
} // namespace

TEST_CASE("bundled desk scenario loads and validates") {
    const Scenario sc = load_scenario(kScenarioDir + "/ebf_desk.cfg");
    CHECK(sc.width == doctest::Approx(0.2));
    CHECK(sc.thickness == doctest::Approx(0.02));
    REQUIRE(sc.materials.count("pellet") == 1);
    REQUIRE(sc.materials.count("coke") == 1);
    CHECK(sc.layers.size() == 3);
    CHECK(sc.layers[1].type == LayerType::Ore);
    CHECK(sc.layers[0].freeze == FreezeMode::X); // coke defaults to frozen-x
    CHECK(sc.inlet.side == Side::Left);
    CHECK(sc.run.trigger_temperature == doctest::Approx(1377.0));
    CHECK(sc.probes.size() == 2);
    CHECK(sc.zone_y_max > sc.zone_y_min);
    // coke conductivity parsed as a + b*T
    CHECK(sc.material("coke").thermal_conductivity(1000.0) ==
          doctest::Approx(0.96 + 1.83));
}

TEST_CASE("crucible scenario loads") {
    const Scenario sc = load_scenario(kScenarioDir + "/crucible.cfg");
    CHECK(sc.load_pressure == doctest::Approx(5000.0));
    CHECK(sc.inlet.velocity == doctest::Approx(0.0));
}

TEST_CASE("overrides reach into nested sections") {
    const Scenario sc = load_scenario(kScenarioDir + "/ebf_desk.cfg",
                                      {"run.t_end=3", "material.pellet.friction=0.55"});
    CHECK(sc.run.t_end == doctest::Approx(3.0));
    CHECK(sc.material("pellet").friction_coeff == doctest::Approx(0.55));
}

TEST_CASE("scenario text round-trips through the builder") {
    const Scenario sc = build_scenario(ConfigMap::parse_string(minimal_scenario()));
    CHECK(sc.layers.size() == 1);
    CHECK(sc.layers[0].freeze == FreezeMode::None); // ore defaults to mobile
    const auto& E = sc.material("pellet").youngs_modulus;
    CHECK(E(300.0) == doctest::Approx(5e7));
    CHECK(E(1377.0) == doctest::Approx(1e4));
}

TEST_CASE("unknown sections and keys are rejected") {
    auto cfg = ConfigMap::parse_string(minimal_scenario());
    cfg.apply_override("mystery.knob=1");
    CHECK_THROWS(build_scenario(cfg));

    auto cfg2 = ConfigMap::parse_string(minimal_scenario());
    cfg2.apply_override("domain.depth=5");
    CHECK_THROWS(build_scenario(cfg2));
}

TEST_CASE("validation catches inconsistent scenarios") {
    auto overlap = ConfigMap::parse_string(minimal_scenario());
    overlap.apply_override("layer.2.material=pellet");
    overlap.apply_override("layer.2.type=ore");
    overlap.apply_override("layer.2.diameter_min=0.011");
    overlap.apply_override("layer.2.diameter_max=0.013");
    overlap.apply_override("layer.2.y_min=0.05");
    overlap.apply_override("layer.2.y_max=0.15");
    CHECK_THROWS(build_scenario(overlap)); // vertical overlap with layer 1

    auto badmat = ConfigMap::parse_string(minimal_scenario());
    badmat.apply_override("layer.1.material=slag");
    CHECK_THROWS(build_scenario(badmat));

    auto baddia = ConfigMap::parse_string(minimal_scenario());
    baddia.apply_override("layer.1.diameter_max=0.001");
    CHECK_THROWS(build_scenario(baddia));
}

TEST_CASE("property expression parsing") {
    CHECK(detail::parse_linear_of_T("0.96 + 0.00183*T", "t")(1000.0) ==
          doctest::Approx(2.79));
    CHECK(detail::parse_linear_of_T("42", "t")(500.0) == doctest::Approx(42.0));
    CHECK_THROWS(detail::parse_linear_of_T("0.96 + x*T", "t"));

    const auto table = detail::parse_stiffness("table 300:5e7 1300:1e7 1377:1e4", "t");
    CHECK(table(300.0) == doctest::Approx(5e7));
    CHECK(table(1377.0) == doctest::Approx(1e4));
    CHECK(table(800.0) == doctest::Approx(5e7 - (5e7 - 1e7) * 0.5).epsilon(1e-6));
    CHECK_THROWS(detail::parse_stiffness("wobbly 1 2", "t"));
    CHECK_THROWS(detail::parse_stiffness("table 300-5e7", "t"));
}
