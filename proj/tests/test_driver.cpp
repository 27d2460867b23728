#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "softbed/driver.hpp"

using namespace softbed;

namespace {

/// small coupled case: one ore layer, hot cross-flow, everything mobile
Scenario tiny_coupled_scenario() {
    return build_scenario(ConfigMap::parse_string(R"([domain]
width = 0.1
height = 0.15
thickness = 0.02

[material pellet]
intrinsic_density = 3000
thermal_conductivity = 0.5
heat_capacity = 400
poisson_ratio = 0.24
restitution = 0.15
friction = 0.7
emissivity = 0.8
stiffness = constant 5e7

[layer 1]
material = pellet
type = ore
diameter_min = 0.011
diameter_max = 0.013
y_min = 0.0
y_max = 0.05

[inlet]
side = left
from = 0.005
to = 0.045
velocity = 3
temperature = 1600

[outlet]
side = top

[initial]
temperature = 1100

[run]
t_end = 2
dt_max = 5e-4
n_shell = 5
probe_interval = 0.01

[grid fine]
nx = 10
ny = 15

[grid coarse]
nx = 2
ny = 3

[probe A]
x = 0.05
y = 0.03

[zone]
y_min = 0.005
y_max = 0.045
)"));
}

std::string particle_state_digest(const DemSystem& dem) {
    std::string s;
    for (const auto& p : dem.particles()) {
        const double v[6] = {p.pos.x, p.pos.y, p.vel.x, p.vel.y, p.omega,
                             p.surface_temperature};
        s.append(reinterpret_cast<const char*>(v), sizeof v);
    }
    return s;
}

} // namespace

TEST_CASE("coupled step: antisymmetry and enthalpy closure") {
    SimDriver driver(tiny_coupled_scenario(), 42);
    driver.prepare(6.0);
    double drag_scale = 0.0, heat_scale = 0.0;
    for (int k = 0; k < 5; ++k) {
        const StepDiagnostics d = driver.step();
        for (const auto& p : driver.dem().particles())
            drag_scale = std::max(drag_scale, p.f_drag.norm());
        heat_scale = std::max(heat_scale, std::abs(d.gas.energy_sink));
        CHECK(d.drag_antisymmetry <= 1e-12 * std::max(drag_scale, 1.0) * 100);
        CHECK(d.heat_antisymmetry <= 1e-12 * std::max(heat_scale, 1.0));
        CHECK(std::abs(d.pairwise_heat_sum) <= 1e-9);
        CHECK(d.particle_enthalpy_residual <= 1e-8);
        CHECK(d.gas.continuity_residual <= 1e-6);
    }
    CHECK(drag_scale > 0.0); // flow actually pushes on the bed
}

TEST_CASE("particles heat up toward the gas temperature") {
    SimDriver driver(tiny_coupled_scenario(), 42);
    driver.prepare(6.0);
    const double T0 = driver.dem().particles()[0].surface_temperature;
    for (int k = 0; k < 100; ++k) driver.step();
    double T_mean = 0.0;
    int n = 0;
    for (const auto& p : driver.dem().particles()) {
        T_mean += p.surface_temperature;
        ++n;
    }
    T_mean /= n;
    CHECK(T_mean > T0 + 0.05);  // warming
    CHECK(T_mean < 1600.0);     // bounded by the inlet temperature
}

TEST_CASE("same seed gives bit-identical trajectories") {
    SimDriver a(tiny_coupled_scenario(), 42);
    SimDriver b(tiny_coupled_scenario(), 42);
    a.prepare(6.0);
    b.prepare(6.0);
    for (int k = 0; k < 10; ++k) {
        a.step();
        b.step();
    }
    CHECK(particle_state_digest(a.dem()) == particle_state_digest(b.dem()));
    CHECK(a.gas().p == b.gas().p);
    CHECK(a.gas().T == b.gas().T);
}

TEST_CASE("checkpoint restart is bit-exact") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "softbed_ckpt.bin").string();

    SimDriver a(tiny_coupled_scenario(), 42);
    a.prepare(6.0);
    for (int k = 0; k < 4; ++k) a.step();
    a.save_checkpoint(path);
    for (int k = 0; k < 3; ++k) a.step();

    SimDriver b(tiny_coupled_scenario(), 42);
    b.restore_checkpoint(path);
    CHECK(b.time() < a.time()); // restored mid-run, behind the live driver
    for (int k = 0; k < 3; ++k) b.step();

    CHECK(particle_state_digest(a.dem()) == particle_state_digest(b.dem()));
    CHECK(a.gas().p == b.gas().p);
    CHECK(a.gas().u == b.gas().u);
    CHECK(a.gas().T == b.gas().T);
    CHECK(a.time() == b.time());
    std::remove(path.c_str());
}

TEST_CASE("checkpoint rejects foreign files") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "softbed_bogus.bin").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "not a checkpoint";
    }
    SimDriver d(tiny_coupled_scenario(), 42);
    CHECK_THROWS(d.restore_checkpoint(path));
    std::remove(path.c_str());
}

TEST_CASE("short run produces probe output and a summary") {
    namespace fs = std::filesystem;
    const std::string outdir = (fs::temp_directory_path() / "softbed_run").string();
    fs::remove_all(outdir);

    Scenario sc = tiny_coupled_scenario();
    sc.run.t_end = 0.05;
    sc.run.snapshot_tstars = {0.0, 1.0};
    SimDriver driver(sc, 42);
    driver.prepare(6.0);
    const RunSummary sum = driver.run(outdir);
    CHECK(sum.t_final >= 0.05);
    CHECK(sum.steps > 0);
    CHECK(fs::exists(outdir + "/probes.csv"));
    CHECK(fs::exists(outdir + "/gas_t0.vtk"));
    CHECK(fs::exists(outdir + "/manifest.json") == false); // manifest is the CLI's job
    fs::remove_all(outdir);
}

TEST_CASE("gas-only grid study ranks resolutions") {
    Scenario sc = tiny_coupled_scenario();
    auto rows = grid_study(sc, {1, 2}, 40);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].nx == 10);
    CHECK(rows[1].nx == 20);
    CHECK(rows[1].l2_vs_finest == doctest::Approx(0.0));
    CHECK(rows[0].l2_vs_finest >= 0.0);
}
