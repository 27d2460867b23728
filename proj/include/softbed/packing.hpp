#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "softbed/dem.hpp"
#include "softbed/scenario.hpp"

namespace softbed {

/// Deterministic uniform draws; the bit path from the engine to the double is
/// fixed so packings reproduce bit-exactly across platforms.
class PackingRng {
public:
    explicit PackingRng(std::uint64_t seed) : eng_(seed) {}
    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

private:
    std::mt19937_64 eng_;
};

inline std::vector<Wall> domain_walls(const Scenario& sc) {
    // left, right, bottom; top stays open
    return {{0, 0.0, 1.0}, {0, sc.width, -1.0}, {1, 0.0, 1.0}};
}

/// highest material point of the bed (load pseudo-particles excluded)
inline double bed_height(const DemSystem& sys) {
    double h = 0.0;
    for (const auto& p : sys.particles())
        if (!p.is_load) h = std::max(h, p.pos.y + p.radius);
    return h;
}

/// Relaxes the system under gravity with strong global damping until the
/// kinetic energy per particle falls below ke_tol, then quenches velocities.
inline void settle(DemSystem& sys, double safety = 0.2, double ke_tol = 1e-8,
                   double max_time = 20.0, double damping = 25.0) {
    sys.set_global_damping(damping);
    double t = 0.0;
    int check = 0;
    while (t < max_time) {
        const double dt = sys.stable_dt(safety);
        sys.step(dt);
        t += dt;
        if (++check % 50 == 0) {
            const double ke = sys.kinetic_energy() / double(sys.particles().size());
            if (ke < ke_tol && t > 0.05) break;
        }
    }
    sys.set_global_damping(0.0);
    for (auto& p : sys.particles()) {
        p.vel = {};
        p.omega = 0.0;
    }
    sys.invalidate_forces();
}

/// Seeds one layer of particles on a jittered lattice inside its band.
/// Ore layers stay fully mobile and settle dense; coke layers freeze the
/// horizontal coordinate and settle into loose vertical stacks.
inline void seed_layer(DemSystem& sys, const Scenario& sc, const LayerSpec& layer,
                       int layer_index, PackingRng& rng) {
    const double x0 = layer.x_min;
    const double x1 = layer.x_max < 0.0 ? sc.width : layer.x_max;
    const double r_max = 0.5 * layer.diameter_max;
    // mobile layers start near-dense; frozen-x layers keep a wide pitch so the
    // rained columns stay loose
    const double pitch_factor =
        layer.spacing > 0.0 ? layer.spacing : (layer.freeze == FreezeMode::None ? 1.05 : 1.21);
    const double pitch = layer.diameter_max * pitch_factor;
    const int cols = std::max(1, int((x1 - x0 - 2.0 * r_max) / pitch) + 1);
    const int rows = std::max(1, int((layer.y_max - layer.y_min - 2.0 * r_max) / pitch) + 1);
    const double jitter = 0.02 * layer.diameter_max;

    int mat_index = -1;
    {
        int k = 0;
        for (const auto& [name, m] : sc.materials) {
            if (name == layer.material) mat_index = k;
            ++k;
        }
    }
    if (mat_index < 0) throw std::runtime_error("layer material missing from table");
    const MaterialModel& mat = sc.material(layer.material);

    for (int j = 0; j < rows; ++j) {
        // odd rows shifted half a pitch for a denser start; frozen-x layers
        // keep aligned columns so the stacks stay loose
        const double x_off =
            (layer.freeze == FreezeMode::None && j % 2 == 1) ? 0.5 * pitch : 0.0;
        for (int i = 0; i < cols; ++i) {
            const double r = 0.5 * rng.uniform(layer.diameter_min, layer.diameter_max);
            double x = x0 + r_max + i * pitch + x_off + rng.uniform(-jitter, jitter);
            double y = layer.y_min + r_max + j * pitch + rng.uniform(-jitter, jitter);
            if (x < x0 + r || x > x1 - r) continue;
            if (y - r < layer.y_min || y + r > layer.y_max) continue;
            Particle p = Particle::make(0, mat_index, r, mat.intrinsic_density, {x, y});
            p.layer = layer_index;
            p.surface_temperature = sc.initial_temperature;
            if (layer.freeze == FreezeMode::X) p.frozen_x = true;
            if (layer.freeze == FreezeMode::XY) p.frozen_x = p.frozen_y = true;
            sys.add_particle(p);
        }
    }
}

/// Builds the full bed: every layer seeded in its band, then one global
/// damped settle. Deterministic for a fixed seed.
inline void generate_packing(DemSystem& sys, const Scenario& sc, std::uint64_t seed = 42,
                             double settle_time = 20.0) {
    sys.set_walls(domain_walls(sc));
    PackingRng rng(seed);
    for (std::size_t li = 0; li < sc.layers.size(); ++li)
        seed_layer(sys, sc, sc.layers[li], int(li), rng);
    if (sys.particles().empty()) throw std::runtime_error("packing produced no particles");
    settle(sys, sc.run.dem_safety, 1e-8, settle_time);
}

/// Realizes the top load as a row of frozen-x pseudo-particles whose total
/// weight matches pressure * width * thickness to within 0.5%.
inline void apply_load(DemSystem& sys, const Scenario& sc) {
    if (sc.load_pressure <= 0.0) return;
    const double g = std::abs(sc.gravity.y);
    if (g <= 0.0) throw std::runtime_error("load requires vertical gravity");
    const double target_mass = sc.load_pressure * sc.width * sc.thickness / g;

    const double r = 0.5 * sc.max_particle_diameter();
    const int count = std::max(1, int(std::floor(sc.width / (2.0 * r))));
    const double mass_each = target_mass / count;
    const double top = bed_height(sys);

    int load_mat = 0; // material only matters for contact stiffness; reuse index 0
    for (int i = 0; i < count; ++i) {
        Particle p;
        p.material = load_mat;
        p.layer = -1;
        p.radius = r;
        p.mass = mass_each;
        p.inertia = 0.4 * p.mass * r * r;
        p.pos = {(i + 0.5) * sc.width / count, top + r * 1.001};
        p.surface_temperature = sc.initial_temperature;
        p.frozen_x = true;
        p.is_load = true;
        sys.add_particle(p);
    }
    settle(sys, sc.run.dem_safety, 1e-8, 10.0);
}

inline double load_mass(const DemSystem& sys) {
    double m = 0.0;
    for (const auto& p : sys.particles())
        if (p.is_load) m += p.mass;
    return m;
}

/// fractional bed shrinkage relative to a reference height
inline double bed_shrinkage(double h_ref, double h_now) {
    return h_ref > 0.0 ? (h_ref - h_now) / h_ref : 0.0;
}

} // namespace softbed
