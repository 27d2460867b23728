#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "softbed/vec2.hpp"

namespace softbed {

struct Particle {
    int id = 0;
    int material = 0;      // index into the run's material table
    int layer = -1;        // scenario layer index; -1 for load pseudo-particles
    double radius = 0.0;   // m
    double mass = 0.0;     // kg
    double inertia = 0.0;  // kg m^2, solid sphere
    Vec2 pos;
    Vec2 vel;
    double omega = 0.0;    // out-of-plane angular velocity, rad/s
    double surface_temperature = 300.0; // K, owned by the thermal module

    // per-step force accumulators
    Vec2 f_contact;
    Vec2 f_drag;
    double torque = 0.0;

    bool frozen_x = false;
    bool frozen_y = false;
    bool is_load = false;  // pseudo-particle realizing the top load

    double volume() const {
        return (4.0 / 3.0) * std::numbers::pi * radius * radius * radius;
    }
    double disc_area() const { return std::numbers::pi * radius * radius; }
    double surface_area() const { return 4.0 * std::numbers::pi * radius * radius; }

    static Particle make(int id, int material, double radius, double density, Vec2 pos) {
        Particle p;
        p.id = id;
        p.material = material;
        p.radius = radius;
        p.mass = density * (4.0 / 3.0) * std::numbers::pi * radius * radius * radius;
        p.inertia = 0.4 * p.mass * radius * radius;
        p.pos = pos;
        return p;
    }
};

} // namespace softbed
