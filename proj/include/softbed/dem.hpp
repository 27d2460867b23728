#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "softbed/material.hpp"
#include "softbed/particle.hpp"
#include "softbed/vec2.hpp"

namespace softbed {

/// Geometric contact between particle i and particle j (j >= 0) or wall w
/// (j = -1 - w). Normal points from i toward the other body.
struct ContactGeom {
    int i = 0;
    int j = 0;
    Vec2 normal;
    double delta_n = 0.0;   // overlap, m
    double ddelta_n = 0.0;  // overlap rate, > 0 while approaching
    double vt_rel = 0.0;    // surface-relative tangential speed along normal.perp()
};

struct Wall {
    int axis = 0;      // 0: plane of constant x, 1: constant y
    double coord = 0.0;
    double inward = 1.0; // +1 if the domain lies at larger coordinate
};

/// Pair-effective quantities of Table-2 form.
struct PairProps {
    double E_eff = 0.0;   // Pa
    double G_eff = 0.0;   // Pa
    double R_eff = 0.0;   // m
    double m_eff = 0.0;   // kg
    double restitution = 0.0;
    double friction = 0.0;
};

inline double effective_pair(double a, double b) { return a * b / (a + b); }

inline PairProps pair_props(const MaterialModel& mi, double Ti, double ri, double mass_i,
                            const MaterialModel& mj, double Tj, double rj, double mass_j) {
    PairProps p;
    const double Ei = mi.youngs_modulus(Ti);
    const double Ej = mj.youngs_modulus(Tj);
    p.E_eff = 1.0 / ((1.0 - mi.poisson_ratio * mi.poisson_ratio) / Ei +
                     (1.0 - mj.poisson_ratio * mj.poisson_ratio) / Ej);
    const double Gi = Ei / (2.0 * (1.0 + mi.poisson_ratio));
    const double Gj = Ej / (2.0 * (1.0 + mj.poisson_ratio));
    p.G_eff = 1.0 / ((2.0 - mi.poisson_ratio) / Gi + (2.0 - mj.poisson_ratio) / Gj);
    p.R_eff = effective_pair(ri, rj);
    p.m_eff = effective_pair(mass_i, mass_j);
    p.restitution = std::min(mi.restitution, mj.restitution);
    p.friction = std::min(mi.friction_coeff, mj.friction_coeff);
    return p;
}

/// wall: infinite radius and mass on the j side
inline PairProps pair_props_wall(const MaterialModel& mi, double Ti, double ri, double mass_i,
                                 const MaterialModel& wall_mat) {
    PairProps p;
    const double Ei = mi.youngs_modulus(Ti);
    const double Ew = wall_mat.youngs_modulus(Ti);
    p.E_eff = 1.0 / ((1.0 - mi.poisson_ratio * mi.poisson_ratio) / Ei +
                     (1.0 - wall_mat.poisson_ratio * wall_mat.poisson_ratio) / Ew);
    const double Gi = Ei / (2.0 * (1.0 + mi.poisson_ratio));
    const double Gw = Ew / (2.0 * (1.0 + wall_mat.poisson_ratio));
    p.G_eff = 1.0 / ((2.0 - mi.poisson_ratio) / Gi + (2.0 - wall_mat.poisson_ratio) / Gw);
    p.R_eff = ri;
    p.m_eff = mass_i;
    p.restitution = std::min(mi.restitution, wall_mat.restitution);
    p.friction = std::min(mi.friction_coeff, wall_mat.friction_coeff);
    return p;
}

/// Damping ratio for a target restitution (Tsuji form).
inline double damping_ratio(double e) {
    const double le = std::log(e);
    return -le / std::sqrt(le * le + std::numbers::pi * std::numbers::pi);
}

/// Normal force magnitude, positive repulsive. ddelta > 0 while approaching.
inline double hertz_normal_force(double delta, double ddelta, const PairProps& pp) {
    if (delta <= 0.0) return 0.0;
    const double k = (4.0 / 3.0) * pp.E_eff * std::sqrt(pp.R_eff);
    const double c = damping_ratio(pp.restitution) * std::sqrt(5.0 * pp.m_eff * k);
    return k * delta * std::sqrt(delta) + c * std::pow(delta, 0.25) * ddelta;
}

/// Tangential spring-dashpot capped by Coulomb friction. Returns the signed
/// force along the tangent acting on i and clamps the stored spring at the
/// cap when sliding.
inline double mindlin_tangential_force(double delta_n, double vt_rel, double& delta_t,
                                       double normal_mag, const PairProps& pp,
                                       bool* sliding = nullptr) {
    if (delta_n <= 0.0) return 0.0;
    const double kt = 8.0 * pp.G_eff * std::sqrt(pp.R_eff * delta_n);
    const double ct = 2.0 * std::sqrt(5.0 / 6.0) * damping_ratio(pp.restitution) *
                      std::sqrt(pp.m_eff * kt);
    double f = kt * delta_t + ct * vt_rel;
    const double cap = pp.friction * std::max(normal_mag, 0.0);
    bool slid = false;
    if (std::abs(f) > cap) {
        f = f > 0.0 ? cap : -cap;
        if (kt > 0.0) delta_t = f / kt; // spring retained at the cap
        slid = true;
    }
    if (sliding) *sliding = slid;
    return f;
}

/// Rayleigh time of one particle at its current temperature.
inline double rayleigh_time(double radius, double density, double shear_modulus,
                            double poisson) {
    return std::numbers::pi * radius * std::sqrt(density / shear_modulus) /
           (0.1631 * poisson + 0.8766);
}

class DemSystem {
public:
    DemSystem(std::vector<MaterialModel> materials, Vec2 gravity)
        : materials_(std::move(materials)), gravity_(gravity), wall_material_(coke_material()) {}

    std::vector<Particle>& particles() { return particles_; }
    const std::vector<Particle>& particles() const { return particles_; }
    const std::vector<MaterialModel>& materials() const { return materials_; }
    Vec2 gravity() const { return gravity_; }
    void set_gravity(Vec2 g) { gravity_ = g; }
    void set_walls(std::vector<Wall> w) { walls_ = std::move(w); }
    const std::vector<Wall>& walls() const { return walls_; }
    void set_global_damping(double per_second) { global_damping_ = per_second; }
    void set_wall_material(MaterialModel m) { wall_material_ = std::move(m); }

    int add_particle(Particle p) {
        p.id = int(particles_.size());
        particles_.push_back(p);
        return p.id;
    }

    /// Geometric contacts (particle-particle and particle-wall), deterministic
    /// order, no duplicates. Spatial binning keyed on the largest radius.
    std::vector<ContactGeom> detect_contacts() const {
        std::vector<ContactGeom> out;
        const std::size_t n = particles_.size();
        if (n == 0) return out;

        double rmax = 0.0, xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (const auto& p : particles_) {
            rmax = std::max(rmax, p.radius);
            xmin = std::min(xmin, p.pos.x);
            xmax = std::max(xmax, p.pos.x);
            ymin = std::min(ymin, p.pos.y);
            ymax = std::max(ymax, p.pos.y);
        }
        const double cell = 2.0 * rmax * 1.001;
        const int bx = std::max(1, int((xmax - xmin) / cell) + 1);
        const int by = std::max(1, int((ymax - ymin) / cell) + 1);

        std::vector<std::vector<int>> bins(std::size_t(bx) * by);
        auto bin_of = [&](const Vec2& pos) {
            int ix = std::clamp(int((pos.x - xmin) / cell), 0, bx - 1);
            int iy = std::clamp(int((pos.y - ymin) / cell), 0, by - 1);
            return iy * bx + ix;
        };
        for (std::size_t i = 0; i < n; ++i) bins[std::size_t(bin_of(particles_[i].pos))].push_back(int(i));

        for (int iy = 0; iy < by; ++iy) {
            for (int ix = 0; ix < bx; ++ix) {
                const auto& me = bins[std::size_t(iy) * bx + ix];
                for (int a : me) {
                    const Particle& pi = particles_[std::size_t(a)];
                    for (int dy = -1; dy <= 1; ++dy) {
                        for (int dx = -1; dx <= 1; ++dx) {
                            const int jx = ix + dx, jy = iy + dy;
                            if (jx < 0 || jx >= bx || jy < 0 || jy >= by) continue;
                            for (int b : bins[std::size_t(jy) * bx + jx]) {
                                if (b <= a) continue;
                                const Particle& pj = particles_[std::size_t(b)];
                                const Vec2 d = pj.pos - pi.pos;
                                const double dist2 = d.norm2();
                                const double rsum = pi.radius + pj.radius;
                                if (dist2 >= rsum * rsum || dist2 == 0.0) continue;
                                ContactGeom c = make_pair_contact(a, b, pi, pj, d, std::sqrt(dist2));
                                out.push_back(c);
                            }
                        }
                    }
                }
            }
        }
        // wall contacts
        for (std::size_t i = 0; i < n; ++i) {
            const Particle& p = particles_[i];
            for (std::size_t w = 0; w < walls_.size(); ++w) {
                const Wall& wall = walls_[w];
                const double coord = wall.axis == 0 ? p.pos.x : p.pos.y;
                const double gap = (coord - wall.coord) * wall.inward;
                if (gap >= p.radius) continue;
                ContactGeom c;
                c.i = int(i);
                c.j = -1 - int(w);
                c.normal = wall.axis == 0 ? Vec2{-wall.inward, 0.0} : Vec2{0.0, -wall.inward};
                c.delta_n = p.radius - gap;
                const Vec2 vci = surface_velocity(p, c.normal, p.radius - 0.5 * c.delta_n);
                c.ddelta_n = vci.dot(c.normal);
                c.vt_rel = -vci.dot(c.normal.perp());
                out.push_back(c);
            }
        }
        std::sort(out.begin(), out.end(), [](const ContactGeom& a, const ContactGeom& b) {
            return a.i != b.i ? a.i < b.i : a.j < b.j;
        });
        return out;
    }

    /// Accumulates contact forces/torques; integrates tangential history by dt.
    void compute_forces(double dt) {
        for (auto& p : particles_) {
            p.f_contact = {};
            p.torque = 0.0;
        }
        auto contacts = detect_contacts();
        std::unordered_map<std::uint64_t, double> new_hist;
        new_hist.reserve(contacts.size() * 2);
        sliding_events_ = 0;

        for (const auto& c : contacts) {
            Particle& pi = particles_[std::size_t(c.i)];
            PairProps pp;
            if (c.j >= 0) {
                const Particle& pj = particles_[std::size_t(c.j)];
                pp = pair_props(materials_[std::size_t(pi.material)], pi.surface_temperature,
                                pi.radius, pi.mass,
                                materials_[std::size_t(pj.material)], pj.surface_temperature,
                                pj.radius, pj.mass);
            } else {
                pp = pair_props_wall(materials_[std::size_t(pi.material)], pi.surface_temperature,
                                     pi.radius, pi.mass, wall_material_);
            }

            const double fn = hertz_normal_force(c.delta_n, c.ddelta_n, pp);
            const std::uint64_t key = contact_key(c.i, c.j);
            double delta_t = 0.0;
            if (auto it = history_.find(key); it != history_.end()) delta_t = it->second;
            delta_t += c.vt_rel * dt;
            bool slid = false;
            const double ft = mindlin_tangential_force(c.delta_n, c.vt_rel, delta_t, fn, pp, &slid);
            if (slid) ++sliding_events_;
            new_hist[key] = delta_t;

            const Vec2 f_on_i = -fn * c.normal + ft * c.normal.perp();
            pi.f_contact += f_on_i;
            const double arm_i = pi.radius - 0.5 * c.delta_n;
            pi.torque += (arm_i * c.normal).cross(f_on_i);
            if (c.j >= 0) {
                Particle& pj = particles_[std::size_t(c.j)];
                pj.f_contact -= f_on_i;
                const double arm_j = pj.radius - 0.5 * c.delta_n;
                pj.torque += (-arm_j * c.normal).cross(-f_on_i);
            }
        }
        history_ = std::move(new_hist); // broken contacts drop their history
        forces_valid_ = true;
    }

    /// Velocity-Verlet step. Refuses dt beyond the current Rayleigh bound.
    void step(double dt) {
        const double limit = min_rayleigh_time();
        if (dt > limit)
            throw std::runtime_error("DEM step dt " + std::to_string(dt) +
                                     " exceeds stability limit " + std::to_string(limit));
        if (!forces_valid_) compute_forces(dt);
        half_kick(dt);
        for (auto& p : particles_) {
            if (!p.frozen_x) p.pos.x += p.vel.x * dt;
            if (!p.frozen_y) p.pos.y += p.vel.y * dt;
        }
        compute_forces(dt);
        half_kick(dt);
    }

    /// safety * min Rayleigh time over particles at current temperatures
    double stable_dt(double safety) const {
        return safety * min_rayleigh_time();
    }

    double min_rayleigh_time() const {
        if (particles_.empty())
            throw std::runtime_error("stable dt undefined for an empty system");
        double t = 1e300;
        for (const auto& p : particles_) {
            const auto& m = materials_[std::size_t(p.material)];
            t = std::min(t, rayleigh_time(p.radius, m.intrinsic_density,
                                          m.shear_modulus(p.surface_temperature),
                                          m.poisson_ratio));
        }
        return t;
    }

    double max_overlap() const {
        double d = 0.0;
        for (const auto& c : detect_contacts()) d = std::max(d, c.delta_n);
        return d;
    }

    double kinetic_energy() const {
        double e = 0.0;
        for (const auto& p : particles_)
            e += 0.5 * p.mass * p.vel.norm2() + 0.5 * p.inertia * p.omega * p.omega;
        return e;
    }

    Vec2 linear_momentum() const {
        Vec2 m;
        for (const auto& p : particles_) m += p.mass * p.vel;
        return m;
    }

    long sliding_events() const { return sliding_events_; }
    void invalidate_forces() { forces_valid_ = false; }

    // tangential-history access for checkpointing
    const std::unordered_map<std::uint64_t, double>& contact_history() const { return history_; }
    void set_contact_history(std::unordered_map<std::uint64_t, double> h) {
        history_ = std::move(h);
        forces_valid_ = false;
    }

private:
    static std::uint64_t contact_key(int i, int j) {
        return (std::uint64_t(std::uint32_t(i)) << 32) | std::uint32_t(j);
    }

    static Vec2 surface_velocity(const Particle& p, const Vec2& normal, double arm) {
        return p.vel + p.omega * arm * normal.perp();
    }

    ContactGeom make_pair_contact(int a, int b, const Particle& pi, const Particle& pj,
                                  const Vec2& d, double dist) const {
        ContactGeom c;
        c.i = a;
        c.j = b;
        c.normal = d / dist;
        c.delta_n = pi.radius + pj.radius - dist;
        const Vec2 vci = surface_velocity(pi, c.normal, pi.radius - 0.5 * c.delta_n);
        const Vec2 vcj = pj.vel + pj.omega * (pj.radius - 0.5 * c.delta_n) * (-c.normal).perp();
        const Vec2 vrel = vcj - vci; // of j's surface relative to i's
        c.ddelta_n = -vrel.dot(c.normal);
        c.vt_rel = vrel.dot(c.normal.perp());
        return c;
    }

    void half_kick(double dt) {
        for (auto& p : particles_) {
            Vec2 f = p.f_contact + p.f_drag + p.mass * gravity_;
            if (global_damping_ > 0.0) f -= global_damping_ * p.mass * p.vel;
            if (p.frozen_x) { p.vel.x = 0.0; f.x = 0.0; }
            if (p.frozen_y) { p.vel.y = 0.0; f.y = 0.0; }
            p.vel += f * (0.5 * dt / p.mass);
            if (p.frozen_x && p.frozen_y) {
                p.omega = 0.0;
            } else {
                p.omega += p.torque * (0.5 * dt / p.inertia);
            }
        }
    }

    std::vector<MaterialModel> materials_;
    std::vector<Particle> particles_;
    std::vector<Wall> walls_;
    Vec2 gravity_;
    MaterialModel wall_material_;
    std::unordered_map<std::uint64_t, double> history_;
    double global_damping_ = 0.0;
    long sliding_events_ = 0;
    bool forces_valid_ = false;
};

} // namespace softbed
