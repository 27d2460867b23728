#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "softbed/gas.hpp"
#include "softbed/material.hpp"
#include "softbed/particle.hpp"
#include "softbed/thermal.hpp"

namespace softbed {

/// Gidaspow drag coefficient: Ergun below eps = 0.8, Wen-Yu above, smooth
/// blend in between. Returns beta such that the momentum sink per unit bed
/// volume is beta * (v_gas - v_solid), kg/m^3/s.
inline double gidaspow_beta(double eps, double d, double rho_g, double mu, double slip) {
    eps = std::clamp(eps, 1e-6, 1.0 - 1e-12);
    const double ergun = 150.0 * mu * (1.0 - eps) * (1.0 - eps) / (eps * d * d) +
                         1.75 * rho_g * (1.0 - eps) * slip / d;
    if (eps <= 0.8) return ergun;

    const double re = rho_g * d * slip / mu;
    const double re_eps = eps * re;
    const double cd = re_eps < 1000.0
                          ? (re_eps > 0.0 ? 24.0 / re_eps * (1.0 + 0.15 * std::pow(re_eps, 0.687))
                                          : 0.0)
                          : 0.44;
    double wenyu = 0.75 * cd * eps * (1.0 - eps) * rho_g * slip / d * std::pow(eps, -2.65);
    if (slip == 0.0) // Stokes limit: Cd*Re_eps -> 24
        wenyu = 18.0 * mu * (1.0 - eps) / (d * d) * std::pow(eps, -2.65);
    if (eps >= 0.85) return wenyu;
    const double t = (eps - 0.8) / 0.05;
    const double s = t * t * (3.0 - 2.0 * t); // smoothstep
    return (1.0 - s) * ergun + s * wenyu;
}

/// Ranz-Marshall particle Nusselt number.
inline double ranz_marshall_nu(double re, double pr) {
    return 2.0 + 0.6 * std::cbrt(pr) * std::sqrt(re);
}

/// 2D area fraction -> 3D void fraction. Hoomans-type mapping for a
/// pseudo-3D slice of monolayer spheres; clamped below at eps_min.
inline double porosity_from_area_fraction(double phi_area, double eps_min = 0.05) {
    phi_area = std::clamp(phi_area, 0.0, 1.0);
    const double c = 2.0 / std::sqrt(std::numbers::pi * std::sqrt(3.0));
    return std::max(eps_min, 1.0 - c * phi_area * std::sqrt(phi_area));
}

/// Deterministic sunflower layout of sampling points inside the unit disc.
inline const std::vector<Vec2>& satellite_layout(int n = 64) {
    static std::vector<Vec2> pts;
    static int cached = 0;
    if (cached != n) {
        pts.clear();
        pts.reserve(std::size_t(n));
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < n; ++k) {
            const double r = std::sqrt((k + 0.5) / n);
            const double a = k * golden;
            pts.push_back({r * std::cos(a), r * std::sin(a)});
        }
        cached = n;
    }
    return pts;
}

/// Dual-grid exchange: particle fields are assembled on a coarse grid whose
/// spacing respects the averaging-volume constraint, then transferred to the
/// fine flow grid with exact overlap weights.
class Coupling {
public:
    Coupling() = default;

    Coupling(StructuredGrid coarse, StructuredGrid fine, int n_satellite = 64)
        : coarse_(coarse), fine_(fine), n_sat_(n_satellite) {
        build_overlaps();
    }

    const StructuredGrid& coarse() const { return coarse_; }
    const StructuredGrid& fine() const { return fine_; }

    /// checks the coarse spacing against the largest particle
    void check_spacing(double max_diameter) const {
        if (std::min(coarse_.dx, coarse_.dy) < 3.0 * max_diameter - 1e-12)
            throw std::runtime_error("coarse exchange cells must span at least three particle diameters");
    }

    /// Deposits each particle's disc area onto the coarse grid via satellite
    /// points, then maps area fraction to void fraction. The raw area-fraction
    /// field conserves total disc area exactly (every satellite point lands in
    /// exactly one cell).
    void compute_porosity(const std::vector<Particle>& particles) {
        const int n = coarse_.cells();
        phi_area_.assign(std::size_t(n), 0.0);
        const auto& layout = satellite_layout(n_sat_);
        const double cell_area = coarse_.dx * coarse_.dy;
        for (const auto& p : particles) {
            if (p.is_load) continue;
            const double w = p.disc_area() / double(n_sat_) / cell_area;
            for (const auto& s : layout) {
                const Vec2 q{p.pos.x + s.x * p.radius, p.pos.y + s.y * p.radius};
                phi_area_[std::size_t(coarse_.cell_of(q))] += w;
            }
        }
        eps_coarse_.resize(std::size_t(n));
        for (int c = 0; c < n; ++c)
            eps_coarse_[std::size_t(c)] = porosity_from_area_fraction(phi_area_[std::size_t(c)]);
    }

    const std::vector<double>& area_fraction() const { return phi_area_; }
    const std::vector<double>& porosity_coarse() const { return eps_coarse_; }

    /// Per-coarse-cell drag coefficient, solid velocity and heat-exchange
    /// fields; also stores each particle's heat-transfer coefficient. Gas
    /// state is sampled as the overlap-weighted coarse mean of the fine field.
    void compute_exchange(const std::vector<Particle>& particles,
                          const std::vector<RadialThermalState>& thermal,
                          const std::vector<MaterialModel>& materials,
                          const GasField& gas, const GasProperties& props) {
        (void)materials;
        const int n = coarse_.cells();
        const double Vc = coarse_.cell_volume();

        gas_u_c_ = coarse_mean(gas.u);
        gas_v_c_ = coarse_mean(gas.v);
        gas_T_c_ = coarse_mean(gas.T);
        gas_rho_c_ = coarse_mean(gas.rho);

        sol_u_.assign(std::size_t(n), 0.0);
        sol_v_.assign(std::size_t(n), 0.0);
        beta_.assign(std::size_t(n), 0.0);
        alpha_vol_.assign(std::size_t(n), 0.0);
        T_solid_.assign(std::size_t(n), 0.0);
        std::vector<double> vol_sum(std::size_t(n), 0.0), d3(std::size_t(n), 0.0),
            d2(std::size_t(n), 0.0), aa_sum(std::size_t(n), 0.0),
            aaT_sum(std::size_t(n), 0.0);
        parent_.assign(particles.size(), -1);
        htc_.assign(particles.size(), 0.0);

        for (std::size_t k = 0; k < particles.size(); ++k) {
            const Particle& p = particles[k];
            if (p.is_load) continue;
            const int c = coarse_.cell_of(p.pos);
            parent_[k] = c;
            const auto cc = std::size_t(c);
            const double V = p.volume();
            vol_sum[cc] += V;
            sol_u_[cc] += V * p.vel.x;
            sol_v_[cc] += V * p.vel.y;
            const double d = 2.0 * p.radius;
            d3[cc] += d * d * d;
            d2[cc] += d * d;
        }
        for (int c = 0; c < n; ++c) {
            const auto cc = std::size_t(c);
            if (vol_sum[cc] > 0.0) {
                sol_u_[cc] /= vol_sum[cc];
                sol_v_[cc] /= vol_sum[cc];
                const double d32 = d3[cc] / d2[cc]; // Sauter mean diameter
                const double slip = std::hypot(gas_u_c_[cc] - sol_u_[cc],
                                               gas_v_c_[cc] - sol_v_[cc]);
                beta_[cc] = gidaspow_beta(eps_coarse_[cc], d32, gas_rho_c_[cc],
                                          props.viscosity, slip);
            }
        }

        // per-particle convective coefficient (Ranz-Marshall)
        const double pr = props.prandtl();
        for (std::size_t k = 0; k < particles.size(); ++k) {
            const Particle& p = particles[k];
            if (p.is_load) continue;
            const auto cc = std::size_t(parent_[k]);
            const double slip = std::hypot(gas_u_c_[cc] - p.vel.x, gas_v_c_[cc] - p.vel.y);
            const double re = eps_coarse_[cc] * gas_rho_c_[cc] * slip * 2.0 * p.radius /
                              props.viscosity;
            const double nu = ranz_marshall_nu(re, pr);
            htc_[k] = nu * props.conductivity / (2.0 * p.radius);
            const double aA = htc_[k] * p.surface_area();
            aa_sum[cc] += aA;
            const double Ts = thermal.empty() ? p.surface_temperature
                                              : thermal[k].surface_temperature();
            aaT_sum[cc] += aA * Ts;
        }
        for (int c = 0; c < n; ++c) {
            const auto cc = std::size_t(c);
            alpha_vol_[cc] = aa_sum[cc] / Vc;
            T_solid_[cc] = aa_sum[cc] > 0.0 ? aaT_sum[cc] / aa_sum[cc] : gas_T_c_[cc];
        }
    }

    /// Pushes the coarse fields into the fine gas field (exchange hand-over).
    void inject_to_gas(GasField& gas) const {
        fine_from_coarse(eps_coarse_, gas.eps);
        fine_from_coarse(beta_, gas.beta);
        fine_from_coarse(sol_u_, gas.sol_u);
        fine_from_coarse(sol_v_, gas.sol_v);
        fine_from_coarse(alpha_vol_, gas.alpha_vol);
        fine_from_coarse(T_solid_, gas.T_solid);
    }

    /// Drag force and convective heat for every particle from the post-solve
    /// gas state. The per-cell sums over particles reproduce the gas-side
    /// sinks exactly (momentum and energy antisymmetry).
    /// Returns per-particle convective power, W (positive into the particle);
    /// forces are written to Particle::f_drag.
    std::vector<double> apply_to_particles(std::vector<Particle>& particles,
                                           const std::vector<RadialThermalState>& thermal,
                                           const GasField& gas) {
        const int n = coarse_.cells();
        const double Vc = coarse_.cell_volume();
        gas_u_c_ = coarse_mean(gas.u);
        gas_v_c_ = coarse_mean(gas.v);
        gas_T_c_ = coarse_mean(gas.T);

        std::vector<double> vol_sum(std::size_t(n), 0.0);
        for (std::size_t k = 0; k < particles.size(); ++k) {
            const Particle& p = particles[k];
            if (p.is_load || parent_[k] < 0) continue;
            vol_sum[std::size_t(parent_[k])] += p.volume();
        }
        std::vector<double> q(particles.size(), 0.0);
        for (std::size_t k = 0; k < particles.size(); ++k) {
            Particle& p = particles[k];
            p.f_drag = {};
            if (p.is_load || parent_[k] < 0) continue;
            const auto cc = std::size_t(parent_[k]);
            if (vol_sum[cc] <= 0.0) continue;
            // share of the cell's beta-sink proportional to particle volume
            const double V_eff = Vc * p.volume() / vol_sum[cc];
            p.f_drag = beta_[cc] * V_eff *
                       Vec2{gas_u_c_[cc] - p.vel.x, gas_v_c_[cc] - p.vel.y};
            const double Ts = thermal.empty() ? p.surface_temperature
                                              : thermal[k].surface_temperature();
            q[k] = htc_[k] * p.surface_area() * (gas_T_c_[cc] - Ts);
        }
        return q;
    }

    /// Overlap-weighted mean of a fine field over each coarse cell.
    std::vector<double> coarse_mean(const std::vector<double>& fine_field) const {
        std::vector<double> out(std::size_t(coarse_.cells()), 0.0);
        for (int c = 0; c < coarse_.cells(); ++c) {
            double s = 0.0, w = 0.0;
            for (const auto& [f, a] : coarse_to_fine_[std::size_t(c)]) {
                s += a * fine_field[std::size_t(f)];
                w += a;
            }
            out[std::size_t(c)] = w > 0.0 ? s / w : 0.0;
        }
        return out;
    }

    /// Overlap-weighted transfer of a coarse field onto the fine grid.
    /// Conserves the volume integral to round-off for intensive fields when
    /// the grids cover the same domain.
    void fine_from_coarse(const std::vector<double>& coarse_field,
                          std::vector<double>& fine_field) const {
        fine_field.assign(std::size_t(fine_.cells()), 0.0);
        for (int f = 0; f < fine_.cells(); ++f) {
            double s = 0.0, w = 0.0;
            for (const auto& [c, a] : fine_to_coarse_[std::size_t(f)]) {
                s += a * coarse_field[std::size_t(c)];
                w += a;
            }
            fine_field[std::size_t(f)] = w > 0.0 ? s / w : 0.0;
        }
    }

    const std::vector<double>& beta_coarse() const { return beta_; }
    const std::vector<double>& alpha_vol_coarse() const { return alpha_vol_; }
    const std::vector<double>& solid_u() const { return sol_u_; }
    const std::vector<double>& solid_v() const { return sol_v_; }
    const std::vector<double>& solid_T() const { return T_solid_; }
    const std::vector<double>& particle_htc() const { return htc_; }
    const std::vector<int>& parent_cell() const { return parent_; }
    const std::vector<double>& gas_T_sampled() const { return gas_T_c_; }

private:
    static double overlap_1d(double a0, double a1, double b0, double b1) {
        return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
    }

    void build_overlaps() {
        coarse_to_fine_.assign(std::size_t(coarse_.cells()), {});
        fine_to_coarse_.assign(std::size_t(fine_.cells()), {});
        for (int cj = 0; cj < coarse_.ny; ++cj)
            for (int ci = 0; ci < coarse_.nx; ++ci) {
                const double cx0 = coarse_.x0 + ci * coarse_.dx, cx1 = cx0 + coarse_.dx;
                const double cy0 = coarse_.y0 + cj * coarse_.dy, cy1 = cy0 + coarse_.dy;
                const int fi0 = std::clamp(int((cx0 - fine_.x0) / fine_.dx), 0, fine_.nx - 1);
                const int fi1 = std::clamp(int((cx1 - fine_.x0) / fine_.dx) + 1, 0, fine_.nx);
                const int fj0 = std::clamp(int((cy0 - fine_.y0) / fine_.dy), 0, fine_.ny - 1);
                const int fj1 = std::clamp(int((cy1 - fine_.y0) / fine_.dy) + 1, 0, fine_.ny);
                const int c = coarse_.idx(ci, cj);
                for (int fj = fj0; fj < fj1; ++fj)
                    for (int fi = fi0; fi < fi1; ++fi) {
                        const double fx0 = fine_.x0 + fi * fine_.dx;
                        const double fy0 = fine_.y0 + fj * fine_.dy;
                        const double a = overlap_1d(cx0, cx1, fx0, fx0 + fine_.dx) *
                                         overlap_1d(cy0, cy1, fy0, fy0 + fine_.dy);
                        if (a <= 0.0) continue;
                        const int f = fine_.idx(fi, fj);
                        coarse_to_fine_[std::size_t(c)].push_back({f, a});
                        fine_to_coarse_[std::size_t(f)].push_back({c, a});
                    }
            }
    }

    StructuredGrid coarse_, fine_;
    int n_sat_ = 64;

    std::vector<std::vector<std::pair<int, double>>> coarse_to_fine_, fine_to_coarse_;

    std::vector<double> phi_area_, eps_coarse_;
    std::vector<double> beta_, sol_u_, sol_v_, alpha_vol_, T_solid_;
    std::vector<double> gas_u_c_, gas_v_c_, gas_T_c_, gas_rho_c_;
    std::vector<double> htc_;
    std::vector<int> parent_;
};

} // namespace softbed
