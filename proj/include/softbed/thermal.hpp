#pragma once

#include <cassert>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "softbed/material.hpp"

namespace softbed {

inline constexpr double kStefanBoltzmann = 5.670374419e-8; // W/m^2/K^4

/// Series-resistance conduction flux between touching bodies, W/m^2.
/// Positive = heat leaving body p. Antisymmetric under p <-> j.
inline double conduction_flux(double T_p, double T_j, double lambda_p, double lambda_j,
                              double dx_pj) {
    return (T_p - T_j) / dx_pj / (1.0 / lambda_p + 1.0 / lambda_j);
}

struct RadiativeNeighbor {
    int id = -1;
    double temperature = 0.0; // K
    double view_factor = 0.0; // [0, 1]
};

/// Net radiative flux leaving particle p, W/m^2.
inline double radiation_flux(double T_p, const std::vector<RadiativeNeighbor>& neighbors,
                             double emissivity) {
    double s = 0.0;
    const double Tp4 = T_p * T_p * T_p * T_p;
    for (const auto& nb : neighbors) {
        const double Tj4 = nb.temperature * nb.temperature * nb.temperature * nb.temperature;
        s += nb.view_factor * (Tp4 - Tj4);
    }
    return kStefanBoltzmann * emissivity * s;
}

/// View factor of a sphere of radius r_j seen from distance d: its solid
/// angle over 4*pi.
inline double sphere_view_factor(double r_j, double d) {
    if (d <= r_j) return 0.5;
    const double s = r_j / d;
    return 0.5 * (1.0 - std::sqrt(1.0 - s * s));
}

struct ConductiveNeighbor {
    int id = -1;
    double temperature = 0.0;   // K
    double conductivity = 0.0;  // W/m/K
    double path_length = 0.0;   // center-to-center distance, m
    double area = 0.0;          // exchange area, m^2
};

struct ThermalBoundaryInputs {
    double htc = 0.0;        // convective coefficient, W/m^2/K
    double T_inf = 0.0;      // far-field gas temperature, K
    double fixed_power = 0.0; // frozen conductive+radiative exchange, W, positive into the particle
    std::vector<ConductiveNeighbor> conductive;
    std::vector<RadiativeNeighbor> radiative;
};

/// 1D transient intra-particle temperature field in r^n geometry
/// (n = 2 sphere, 1 cylinder, 0 slab), uniform shells, FV.
class RadialThermalState {
public:
    RadialThermalState() = default;

    RadialThermalState(const MaterialModel* mat, double radius, int n_shell, double T0,
                       int geometry_exponent = 2)
        : mat_(mat), radius_(radius), n_(geometry_exponent), T_(std::size_t(n_shell), T0) {
        if (n_shell < 1) throw std::invalid_argument("need at least one shell");
        if (n_ < 0 || n_ > 2) throw std::invalid_argument("geometry exponent must be 0, 1 or 2");
    }

    int shell_count() const { return int(T_.size()); }
    double radius() const { return radius_; }
    int geometry_exponent() const { return n_; }
    const std::vector<double>& temperatures() const { return T_; }
    std::vector<double>& temperatures() { return T_; }
    double surface_temperature() const { return surface_T_; }
    void set_surface_temperature(double T) { surface_T_ = T; }
    double center_temperature() const { return T_.front(); }

    double shell_edge(int i) const { return radius_ * double(i) / double(T_.size()); }
    double shell_center(int i) const { return radius_ * (double(i) + 0.5) / double(T_.size()); }

    // face "area" and shell volume for the r^n metric (per unit length for
    // n=1, per unit area for n=0)
    double face_area(int i) const {
        const double r = shell_edge(i);
        switch (n_) {
            case 0: return 1.0;
            case 1: return 2.0 * std::numbers::pi * r;
            default: return 4.0 * std::numbers::pi * r * r;
        }
    }
    double shell_volume(int i) const {
        const double a = shell_edge(i), b = shell_edge(i + 1);
        switch (n_) {
            case 0: return b - a;
            case 1: return std::numbers::pi * (b * b - a * a);
            default: return (4.0 / 3.0) * std::numbers::pi * (b * b * b - a * a * a);
        }
    }
    double surface_area() const { return face_area(shell_count()); }

    /// Sensible enthalpy above T_ref, J (exact for linear cp).
    double enthalpy(double T_ref = 0.0) const {
        double H = 0.0;
        for (int i = 0; i < shell_count(); ++i)
            H += mat_->intrinsic_density * shell_volume(i) * cp_integral(T_ref, T_[std::size_t(i)]);
        return H;
    }

    /// One implicit (backward Euler) step. Center symmetry BC; surface BC
    /// combines an implicit convective link and the frozen exchange power.
    /// Secant-cp Picard iteration keeps the discrete enthalpy balance exact
    /// for linear cp(T). Returns the net boundary heat absorbed, J.
    double advance(const ThermalBoundaryInputs& bc, double dt) {
        const int N = shell_count();
        const double dr = radius_ / N;
        const double lamN = mat_->thermal_conductivity(T_.back());
        const double A = surface_area();
        const double U = bc.htc > 0.0
                             ? 1.0 / (1.0 / (bc.htc * A) + (0.5 * dr) / (lamN * A))
                             : 0.0;

        std::vector<double> Tn = T_;
        std::vector<double> a(std::size_t(N), 0.0), b(std::size_t(N), 0.0),
            c(std::size_t(N), 0.0), d(std::size_t(N), 0.0);
        for (int iter = 0; iter < 8; ++iter) {
            for (int i = 0; i < N; ++i) {
                // secant heat capacity between old and current-iterate temps
                const double cp = mat_->heat_capacity.a +
                                  0.5 * mat_->heat_capacity.b *
                                      (T_[std::size_t(i)] + Tn[std::size_t(i)]);
                const double cap = mat_->intrinsic_density * shell_volume(i) * cp;
                a[std::size_t(i)] = c[std::size_t(i)] = 0.0;
                b[std::size_t(i)] = cap / dt;
                d[std::size_t(i)] = cap / dt * T_[std::size_t(i)];
            }
            for (int f = 1; f < N; ++f) { // interior faces
                const double lam = 0.5 * (mat_->thermal_conductivity(T_[std::size_t(f - 1)]) +
                                          mat_->thermal_conductivity(T_[std::size_t(f)]));
                const double cond = lam * face_area(f) / dr;
                b[std::size_t(f - 1)] += cond;
                b[std::size_t(f)] += cond;
                c[std::size_t(f - 1)] += cond; // link to i+1
                a[std::size_t(f)] += cond;     // link to i-1
            }
            if (U > 0.0) {
                b[std::size_t(N - 1)] += U;
                d[std::size_t(N - 1)] += U * bc.T_inf;
            }
            d[std::size_t(N - 1)] += bc.fixed_power;

            // Thomas solve (links stored positive)
            for (int i = 1; i < N; ++i) {
                const double w = a[std::size_t(i)] / b[std::size_t(i - 1)];
                b[std::size_t(i)] -= w * c[std::size_t(i - 1)];
                d[std::size_t(i)] += w * d[std::size_t(i - 1)];
            }
            std::vector<double> Tnext(std::size_t(N), 0.0);
            Tnext[std::size_t(N - 1)] = d[std::size_t(N - 1)] / b[std::size_t(N - 1)];
            for (int i = N - 2; i >= 0; --i)
                Tnext[std::size_t(i)] =
                    (d[std::size_t(i)] + c[std::size_t(i)] * Tnext[std::size_t(i + 1)]) /
                    b[std::size_t(i)];
            double change = 0.0;
            for (int i = 0; i < N; ++i)
                change = std::max(change, std::abs(Tnext[std::size_t(i)] - Tn[std::size_t(i)]));
            Tn = std::move(Tnext);
            if (change < 1e-11 || mat_->heat_capacity.b == 0.0) break;
        }
        for (double t : Tn) assert(std::isfinite(t));

        const double q_conv = U > 0.0 ? U * (bc.T_inf - Tn[std::size_t(N - 1)]) : 0.0;
        const double q_net = q_conv + bc.fixed_power;
        T_ = std::move(Tn);
        // outer-shell value; a flux extrapolation to r = R couples explicit
        // pair exchange through an amplifying gain and can oscillate
        surface_T_ = T_.back();
        return q_net * dt;
    }

    const MaterialModel& material() const { return *mat_; }
    void rebind_material(const MaterialModel* m) { mat_ = m; }

private:
    double cp_integral(double T0, double T1) const {
        const auto& cp = mat_->heat_capacity;
        return cp.a * (T1 - T0) + 0.5 * cp.b * (T1 * T1 - T0 * T0);
    }

    const MaterialModel* mat_ = nullptr;
    double radius_ = 0.0;
    int n_ = 2;
    std::vector<double> T_;
    double surface_T_ = 0.0;
};

} // namespace softbed
