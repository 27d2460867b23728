#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace softbed {

/// Property of the form a + b*T. Covers every temperature law used here
/// (constant conductivities, the coke polynomials, gas cp).
struct LinearOfT {
    double a = 0.0;
    double b = 0.0;

    double operator()(double T) const { return a + b * T; }
    static LinearOfT constant(double c) { return {c, 0.0}; }
};

/// Monotone non-increasing E(T) table with constant extrapolation and a
/// hard floor. Piecewise linear between anchors.
class StiffnessCurve {
public:
    StiffnessCurve() = default;

    StiffnessCurve(std::vector<double> T, std::vector<double> E, double floor = 1e4)
        : temps_(std::move(T)), moduli_(std::move(E)), floor_(floor) {
        if (temps_.size() != moduli_.size() || temps_.empty())
            throw std::invalid_argument("stiffness curve: mismatched or empty anchors");
        for (std::size_t i = 1; i < temps_.size(); ++i) {
            if (temps_[i] <= temps_[i - 1])
                throw std::invalid_argument("stiffness curve: temperatures must increase");
            if (moduli_[i] > moduli_[i - 1] * (1.0 + 1e-12))
                throw std::invalid_argument("stiffness curve: modulus must be non-increasing");
        }
        for (double e : moduli_)
            if (e <= 0.0) throw std::invalid_argument("stiffness curve: modulus must be positive");
    }

    /// Constant modulus (no softening).
    static StiffnessCurve constant(double E) {
        return StiffnessCurve({0.0}, {E}, std::min(E, 1e4));
    }

    /// Plateau at E_plateau up to T_onset, log-linear decay to E_min at
    /// T_melt, sampled densely so plain piecewise-linear lookup applies.
    static StiffnessCurve softening(double T_onset, double T_melt,
                                    double E_plateau = 5e7, double E_min = 1e4,
                                    int samples = 32) {
        std::vector<double> T{T_onset};
        std::vector<double> E{E_plateau};
        const double logE0 = std::log(E_plateau), logE1 = std::log(E_min);
        for (int i = 1; i <= samples; ++i) {
            const double f = double(i) / samples;
            T.push_back(T_onset + f * (T_melt - T_onset));
            E.push_back(std::exp(logE0 + f * (logE1 - logE0)));
        }
        return StiffnessCurve(std::move(T), std::move(E), E_min);
    }

    double operator()(double T) const {
        double e;
        if (T <= temps_.front()) {
            e = moduli_.front();
        } else if (T >= temps_.back()) {
            e = moduli_.back();
        } else {
            auto it = std::upper_bound(temps_.begin(), temps_.end(), T);
            const std::size_t i = std::size_t(it - temps_.begin());
            const double f = (T - temps_[i - 1]) / (temps_[i] - temps_[i - 1]);
            e = moduli_[i - 1] + f * (moduli_[i] - moduli_[i - 1]);
        }
        return std::max(e, floor_);
    }

    double floor() const { return floor_; }
    const std::vector<double>& anchor_temps() const { return temps_; }
    const std::vector<double>& anchor_moduli() const { return moduli_; }

private:
    std::vector<double> temps_{0.0};
    std::vector<double> moduli_{5e7};
    double floor_ = 1e4;
};

struct MaterialModel {
    std::string name;
    double intrinsic_density = 3000.0;   // kg/m^3
    LinearOfT thermal_conductivity = LinearOfT::constant(0.5); // W/m/K
    LinearOfT heat_capacity = LinearOfT::constant(1000.0);     // J/kg/K
    double poisson_ratio = 0.24;
    double restitution = 0.15;
    double friction_coeff = 0.7;
    double emissivity = 0.8;
    StiffnessCurve youngs_modulus;

    double shear_modulus(double T) const {
        return youngs_modulus(T) / (2.0 * (1.0 + poisson_ratio));
    }

    void validate() const {
        if (intrinsic_density <= 0.0) throw std::invalid_argument(name + ": density must be > 0");
        if (restitution <= 0.0 || restitution > 1.0)
            throw std::invalid_argument(name + ": restitution must be in (0, 1]");
        if (poisson_ratio < 0.0 || poisson_ratio >= 0.5)
            throw std::invalid_argument(name + ": poisson ratio must be in [0, 0.5)");
        if (friction_coeff < 0.0) throw std::invalid_argument(name + ": friction must be >= 0");
        if (emissivity < 0.0 || emissivity > 1.0)
            throw std::invalid_argument(name + ": emissivity must be in [0, 1]");
    }
};

/// Table 7 defaults for the two burden materials.
inline MaterialModel pellet_material() {
    MaterialModel m;
    m.name = "pellet";
    m.intrinsic_density = 3000.0;
    m.thermal_conductivity = LinearOfT::constant(0.5);
    m.heat_capacity = LinearOfT::constant(1000.0);
    m.poisson_ratio = 0.24;
    m.restitution = 0.15;
    m.friction_coeff = 0.7;
    m.emissivity = 0.8;
    m.youngs_modulus = StiffnessCurve::softening(1250.0, 1377.0);
    return m;
}

inline MaterialModel coke_material() {
    MaterialModel m;
    m.name = "coke";
    m.intrinsic_density = 1000.0;
    m.thermal_conductivity = {0.96, 0.00183};
    m.heat_capacity = {320.0, 0.61};
    m.poisson_ratio = 0.3;
    m.restitution = 0.2;
    m.friction_coeff = 0.9;
    m.emissivity = 0.8;
    m.youngs_modulus = StiffnessCurve::constant(5e7);
    return m;
}

} // namespace softbed
