#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "softbed/config.hpp"
#include "softbed/material.hpp"
#include "softbed/vec2.hpp"

namespace softbed {

enum class Side { Left, Right, Bottom, Top };

inline Side side_from_string(const std::string& s) {
    if (s == "left") return Side::Left;
    if (s == "right") return Side::Right;
    if (s == "bottom") return Side::Bottom;
    if (s == "top") return Side::Top;
    throw std::runtime_error("unknown side: " + s);
}

inline const char* to_string(Side s) {
    switch (s) {
        case Side::Left: return "left";
        case Side::Right: return "right";
        case Side::Bottom: return "bottom";
        default: return "top";
    }
}

enum class LayerType { Ore, Coke };
enum class FreezeMode { None, X, XY };

struct LayerSpec {
    std::string material;
    LayerType type = LayerType::Ore;
    double diameter_min = 0.011;   // m
    double diameter_max = 0.013;
    double y_min = 0.0;            // vertical extent
    double y_max = 0.0;
    FreezeMode freeze = FreezeMode::None;
    double x_min = 0.0;            // horizontal extent (defaults to full width)
    double x_max = -1.0;           // <0 means full width
    double spacing = 0.0;          // seed pitch in diameters; 0 = default by type
};

struct GasProperties {
    double viscosity = 4.5e-5;       // Pa s
    double conductivity = 0.10;      // W/m/K
    double heat_capacity = 1200.0;   // J/kg/K
    double molar_mass = 0.028;       // kg/mol
    double reference_pressure = 101325.0; // Pa, absolute, at the outlet

    double density(double p_abs, double T) const {
        constexpr double R = 8.314462618;
        return p_abs * molar_mass / (R * T);
    }
    double prandtl() const { return heat_capacity * viscosity / conductivity; }
};

struct InletSpec {
    Side side = Side::Left;
    double from = 0.0;   // patch extent along the side, m
    double to = 0.0;
    double velocity = 0.0;    // inward-normal speed, m/s
    double temperature = 300.0;
};

struct ProbePoint {
    std::string name;
    Vec2 pos;
};

struct RunSettings {
    double t_end = 40.0;                 // s
    double trigger_temperature = 0.0;    // K; 0 disables the melt-onset stop
    double dt_max = 1e-3;                // gas step cap, s
    double cfl = 0.5;
    double dem_safety = 0.2;             // Rayleigh-time safety factor
    int n_shell = 10;
    std::vector<double> snapshot_tstars{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    double probe_interval = 0.02;        // s
};

struct GridSpec {
    int nx = 0;
    int ny = 0;
};

struct Scenario {
    // geometry
    double width = 0.6;       // m
    double height = 1.2;
    double thickness = 1.0;   // out-of-plane, m
    Vec2 gravity{0.0, -9.81};

    GasProperties gas;
    std::map<std::string, MaterialModel> materials;
    std::vector<LayerSpec> layers;

    double load_pressure = 0.0; // Pa applied on top of the packing
    InletSpec inlet;
    Side outlet_side = Side::Top;
    double outlet_gauge_pressure = 0.0;
    std::vector<Side> free_slip_sides; // remaining walls are no-slip
    double initial_temperature = 1250.0;

    RunSettings run;
    GridSpec fine_grid{30, 60};
    GridSpec coarse_grid{0, 0}; // 0 = derive from particle size constraint
    std::vector<ProbePoint> probes;
    double zone_y_min = 0.0;    // pressure-drop zone
    double zone_y_max = 0.0;

    std::uint64_t config_hash = 0; // FNV-1a of the canonical config text

    bool wall_free_slip(Side s) const {
        for (Side f : free_slip_sides)
            if (f == s) return true;
        return false;
    }

    const MaterialModel& material(const std::string& name) const {
        auto it = materials.find(name);
        if (it == materials.end())
            throw std::runtime_error("unknown material: " + name);
        return it->second;
    }

    double max_particle_diameter() const {
        double d = 0.0;
        for (const auto& l : layers) d = std::max(d, l.diameter_max);
        return d;
    }

    void validate() const {
        if (width <= 0 || height <= 0 || thickness <= 0)
            throw std::invalid_argument("domain extents must be positive");
        if (load_pressure < 0) throw std::invalid_argument("load pressure must be >= 0");
        if (initial_temperature <= 0) throw std::invalid_argument("initial temperature must be > 0");
        if (!std::isfinite(inlet.velocity)) throw std::invalid_argument("inlet velocity must be finite");
        if (run.t_end <= 0) throw std::invalid_argument("t_end must be > 0");
        if (fine_grid.nx <= 0 || fine_grid.ny <= 0)
            throw std::invalid_argument("fine grid must have positive extents");
        for (const auto& [name, m] : materials) m.validate();
        for (const auto& l : layers) {
            if (l.diameter_min <= 0 || l.diameter_max < l.diameter_min)
                throw std::invalid_argument("bad diameter range in layer");
            if (l.y_max <= l.y_min)
                throw std::invalid_argument("bad vertical extent in layer");
            if (!materials.count(l.material))
                throw std::invalid_argument("layer references unknown material: " + l.material);
        }
        // layers must tile the packed region without overlap
        std::vector<std::pair<double, double>> spans;
        for (const auto& l : layers) spans.emplace_back(l.y_min, l.y_max);
        std::sort(spans.begin(), spans.end());
        for (std::size_t i = 1; i < spans.size(); ++i)
            if (spans[i].first < spans[i - 1].second - 1e-12)
                throw std::invalid_argument("layers overlap vertically");
    }
};

namespace detail {

inline LinearOfT parse_linear_of_T(const std::string& expr, const std::string& where) {
    // accepts "c" or "a + b*T"
    std::string s;
    for (char c : expr)
        if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    auto star = s.find("*T");
    if (star == std::string::npos) {
        try {
            return LinearOfT::constant(std::stod(s));
        } catch (...) {
            throw std::runtime_error(where + ": cannot parse property: " + expr);
        }
    }
    auto plus = s.rfind('+', star);
    if (plus == std::string::npos || star + 2 != s.size())
        throw std::runtime_error(where + ": expected 'a + b*T': " + expr);
    try {
        return {std::stod(s.substr(0, plus)), std::stod(s.substr(plus + 1, star - plus - 1))};
    } catch (...) {
        throw std::runtime_error(where + ": cannot parse property: " + expr);
    }
}

inline StiffnessCurve parse_stiffness(const std::string& spec, const std::string& where) {
    std::istringstream ss(spec);
    std::string kind;
    ss >> kind;
    if (kind == "constant") {
        double e;
        if (!(ss >> e)) throw std::runtime_error(where + ": stiffness constant needs a value");
        return StiffnessCurve::constant(e);
    }
    if (kind == "softening") {
        double t0, t1, e0 = 5e7, e1 = 1e4;
        if (!(ss >> t0 >> t1)) throw std::runtime_error(where + ": stiffness softening needs onset and melt temperatures");
        ss >> e0 >> e1;
        return StiffnessCurve::softening(t0, t1, e0, e1);
    }
    if (kind == "table") {
        // pairs "T:E T:E ..."
        std::vector<double> T, E;
        std::string tok;
        while (ss >> tok) {
            auto colon = tok.find(':');
            if (colon == std::string::npos)
                throw std::runtime_error(where + ": stiffness table entries are T:E");
            T.push_back(std::stod(tok.substr(0, colon)));
            E.push_back(std::stod(tok.substr(colon + 1)));
        }
        if (T.empty()) throw std::runtime_error(where + ": empty stiffness table");
        return StiffnessCurve(std::move(T), std::move(E));
    }
    throw std::runtime_error(where + ": unknown stiffness kind: " + kind);
}

} // namespace detail

inline Scenario build_scenario(const ConfigMap& cfg) {
    Scenario sc;
    sc.config_hash = cfg.hash();
    for (const auto& [name, section] : cfg.sections()) {
        SectionReader r(section, name);
        if (name == "domain") {
            sc.width = r.num("width");
            sc.height = r.num("height");
            sc.thickness = r.num("thickness", 1.0);
            sc.gravity = {r.num("gravity_x", 0.0), r.num("gravity_y", -9.81)};
        } else if (name == "gas") {
            sc.gas.viscosity = r.num("viscosity", sc.gas.viscosity);
            sc.gas.conductivity = r.num("conductivity", sc.gas.conductivity);
            sc.gas.heat_capacity = r.num("heat_capacity", sc.gas.heat_capacity);
            sc.gas.molar_mass = r.num("molar_mass", sc.gas.molar_mass);
            sc.gas.reference_pressure = r.num("reference_pressure", sc.gas.reference_pressure);
        } else if (name.rfind("material ", 0) == 0) {
            MaterialModel m;
            m.name = name.substr(9);
            m.intrinsic_density = r.num("intrinsic_density");
            m.thermal_conductivity = detail::parse_linear_of_T(r.str("thermal_conductivity"), name);
            m.heat_capacity = detail::parse_linear_of_T(r.str("heat_capacity"), name);
            m.poisson_ratio = r.num("poisson_ratio");
            m.restitution = r.num("restitution");
            m.friction_coeff = r.num("friction");
            m.emissivity = r.num("emissivity", 0.8);
            m.youngs_modulus = detail::parse_stiffness(r.str("stiffness"), name);
            sc.materials[m.name] = m;
        } else if (name.rfind("layer ", 0) == 0) {
            LayerSpec l;
            l.material = r.str("material");
            std::string t = r.str("type");
            if (t == "ore") l.type = LayerType::Ore;
            else if (t == "coke") l.type = LayerType::Coke;
            else throw std::runtime_error(name + ": layer type must be ore or coke");
            l.diameter_min = r.num("diameter_min");
            l.diameter_max = r.num("diameter_max");
            l.y_min = r.num("y_min");
            l.y_max = r.num("y_max");
            l.x_min = r.num("x_min", 0.0);
            l.x_max = r.num("x_max", -1.0);
            l.spacing = r.num("spacing", 0.0);
            std::string fz = r.str("freeze", l.type == LayerType::Coke ? "x" : "none");
            if (fz == "none") l.freeze = FreezeMode::None;
            else if (fz == "x") l.freeze = FreezeMode::X;
            else if (fz == "xy") l.freeze = FreezeMode::XY;
            else throw std::runtime_error(name + ": freeze must be none, x or xy");
            sc.layers.push_back(l);
        } else if (name == "load") {
            sc.load_pressure = r.num("pressure");
        } else if (name == "inlet") {
            sc.inlet.side = side_from_string(r.str("side", "left"));
            sc.inlet.from = r.num("from");
            sc.inlet.to = r.num("to");
            sc.inlet.velocity = r.num("velocity");
            sc.inlet.temperature = r.num("temperature");
        } else if (name == "outlet") {
            sc.outlet_side = side_from_string(r.str("side", "top"));
            sc.outlet_gauge_pressure = r.num("pressure", 0.0);
        } else if (name == "walls") {
            std::istringstream ss(r.str("free_slip", ""));
            std::string tok;
            while (ss >> tok) sc.free_slip_sides.push_back(side_from_string(tok));
        } else if (name == "initial") {
            sc.initial_temperature = r.num("temperature");
        } else if (name == "run") {
            sc.run.t_end = r.num("t_end", sc.run.t_end);
            sc.run.trigger_temperature = r.num("trigger_temperature", 0.0);
            sc.run.dt_max = r.num("dt_max", sc.run.dt_max);
            sc.run.cfl = r.num("cfl", sc.run.cfl);
            sc.run.dem_safety = r.num("dem_safety", sc.run.dem_safety);
            sc.run.n_shell = int(r.integer("n_shell", sc.run.n_shell));
            if (r.has("snapshot_tstars")) sc.run.snapshot_tstars = r.num_list("snapshot_tstars");
            sc.run.probe_interval = r.num("probe_interval", sc.run.probe_interval);
        } else if (name == "grid fine") {
            sc.fine_grid = {int(r.integer("nx")), int(r.integer("ny"))};
        } else if (name == "grid coarse") {
            sc.coarse_grid = {int(r.integer("nx")), int(r.integer("ny"))};
        } else if (name.rfind("probe ", 0) == 0) {
            sc.probes.push_back({name.substr(6), {r.num("x"), r.num("y")}});
        } else if (name == "zone") {
            sc.zone_y_min = r.num("y_min");
            sc.zone_y_max = r.num("y_max");
        } else if (name.empty() && section.empty()) {
            // tolerate an empty preamble
        } else {
            throw std::runtime_error("unknown scenario section: [" + name + "]");
        }
        r.finish();
    }
    sc.validate();
    return sc;
}

inline Scenario load_scenario(const std::string& path,
                              const std::vector<std::string>& overrides = {}) {
    ConfigMap cfg = ConfigMap::parse_file(path);
    for (const auto& o : overrides) cfg.apply_override(o);
    return build_scenario(cfg);
}

} // namespace softbed
