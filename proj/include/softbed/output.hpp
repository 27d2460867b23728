#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <stdexcept>
#include <string>
#include <vector>

#include "softbed/gas.hpp"
#include "softbed/particle.hpp"
#include "softbed/thermal.hpp"

namespace softbed {

inline std::ofstream open_output(const std::string& path) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    out << std::setprecision(12);
    return out;
}

/// Legacy-format VTK structured points file with the gas cell fields.
inline void write_gas_vtk(const std::string& path, const GasField& f) {
    auto out = open_output(path);
    const StructuredGrid& g = f.geom;
    out << "# vtk DataFile Version 3.0\n"
        << "gas field\nASCII\nDATASET STRUCTURED_POINTS\n"
        << "DIMENSIONS " << g.nx << ' ' << g.ny << " 1\n"
        << "ORIGIN " << g.x0 + 0.5 * g.dx << ' ' << g.y0 + 0.5 * g.dy << " 0\n"
        << "SPACING " << g.dx << ' ' << g.dy << " 1\n"
        << "POINT_DATA " << g.cells() << "\n";
    auto scalar = [&](const char* name, const std::vector<double>& v) {
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (double x : v) out << x << '\n';
    };
    scalar("porosity", f.eps);
    scalar("pressure", f.p);
    scalar("temperature", f.T);
    scalar("density", f.rho);
    out << "VECTORS velocity double\n";
    for (int c = 0; c < g.cells(); ++c)
        out << f.u[std::size_t(c)] << ' ' << f.v[std::size_t(c)] << " 0\n";
}

/// Particle state snapshot as CSV.
inline void write_particles_csv(const std::string& path, const std::vector<Particle>& ps,
                                const std::vector<RadialThermalState>& thermal) {
    auto out = open_output(path);
    out << "id,material,layer,radius,mass,x,y,vx,vy,omega,surface_T,center_T,"
           "fx_drag,fy_drag,is_load\n";
    for (std::size_t k = 0; k < ps.size(); ++k) {
        const Particle& p = ps[k];
        const double Tc = (k < thermal.size() && thermal[k].shell_count() > 0)
                              ? thermal[k].center_temperature()
                              : p.surface_temperature;
        out << p.id << ',' << p.material << ',' << p.layer << ',' << p.radius << ','
            << p.mass << ',' << p.pos.x << ',' << p.pos.y << ',' << p.vel.x << ','
            << p.vel.y << ',' << p.omega << ',' << p.surface_temperature << ',' << Tc << ','
            << p.f_drag.x << ',' << p.f_drag.y << ',' << (p.is_load ? 1 : 0) << '\n';
    }
}

} // namespace softbed
