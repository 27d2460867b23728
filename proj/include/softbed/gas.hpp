#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "softbed/scenario.hpp"
#include "softbed/vec2.hpp"

namespace softbed {

struct StructuredGrid {
    int nx = 0, ny = 0;
    double dx = 0.0, dy = 0.0;
    double x0 = 0.0, y0 = 0.0;
    double thickness = 1.0;

    static StructuredGrid cover(double width, double height, int nx, int ny, double thickness) {
        return {nx, ny, width / nx, height / ny, 0.0, 0.0, thickness};
    }

    int cells() const { return nx * ny; }
    int idx(int i, int j) const { return j * nx + i; }
    double cell_volume() const { return dx * dy * thickness; }
    double xc(int i) const { return x0 + (i + 0.5) * dx; }
    double yc(int j) const { return y0 + (j + 0.5) * dy; }
    double width() const { return nx * dx; }
    double height() const { return ny * dy; }

    int cell_of(Vec2 p) const {
        const int i = std::clamp(int((p.x - x0) / dx), 0, nx - 1);
        const int j = std::clamp(int((p.y - y0) / dy), 0, ny - 1);
        return idx(i, j);
    }
    bool contains(Vec2 p) const {
        return p.x >= x0 && p.x <= x0 + width() && p.y >= y0 && p.y <= y0 + height();
    }
};

/// Cell-centered gas state plus the frozen per-step exchange fields handed
/// over by the coupling module.
struct GasField {
    StructuredGrid geom;
    std::vector<double> eps, rho, p, T, u, v; // p is gauge vs the outlet reference

    // frozen exchange fields (coupling -> solver)
    std::vector<double> beta;      // volumetric drag coefficient, kg/m^3/s
    std::vector<double> sol_u, sol_v; // volume-averaged particle velocity
    std::vector<double> alpha_vol; // W/m^3/K
    std::vector<double> T_solid;   // exchange-weighted particle surface temperature

    // realized sinks, recorded by the solver (positive = taken from the gas)
    std::vector<double> drag_sink_x, drag_sink_y; // N/m^3
    std::vector<double> heat_sink;                // W/m^3

    static constexpr double eps_min = 0.05;

    void init(const StructuredGrid& g, const GasProperties& props, double T0) {
        geom = g;
        const int n = g.cells();
        eps.assign(n, 1.0);
        p.assign(n, 0.0);
        T.assign(n, T0);
        rho.assign(n, props.density(props.reference_pressure, T0));
        u.assign(n, 0.0);
        v.assign(n, 0.0);
        beta.assign(n, 0.0);
        sol_u.assign(n, 0.0);
        sol_v.assign(n, 0.0);
        alpha_vol.assign(n, 0.0);
        T_solid.assign(n, T0);
        drag_sink_x.assign(n, 0.0);
        drag_sink_y.assign(n, 0.0);
        heat_sink.assign(n, 0.0);
    }
};

struct GasBoundary {
    InletSpec inlet;
    Side outlet_side = Side::Top;
    bool free_slip[4] = {false, false, false, false}; // indexed by Side

    bool slip(Side s) const { return free_slip[int(s)]; }

    static GasBoundary from_scenario(const Scenario& sc) {
        GasBoundary b;
        b.inlet = sc.inlet;
        b.outlet_side = sc.outlet_side;
        for (Side s : sc.free_slip_sides) b.free_slip[int(s)] = true;
        return b;
    }
};

enum class FaceKind { Interior, Wall, Slip, Inlet, Outlet };

struct GasSolverControls {
    int max_outer = 400;
    double urf_vel = 0.7;
    double urf_p = 0.4;
    int vel_sweeps = 4;
    int energy_sweeps = 500;
    double continuity_tol = 1e-6; // relative to inlet mass flux
    double p_solve_tol = 1e-10;
};

struct GasStepReport {
    int outer_iterations = 0;
    double continuity_residual = 0.0; // relative to inlet mass flux
    double inlet_mass_flux = 0.0;     // kg/s

    // discrete energy balance of the step, W
    double energy_in = 0.0;      // enthalpy inflow through the inlet
    double energy_out = 0.0;     // enthalpy outflow through the outlet
    double energy_sink = 0.0;    // transferred to the solid phase
    double energy_storage = 0.0; // rate of change of stored enthalpy
};

/// advective CFL time step; zero velocity falls back to dt_max
inline double gas_dt(const GasField& f, double cfl, double dt_max, double c_ref = 0.0) {
    const double h = std::min(f.geom.dx, f.geom.dy);
    double dt = dt_max;
    for (int c = 0; c < f.geom.cells(); ++c) {
        const double speed = std::hypot(f.u[std::size_t(c)], f.v[std::size_t(c)]) + c_ref;
        if (speed > 0.0) dt = std::min(dt, cfl * h / speed);
    }
    return dt;
}

class GasSolver {
public:
    GasSolver(const GasProperties& props, const GasBoundary& bc, GasSolverControls ctrl = {})
        : props_(props), bc_(bc), ctrl_(ctrl) {}

    /// One implicit-Euler step with SIMPLE pressure correction.
    GasStepReport advance(GasField& f, double dt) {
        const StructuredGrid& g = f.geom;
        const int n = g.cells();
        nx_ = g.nx;
        ny_ = g.ny;
        dx_ = g.dx;
        dy_ = g.dy;

        rho_old_ = f.rho;
        u_old_ = f.u;
        v_old_ = f.v;
        T_old_ = f.T;

        mdot_x_.assign(std::size_t((nx_ + 1) * ny_), 0.0);
        mdot_y_.assign(std::size_t(nx_ * (ny_ + 1)), 0.0);
        init_face_fluxes(f);

        const double m_in = inlet_mass_flux(f);
        const double ref_flux = m_in > 0.0 ? m_in : reference_flux(f);

        GasStepReport rep;
        rep.inlet_mass_flux = m_in;
        d_u_.assign(std::size_t(n), 0.0);
        d_v_.assign(std::size_t(n), 0.0);

        double resid = 1e300;
        int outer = 0;
        for (; outer < ctrl_.max_outer; ++outer) {
            solve_momentum(f, dt, 0);
            solve_momentum(f, dt, 1);
            rhie_chow_fluxes(f);
            resid = solve_pressure_correction(f, dt);
            for (int c = 0; c < n; ++c)
                f.rho[std::size_t(c)] =
                    props_.density(props_.reference_pressure + f.p[std::size_t(c)],
                                   f.T[std::size_t(c)]);
            if (resid <= ctrl_.continuity_tol * ref_flux && outer >= 1) break;
        }
        rep.outer_iterations = outer + 1;
        rep.continuity_residual = ref_flux > 0.0 ? resid / ref_flux : resid;
        if (resid > ctrl_.continuity_tol * ref_flux)
            throw std::runtime_error("gas pressure loop did not converge: residual " +
                                     std::to_string(rep.continuity_residual) + " after " +
                                     std::to_string(rep.outer_iterations) + " iterations");

        solve_energy(f, dt, rep);

        // realized sinks for the coupling bookkeeping
        for (int c = 0; c < n; ++c) {
            const auto s = std::size_t(c);
            f.drag_sink_x[s] = f.beta[s] * (f.u[s] - f.sol_u[s]);
            f.drag_sink_y[s] = f.beta[s] * (f.v[s] - f.sol_v[s]);
            f.heat_sink[s] = f.alpha_vol[s] * (f.T[s] - f.T_solid[s]);
        }
        return rep;
    }

    double inlet_mass_flux(const GasField& f) const {
        double m = 0.0;
        const StructuredGrid& g = f.geom;
        if (bc_.inlet.velocity == 0.0) return 0.0;
        if (bc_.inlet.side == Side::Left || bc_.inlet.side == Side::Right) {
            const int i = bc_.inlet.side == Side::Left ? 0 : nx_grid(g) - 1;
            for (int j = 0; j < g.ny; ++j) {
                const double w = span_frac(g.yc(j), g.dy, bc_.inlet.from, bc_.inlet.to);
                const auto c = std::size_t(g.idx(i, j));
                m += w * f.eps[c] * f.rho[c] * bc_.inlet.velocity * g.dy * g.thickness;
            }
        } else {
            const int j = bc_.inlet.side == Side::Bottom ? 0 : g.ny - 1;
            for (int i = 0; i < g.nx; ++i) {
                const double w = span_frac(g.xc(i), g.dx, bc_.inlet.from, bc_.inlet.to);
                const auto c = std::size_t(g.idx(i, j));
                m += w * f.eps[c] * f.rho[c] * bc_.inlet.velocity * g.dx * g.thickness;
            }
        }
        return m;
    }

private:
    static int nx_grid(const StructuredGrid& g) { return g.nx; }

    static double span_frac(double coord, double h, double a, double b) {
        const double lo = std::max(coord - 0.5 * h, a);
        const double hi = std::min(coord + 0.5 * h, b);
        return std::max(hi - lo, 0.0) / h;
    }

    /// fraction of the boundary face centred at coord lying inside the inlet
    /// span; fractional coverage keeps the injected flow resolution-independent
    double inlet_frac(Side side, double coord) const {
        const double h = (side == Side::Left || side == Side::Right) ? dy_ : dx_;
        return span_frac(coord, h, bc_.inlet.from, bc_.inlet.to);
    }

    FaceKind boundary_kind(Side side, double coord) const {
        if (bc_.inlet.velocity != 0.0 && side == bc_.inlet.side &&
            inlet_frac(side, coord) > 0.0)
            return FaceKind::Inlet;
        if (side == bc_.outlet_side) return FaceKind::Outlet;
        return bc_.slip(side) ? FaceKind::Slip : FaceKind::Wall;
    }

    void init_face_fluxes(const GasField& f) {
        const StructuredGrid& g = f.geom;
        for (int j = 0; j < ny_; ++j)
            for (int i = 1; i < nx_; ++i) {
                const auto a = std::size_t(g.idx(i - 1, j)), b = std::size_t(g.idx(i, j));
                const double er = 0.25 * (f.eps[a] + f.eps[b]) * (f.rho[a] + f.rho[b]);
                mx(i, j) = er * 0.5 * (f.u[a] + f.u[b]) * g.dy * g.thickness;
            }
        for (int j = 1; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i) {
                const auto a = std::size_t(g.idx(i, j - 1)), b = std::size_t(g.idx(i, j));
                const double er = 0.25 * (f.eps[a] + f.eps[b]) * (f.rho[a] + f.rho[b]);
                my(i, j) = er * 0.5 * (f.v[a] + f.v[b]) * g.dx * g.thickness;
            }
        boundary_face_fluxes(f);
    }

    /// boundary face mass fluxes: inlet fixed, outlet from cell velocity,
    /// walls zero
    void boundary_face_fluxes(const GasField& f) {
        const StructuredGrid& g = f.geom;
        for (int j = 0; j < ny_; ++j) {
            {
                const FaceKind k = boundary_kind(Side::Left, g.yc(j));
                const auto c = std::size_t(g.idx(0, j));
                double u_face = 0.0;
                if (k == FaceKind::Inlet)
                    u_face = bc_.inlet.velocity * inlet_frac(Side::Left, g.yc(j));
                else if (k == FaceKind::Outlet) u_face = f.u[c];
                mx(0, j) = f.eps[c] * f.rho[c] * u_face * g.dy * g.thickness;
            }
            {
                const FaceKind k = boundary_kind(Side::Right, g.yc(j));
                const auto c = std::size_t(g.idx(nx_ - 1, j));
                double u_face = 0.0;
                if (k == FaceKind::Inlet)
                    u_face = -bc_.inlet.velocity * inlet_frac(Side::Right, g.yc(j));
                else if (k == FaceKind::Outlet) u_face = f.u[c];
                mx(nx_, j) = f.eps[c] * f.rho[c] * u_face * g.dy * g.thickness;
            }
        }
        for (int i = 0; i < nx_; ++i) {
            {
                const FaceKind k = boundary_kind(Side::Bottom, g.xc(i));
                const auto c = std::size_t(g.idx(i, 0));
                double v_face = 0.0;
                if (k == FaceKind::Inlet)
                    v_face = bc_.inlet.velocity * inlet_frac(Side::Bottom, g.xc(i));
                else if (k == FaceKind::Outlet) v_face = f.v[c];
                my(i, 0) = f.eps[c] * f.rho[c] * v_face * g.dx * g.thickness;
            }
            {
                const FaceKind k = boundary_kind(Side::Top, g.xc(i));
                const auto c = std::size_t(g.idx(i, ny_ - 1));
                double v_face = 0.0;
                if (k == FaceKind::Inlet)
                    v_face = -bc_.inlet.velocity * inlet_frac(Side::Top, g.xc(i));
                else if (k == FaceKind::Outlet) v_face = f.v[c];
                my(i, ny_) = f.eps[c] * f.rho[c] * v_face * g.dx * g.thickness;
            }
        }
    }

    /// component: 0 = u, 1 = v. Upwind convection, central diffusion,
    /// implicit drag, SOR sweeps.
    void solve_momentum(GasField& f, double dt, int component) {
        const StructuredGrid& g = f.geom;
        const int n = g.cells();
        const double V = g.cell_volume();
        const double Ax = g.dy * g.thickness, Ay = g.dx * g.thickness;
        std::vector<double>& phi = component == 0 ? f.u : f.v;
        const std::vector<double>& phi_old = component == 0 ? u_old_ : v_old_;
        const std::vector<double>& sol = component == 0 ? f.sol_u : f.sol_v;
        std::vector<double>& dcoef = component == 0 ? d_u_ : d_v_;
        const double gcomp = component == 0 ? gravity_.x : gravity_.y;

        ap_.assign(std::size_t(n), 0.0);
        aE_.assign(std::size_t(n), 0.0);
        aW_.assign(std::size_t(n), 0.0);
        aN_.assign(std::size_t(n), 0.0);
        aS_.assign(std::size_t(n), 0.0);
        src_.assign(std::size_t(n), 0.0);

        for (int j = 0; j < ny_; ++j) {
            for (int i = 0; i < nx_; ++i) {
                const auto c = std::size_t(g.idx(i, j));
                double ap = f.eps[c] * rho_old_[c] * V / dt;
                double b = ap * phi_old[c];

                auto add_face = [&](double F, double D, double& a_nb, bool has_nb,
                                    double phi_bnd, bool dirichlet) {
                    // F: outgoing mass flux through this face; D: diffusion conductance
                    if (has_nb) {
                        a_nb = D + std::max(-F, 0.0);
                        ap += D + std::max(F, 0.0);
                    } else if (dirichlet) {
                        ap += D + std::max(F, 0.0);
                        b += (D + std::max(-F, 0.0)) * phi_bnd;
                    } else { // outflow / zero-gradient
                        ap += F; // F >= 0 expected
                    }
                };

                // east face
                {
                    const double F = mx(i + 1, j);
                    if (i + 1 < nx_) {
                        const auto e = std::size_t(g.idx(i + 1, j));
                        const double D = 0.5 * (f.eps[c] + f.eps[e]) * props_.viscosity * Ax / g.dx;
                        add_face(F, D, aE_[c], true, 0.0, false);
                    } else {
                        boundary_momentum_face(Side::Right, g.yc(j), component, F,
                                               f.eps[c], Ax, g.dx, ap, b);
                    }
                }
                // west face
                {
                    const double F = -mx(i, j); // outgoing through west
                    if (i > 0) {
                        const auto w = std::size_t(g.idx(i - 1, j));
                        const double D = 0.5 * (f.eps[c] + f.eps[w]) * props_.viscosity * Ax / g.dx;
                        add_face(F, D, aW_[c], true, 0.0, false);
                    } else {
                        boundary_momentum_face(Side::Left, g.yc(j), component, F,
                                               f.eps[c], Ax, g.dx, ap, b);
                    }
                }
                // north face
                {
                    const double F = my(i, j + 1);
                    if (j + 1 < ny_) {
                        const auto nn = std::size_t(g.idx(i, j + 1));
                        const double D = 0.5 * (f.eps[c] + f.eps[nn]) * props_.viscosity * Ay / g.dy;
                        add_face(F, D, aN_[c], true, 0.0, false);
                    } else {
                        boundary_momentum_face(Side::Top, g.xc(i), component, F,
                                               f.eps[c], Ay, g.dy, ap, b);
                    }
                }
                // south face
                {
                    const double F = -my(i, j);
                    if (j > 0) {
                        const auto s = std::size_t(g.idx(i, j - 1));
                        const double D = 0.5 * (f.eps[c] + f.eps[s]) * props_.viscosity * Ay / g.dy;
                        add_face(F, D, aS_[c], true, 0.0, false);
                    } else {
                        boundary_momentum_face(Side::Bottom, g.xc(i), component, F,
                                               f.eps[c], Ay, g.dy, ap, b);
                    }
                }

                // pressure gradient over the cell, face-interpolated
                double p_lo, p_hi, area;
                if (component == 0) {
                    p_lo = i > 0 ? 0.5 * (f.p[std::size_t(g.idx(i - 1, j))] + f.p[c]) : boundary_p(f, i, j, Side::Left);
                    p_hi = i + 1 < nx_ ? 0.5 * (f.p[std::size_t(g.idx(i + 1, j))] + f.p[c]) : boundary_p(f, i, j, Side::Right);
                    area = Ax;
                } else {
                    p_lo = j > 0 ? 0.5 * (f.p[std::size_t(g.idx(i, j - 1))] + f.p[c]) : boundary_p(f, i, j, Side::Bottom);
                    p_hi = j + 1 < ny_ ? 0.5 * (f.p[std::size_t(g.idx(i, j + 1))] + f.p[c]) : boundary_p(f, i, j, Side::Top);
                    area = Ay;
                }
                b += f.eps[c] * (p_lo - p_hi) * area;

                b += f.eps[c] * f.rho[c] * gcomp * V;
                ap += f.beta[c] * V;          // implicit drag
                b += f.beta[c] * V * sol[c];

                // implicit under-relaxation
                ap /= ctrl_.urf_vel;
                b += (1.0 - ctrl_.urf_vel) * ap * phi[c];
                ap_[c] = ap;
                src_[c] = b;
                const double A_main = component == 0 ? Ax : Ay;
                dcoef[c] = f.eps[c] * A_main / ap;
            }
        }

        for (int sweep = 0; sweep < ctrl_.vel_sweeps; ++sweep) {
            for (int j = 0; j < ny_; ++j)
                for (int i = 0; i < nx_; ++i) {
                    const auto c = std::size_t(g.idx(i, j));
                    double s = src_[c];
                    if (i + 1 < nx_) s += aE_[c] * phi[std::size_t(g.idx(i + 1, j))];
                    if (i > 0) s += aW_[c] * phi[std::size_t(g.idx(i - 1, j))];
                    if (j + 1 < ny_) s += aN_[c] * phi[std::size_t(g.idx(i, j + 1))];
                    if (j > 0) s += aS_[c] * phi[std::size_t(g.idx(i, j - 1))];
                    phi[c] = s / ap_[c];
                }
        }
    }

    /// boundary-face convection/diffusion for a momentum component.
    /// F is the outgoing mass flux through the face.
    void boundary_momentum_face(Side side, double coord, int component, double F,
                                double eps_c, double A, double h, double& ap, double& b) {
        const FaceKind k = boundary_kind(side, coord);
        const bool face_normal_x = (side == Side::Left || side == Side::Right);
        const bool is_normal_comp = (component == 0) == face_normal_x;
        switch (k) {
            case FaceKind::Inlet: {
                double vb = 0.0; // tangential component at inlet is zero
                if (is_normal_comp) {
                    const double sgn = (side == Side::Left || side == Side::Bottom) ? 1.0 : -1.0;
                    vb = sgn * bc_.inlet.velocity * inlet_frac(side, coord);
                }
                const double D = eps_c * props_.viscosity * A / (0.5 * h);
                ap += D + std::max(F, 0.0);
                b += (D + std::max(-F, 0.0)) * vb;
                break;
            }
            case FaceKind::Outlet:
                ap += std::max(F, 0.0); // zero-gradient outflow
                b += std::max(-F, 0.0) * 0.0;
                break;
            case FaceKind::Wall: {
                // no-slip: both components pinned to zero at the face
                const double D = eps_c * props_.viscosity * A / (0.5 * h);
                ap += D;
                break;
            }
            case FaceKind::Slip:
                // zero shear for tangential, zero normal velocity handled by flux = 0
                if (is_normal_comp) {
                    const double D = eps_c * props_.viscosity * A / (0.5 * h);
                    ap += D; // normal component vanishes at the face
                }
                break;
            default:
                break;
        }
    }

    double boundary_p(const GasField& f, int i, int j, Side side) const {
        const StructuredGrid& g = f.geom;
        const auto c = std::size_t(g.idx(i, j));
        const double coord = (side == Side::Left || side == Side::Right) ? g.yc(j) : g.xc(i);
        if (boundary_kind(side, coord) == FaceKind::Outlet) return 0.0; // fixed gauge pressure
        return f.p[c]; // zero-gradient
    }

    void rhie_chow_fluxes(GasField& f) {
        const StructuredGrid& g = f.geom;
        const double Ax = g.dy * g.thickness, Ay = g.dx * g.thickness;
        auto gradp_x = [&](int i, int j) {
            const auto c = std::size_t(g.idx(i, j));
            const double pe = i + 1 < nx_ ? f.p[std::size_t(g.idx(i + 1, j))] : 2.0 * boundary_p(f, i, j, Side::Right) - f.p[c];
            const double pw = i > 0 ? f.p[std::size_t(g.idx(i - 1, j))] : 2.0 * boundary_p(f, i, j, Side::Left) - f.p[c];
            return (pe - pw) / (2.0 * g.dx);
        };
        auto gradp_y = [&](int i, int j) {
            const auto c = std::size_t(g.idx(i, j));
            const double pn = j + 1 < ny_ ? f.p[std::size_t(g.idx(i, j + 1))] : 2.0 * boundary_p(f, i, j, Side::Top) - f.p[c];
            const double ps = j > 0 ? f.p[std::size_t(g.idx(i, j - 1))] : 2.0 * boundary_p(f, i, j, Side::Bottom) - f.p[c];
            return (pn - ps) / (2.0 * g.dy);
        };
        for (int j = 0; j < ny_; ++j)
            for (int i = 1; i < nx_; ++i) {
                const auto a = std::size_t(g.idx(i - 1, j)), b = std::size_t(g.idx(i, j));
                const double er = 0.25 * (f.eps[a] + f.eps[b]) * (f.rho[a] + f.rho[b]);
                const double df = 0.5 * (d_u_[a] + d_u_[b]);
                const double u_bar = 0.5 * (f.u[a] + f.u[b]);
                const double corr = df * ((f.p[a] - f.p[b]) / 1.0 +
                                          0.5 * (gradp_x(i - 1, j) + gradp_x(i, j)) * g.dx);
                mx(i, j) = er * (u_bar + corr) * Ax;
            }
        for (int j = 1; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i) {
                const auto a = std::size_t(g.idx(i, j - 1)), b = std::size_t(g.idx(i, j));
                const double er = 0.25 * (f.eps[a] + f.eps[b]) * (f.rho[a] + f.rho[b]);
                const double df = 0.5 * (d_v_[a] + d_v_[b]);
                const double v_bar = 0.5 * (f.v[a] + f.v[b]);
                const double corr = df * ((f.p[a] - f.p[b]) +
                                          0.5 * (gradp_y(i, j - 1) + gradp_y(i, j)) * g.dy);
                my(i, j) = er * (v_bar + corr) * Ay;
            }
        boundary_face_fluxes(f);
    }

    /// SIMPLE pressure correction; returns the pre-correction continuity
    /// residual (sum of |cell imbalance|, kg/s).
    double solve_pressure_correction(GasField& f, double dt) {
        const StructuredGrid& g = f.geom;
        const int n = g.cells();
        const double V = g.cell_volume();
        constexpr double Rgas = 8.314462618;
        const double Rs = Rgas / props_.molar_mass;

        // coefficients: interior faces
        aE_.assign(std::size_t(n), 0.0);
        aW_.assign(std::size_t(n), 0.0);
        aN_.assign(std::size_t(n), 0.0);
        aS_.assign(std::size_t(n), 0.0);
        ap_.assign(std::size_t(n), 0.0);
        src_.assign(std::size_t(n), 0.0);

        double resid = 0.0;
        for (int j = 0; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i) {
                const auto c = std::size_t(g.idx(i, j));
                double imbalance = mx(i + 1, j) - mx(i, j) + my(i, j + 1) - my(i, j);
                imbalance += f.eps[c] * (f.rho[c] - rho_old_[c]) * V / dt;
                src_[c] = -imbalance;
                resid += std::abs(imbalance);
                // compressibility: rho' = p' / (Rs T)
                ap_[c] += f.eps[c] * V / (Rs * f.T[c] * dt);
            }

        const double Ax = g.dy * g.thickness, Ay = g.dx * g.thickness;
        for (int j = 0; j < ny_; ++j)
            for (int i = 1; i < nx_; ++i) {
                const auto a = std::size_t(g.idx(i - 1, j)), b = std::size_t(g.idx(i, j));
                const double er = 0.25 * (f.eps[a] + f.eps[b]) * (f.rho[a] + f.rho[b]);
                const double coef = er * 0.5 * (d_u_[a] + d_u_[b]) * Ax;
                aE_[a] += coef;
                aW_[b] += coef;
                ap_[a] += coef;
                ap_[b] += coef;
            }
        for (int j = 1; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i) {
                const auto a = std::size_t(g.idx(i, j - 1)), b = std::size_t(g.idx(i, j));
                const double er = 0.25 * (f.eps[a] + f.eps[b]) * (f.rho[a] + f.rho[b]);
                const double coef = er * 0.5 * (d_v_[a] + d_v_[b]) * Ay;
                aN_[a] += coef;
                aS_[b] += coef;
                ap_[a] += coef;
                ap_[b] += coef;
            }
        // outlet faces: p' = 0 beyond the face
        for (int j = 0; j < ny_; ++j) {
            if (boundary_kind(Side::Left, g.yc(j)) == FaceKind::Outlet) {
                const auto c = std::size_t(g.idx(0, j));
                ap_[c] += f.eps[c] * f.rho[c] * d_u_[c] * Ax;
            }
            if (boundary_kind(Side::Right, g.yc(j)) == FaceKind::Outlet) {
                const auto c = std::size_t(g.idx(nx_ - 1, j));
                ap_[c] += f.eps[c] * f.rho[c] * d_u_[c] * Ax;
            }
        }
        for (int i = 0; i < nx_; ++i) {
            if (boundary_kind(Side::Bottom, g.xc(i)) == FaceKind::Outlet) {
                const auto c = std::size_t(g.idx(i, 0));
                ap_[c] += f.eps[c] * f.rho[c] * d_v_[c] * Ay;
            }
            if (boundary_kind(Side::Top, g.xc(i)) == FaceKind::Outlet) {
                const auto c = std::size_t(g.idx(i, ny_ - 1));
                ap_[c] += f.eps[c] * f.rho[c] * d_v_[c] * Ay;
            }
        }

        // CG solve (matrix is SPD)
        pc_.assign(std::size_t(n), 0.0);
        cg_solve(g);

        // corrections
        for (int j = 0; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i) {
                const auto c = std::size_t(g.idx(i, j));
                f.p[c] += ctrl_.urf_p * pc_[c];
                const double pe = i + 1 < nx_ ? 0.5 * (pc_[c] + pc_[std::size_t(g.idx(i + 1, j))])
                                              : boundary_pc(g, i, j, Side::Right);
                const double pw = i > 0 ? 0.5 * (pc_[c] + pc_[std::size_t(g.idx(i - 1, j))])
                                        : boundary_pc(g, i, j, Side::Left);
                const double pn = j + 1 < ny_ ? 0.5 * (pc_[c] + pc_[std::size_t(g.idx(i, j + 1))])
                                              : boundary_pc(g, i, j, Side::Top);
                const double ps = j > 0 ? 0.5 * (pc_[c] + pc_[std::size_t(g.idx(i, j - 1))])
                                        : boundary_pc(g, i, j, Side::Bottom);
                f.u[c] += d_u_[c] * (pw - pe);
                f.v[c] += d_v_[c] * (ps - pn);
            }
        // face flux corrections keep discrete continuity
        for (int j = 0; j < ny_; ++j)
            for (int i = 1; i < nx_; ++i) {
                const auto a = std::size_t(g.idx(i - 1, j)), b = std::size_t(g.idx(i, j));
                mx(i, j) += aE_[a] * (pc_[a] - pc_[b]);
            }
        for (int j = 1; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i) {
                const auto a = std::size_t(g.idx(i, j - 1)), b = std::size_t(g.idx(i, j));
                my(i, j) += aN_[a] * (pc_[a] - pc_[b]);
            }
        boundary_face_fluxes(f);
        return resid;
    }

    double boundary_pc(const StructuredGrid& g, int i, int j, Side side) const {
        const double coord = (side == Side::Left || side == Side::Right) ? g.yc(j) : g.xc(i);
        if (boundary_kind(side, coord) == FaceKind::Outlet) return 0.0;
        return pc_[std::size_t(g.idx(i, j))]; // zero-gradient
    }

    void cg_solve(const StructuredGrid& g) {
        const int n = g.cells();
        auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
            for (int j = 0; j < ny_; ++j)
                for (int i = 0; i < nx_; ++i) {
                    const auto c = std::size_t(g.idx(i, j));
                    double s = ap_[c] * x[c];
                    if (i + 1 < nx_) s -= aE_[c] * x[std::size_t(g.idx(i + 1, j))];
                    if (i > 0) s -= aW_[c] * x[std::size_t(g.idx(i - 1, j))];
                    if (j + 1 < ny_) s -= aN_[c] * x[std::size_t(g.idx(i, j + 1))];
                    if (j > 0) s -= aS_[c] * x[std::size_t(g.idx(i, j - 1))];
                    y[c] = s;
                }
        };
        std::vector<double> r = src_;
        std::vector<double> z(std::size_t(n), 0.0), pdir(std::size_t(n), 0.0),
            q(std::size_t(n), 0.0);
        double b_norm = 0.0;
        for (double x : src_) b_norm += x * x;
        b_norm = std::sqrt(b_norm);
        if (b_norm == 0.0) return;
        for (int c = 0; c < n; ++c) z[std::size_t(c)] = r[std::size_t(c)] / ap_[std::size_t(c)];
        pdir = z;
        double rz = 0.0;
        for (int c = 0; c < n; ++c) rz += r[std::size_t(c)] * z[std::size_t(c)];
        for (int it = 0; it < 4 * n; ++it) {
            apply(pdir, q);
            double pq = 0.0;
            for (int c = 0; c < n; ++c) pq += pdir[std::size_t(c)] * q[std::size_t(c)];
            if (pq == 0.0) break;
            const double alpha = rz / pq;
            double r_norm = 0.0;
            for (int c = 0; c < n; ++c) {
                pc_[std::size_t(c)] += alpha * pdir[std::size_t(c)];
                r[std::size_t(c)] -= alpha * q[std::size_t(c)];
                r_norm += r[std::size_t(c)] * r[std::size_t(c)];
            }
            if (std::sqrt(r_norm) <= ctrl_.p_solve_tol * b_norm) break;
            for (int c = 0; c < n; ++c) z[std::size_t(c)] = r[std::size_t(c)] / ap_[std::size_t(c)];
            double rz_new = 0.0;
            for (int c = 0; c < n; ++c) rz_new += r[std::size_t(c)] * z[std::size_t(c)];
            const double beta = rz_new / rz;
            rz = rz_new;
            for (int c = 0; c < n; ++c)
                pdir[std::size_t(c)] = z[std::size_t(c)] + beta * pdir[std::size_t(c)];
        }
    }

    void solve_energy(GasField& f, double dt, GasStepReport& rep) {
        const StructuredGrid& g = f.geom;
        const int n = g.cells();
        const double V = g.cell_volume();
        const double cp = props_.heat_capacity;
        const double Ax = g.dy * g.thickness, Ay = g.dx * g.thickness;

        ap_.assign(std::size_t(n), 0.0);
        aE_.assign(std::size_t(n), 0.0);
        aW_.assign(std::size_t(n), 0.0);
        aN_.assign(std::size_t(n), 0.0);
        aS_.assign(std::size_t(n), 0.0);
        src_.assign(std::size_t(n), 0.0);

        for (int j = 0; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i) {
                const auto c = std::size_t(g.idx(i, j));
                double ap = f.eps[c] * f.rho[c] * cp * V / dt;
                double b = f.eps[c] * rho_old_[c] * cp * V / dt * T_old_[c] +
                           f.eps[c] * (f.rho[c] - rho_old_[c]) * cp * V / dt * T_old_[c];
                // (the two transient terms combine so a uniform T field is a
                //  fixed point under density change)

                // east
                if (i + 1 < nx_) {
                    const auto e = std::size_t(g.idx(i + 1, j));
                    const double D = 0.5 * (f.eps[c] + f.eps[e]) * props_.conductivity / cp * Ax / g.dx;
                    const double F = mx(i + 1, j);
                    aE_[c] = cp * (D + std::max(-F, 0.0));
                    ap += cp * (D + std::max(F, 0.0));
                } else {
                    energy_boundary(Side::Right, g.yc(j), mx(i + 1, j), cp, ap, b);
                }
                // west
                if (i > 0) {
                    const auto w = std::size_t(g.idx(i - 1, j));
                    const double D = 0.5 * (f.eps[c] + f.eps[w]) * props_.conductivity / cp * Ax / g.dx;
                    const double F = -mx(i, j);
                    aW_[c] = cp * (D + std::max(-F, 0.0));
                    ap += cp * (D + std::max(F, 0.0));
                } else {
                    energy_boundary(Side::Left, g.yc(j), -mx(i, j), cp, ap, b);
                }
                // north
                if (j + 1 < ny_) {
                    const auto nn = std::size_t(g.idx(i, j + 1));
                    const double D = 0.5 * (f.eps[c] + f.eps[nn]) * props_.conductivity / cp * Ay / g.dy;
                    const double F = my(i, j + 1);
                    aN_[c] = cp * (D + std::max(-F, 0.0));
                    ap += cp * (D + std::max(F, 0.0));
                } else {
                    energy_boundary(Side::Top, g.xc(i), my(i, j + 1), cp, ap, b);
                }
                // south
                if (j > 0) {
                    const auto s = std::size_t(g.idx(i, j - 1));
                    const double D = 0.5 * (f.eps[c] + f.eps[s]) * props_.conductivity / cp * Ay / g.dy;
                    const double F = -my(i, j);
                    aS_[c] = cp * (D + std::max(-F, 0.0));
                    ap += cp * (D + std::max(F, 0.0));
                } else {
                    energy_boundary(Side::Bottom, g.xc(i), -my(i, j), cp, ap, b);
                }

                ap += f.alpha_vol[c] * V;          // implicit convective sink
                b += f.alpha_vol[c] * V * f.T_solid[c];

                ap_[c] = ap;
                src_[c] = b;
            }

        for (int sweep = 0; sweep < ctrl_.energy_sweeps; ++sweep) {
            double max_change = 0.0;
            for (int j = 0; j < ny_; ++j)
                for (int i = 0; i < nx_; ++i) {
                    const auto c = std::size_t(g.idx(i, j));
                    double s = src_[c];
                    if (i + 1 < nx_) s += aE_[c] * f.T[std::size_t(g.idx(i + 1, j))];
                    if (i > 0) s += aW_[c] * f.T[std::size_t(g.idx(i - 1, j))];
                    if (j + 1 < ny_) s += aN_[c] * f.T[std::size_t(g.idx(i, j + 1))];
                    if (j > 0) s += aS_[c] * f.T[std::size_t(g.idx(i, j - 1))];
                    const double Tn = s / ap_[c];
                    max_change = std::max(max_change, std::abs(Tn - f.T[c]));
                    f.T[c] = Tn;
                }
            if (max_change < 1e-12) break;
        }

        // discrete balance terms (interior faces telescope exactly)
        const double cp2 = cp;
        for (int j = 0; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i) {
                const auto c = std::size_t(g.idx(i, j));
                rep.energy_storage += f.eps[c] * f.rho[c] * cp2 * V / dt * (f.T[c] - T_old_[c]);
                rep.energy_sink += f.alpha_vol[c] * V * (f.T[c] - f.T_solid[c]);
                auto tally = [&](Side side, double coord, double F_out) {
                    const FaceKind k = boundary_kind(side, coord);
                    if (k == FaceKind::Inlet)
                        rep.energy_in += cp2 * (std::max(-F_out, 0.0) * bc_.inlet.temperature -
                                                std::max(F_out, 0.0) * f.T[c]);
                    else if (k == FaceKind::Outlet)
                        rep.energy_out += cp2 * (std::max(F_out, 0.0) * f.T[c] -
                                                 std::max(-F_out, 0.0) * bc_.inlet.temperature);
                };
                if (i == 0) tally(Side::Left, g.yc(j), -mx(0, j));
                if (i + 1 == nx_) tally(Side::Right, g.yc(j), mx(nx_, j));
                if (j == 0) tally(Side::Bottom, g.xc(i), -my(i, 0));
                if (j + 1 == ny_) tally(Side::Top, g.xc(i), my(i, ny_));
            }
    }

    void energy_boundary(Side side, double coord, double F_out, double cp,
                         double& ap, double& b) {
        const FaceKind k = boundary_kind(side, coord);
        if (k == FaceKind::Inlet) {
            ap += cp * std::max(F_out, 0.0);
            b += cp * std::max(-F_out, 0.0) * bc_.inlet.temperature;
        } else if (k == FaceKind::Outlet) {
            ap += cp * std::max(F_out, 0.0);
            b += cp * std::max(-F_out, 0.0) * bc_.inlet.temperature; // backflow guard
        }
        // walls: adiabatic, no terms
    }

    double reference_flux(const GasField&) const {
        double m = 0.0;
        int count = 0;
        for (double x : mdot_x_) { m += std::abs(x); ++count; }
        for (double x : mdot_y_) { m += std::abs(x); ++count; }
        const double mean = count > 0 ? m / count : 0.0;
        return std::max(mean, 1e-12);
    }

    double& mx(int i, int j) { return mdot_x_[std::size_t(j * (nx_ + 1) + i)]; }
    double& my(int i, int j) { return mdot_y_[std::size_t(j * nx_ + i)]; }
    double mx(int i, int j) const { return mdot_x_[std::size_t(j * (nx_ + 1) + i)]; }
    double my(int i, int j) const { return mdot_y_[std::size_t(j * nx_ + i)]; }

public:
    void set_gravity(Vec2 g) { gravity_ = g; }
    double face_flux_x(int i, int j) const { return mx(i, j); }
    double face_flux_y(int i, int j) const { return my(i, j); }

private:
    GasProperties props_;
    GasBoundary bc_;
    GasSolverControls ctrl_;
    Vec2 gravity_{0.0, 0.0};
    int nx_ = 0, ny_ = 0;
    double dx_ = 0.0, dy_ = 0.0;

    std::vector<double> rho_old_, u_old_, v_old_, T_old_;
    std::vector<double> mdot_x_, mdot_y_;
    std::vector<double> d_u_, d_v_;
    std::vector<double> ap_, aE_, aW_, aN_, aS_, src_, pc_;
};

} // namespace softbed
