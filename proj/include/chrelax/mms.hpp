#pragma once

#include <cmath>
#include <vector>

#include "chrelax/state.hpp"

namespace chrelax {

/// Manufactured solution for the 1D verification runs:
///   mu*(x,t)  = cos(k x) cos(t),            k = pi / L,
///   phi*(x,t) = m + a cos(k x) sin(t),
///   w* = 0, u* = 0  (w0 = 0 keeps the control chain exactly zero),
/// with sources
///   g_mu  = (k^2 - alpha + a) cos(k x) cos(t)
///   g_phi = tau a cos(k x) cos(t) + k^2 a cos(k x) sin(t) + f'(phi*) - mu*.
/// Both profiles are even about the endpoints, so the mirror-ghost stencil is
/// exact at the boundary and the scheme converges at second order in space
/// and first order in time.
struct MmsCase {
    double amplitude = 0.3;
    double mean_level = 0.0;

    double mu_exact(double x, double t, double L) const {
        return std::cos(M_PI * x / L) * std::cos(t);
    }
    double phi_exact(double x, double t, double L) const {
        return mean_level + amplitude * std::cos(M_PI * x / L) * std::sin(t);
    }

    StateSpec make_spec(const GridPtr& grid, const TimeGrid& tg, const StateParams& params,
                        const PotentialSpec& pot, const NewtonOptions& newton) const {
        StateSpec spec;
        spec.grid = grid;
        spec.time = tg;
        spec.params = params;
        spec.potential = pot;
        spec.newton = newton;
        const double L = grid->extent(0);
        spec.init.mu0 = make_field(grid, [&](double x, double) { return mu_exact(x, 0.0, L); });
        spec.init.nu0 = Field(grid, 0.0);
        spec.init.phi0 = make_field(grid, [&](double x, double) { return phi_exact(x, 0.0, L); });
        spec.init.w0 = Field(grid, 0.0);
        return spec;
    }

    MmsSources make_sources(const StateSpec& spec) const {
        const double L = spec.grid->extent(0);
        const double k = M_PI / L;
        const double a = amplitude;
        const double alpha = spec.params.alpha;
        const double tau = spec.params.tau;
        MmsSources src;
        for (int n = 1; n <= spec.time.nt; ++n) {
            const double t = spec.time.t(n);
            src.g_mu.push_back(make_field(spec.grid, [&](double x, double) {
                return (k * k - alpha + a) * std::cos(k * x) * std::cos(t);
            }));
            src.g_phi.push_back(make_field(spec.grid, [&](double x, double) {
                const double phi = mean_level + a * std::cos(k * x) * std::sin(t);
                return tau * a * std::cos(k * x) * std::cos(t) +
                       k * k * a * std::cos(k * x) * std::sin(t) + spec.potential.df(phi) -
                       std::cos(k * x) * std::cos(t);
            }));
        }
        return src;
    }
};

struct MmsLevel {
    int nx = 0, nt = 0;
    double err_phi = 0.0;
    double err_mu = 0.0;
    double order = 0.0; // log2 error ratio vs the previous level, on err_phi
};

/// Runs the manufactured case on the given (nx, nt) levels and reports L2(Q)
/// errors plus observed orders between consecutive levels. The refined
/// quantity (h for a space study with dt ~ h^2, dt for a time study) halves
/// per level, so the order is the plain log2 of the error ratio.
inline std::vector<MmsLevel> mms_study(const MmsCase& mcase, const StateParams& params,
                                       const PotentialSpec& pot, const NewtonOptions& newton,
                                       double L, double T,
                                       const std::vector<std::pair<int, int>>& levels) {
    std::vector<MmsLevel> out;
    for (auto [nx, nt] : levels) {
        GridPtr grid = Grid::interval(L, nx);
        TimeGrid tg{T, nt};
        StateSpec spec = mcase.make_spec(grid, tg, params, pot, newton);
        MmsSources src = mcase.make_sources(spec);
        ControlTrajectory u = ControlTrajectory::zero(grid, nt);
        StateTrajectory traj = solve_state(spec, u, &src);

        std::vector<Field> phi_ex, mu_ex;
        for (int n = 0; n <= nt; ++n) {
            const double t = tg.t(n);
            phi_ex.push_back(make_field(grid, [&](double x, double) {
                return mcase.phi_exact(x, t, L);
            }));
            mu_ex.push_back(make_field(grid, [&](double x, double) {
                return mcase.mu_exact(x, t, L);
            }));
        }
        MmsLevel lvl;
        lvl.nx = nx;
        lvl.nt = nt;
        lvl.err_phi = levels_l2Q(traj.phi, phi_ex, tg);
        lvl.err_mu = levels_l2Q(traj.mu, mu_ex, tg);
        if (!out.empty()) lvl.order = std::log2(out.back().err_phi / lvl.err_phi);
        out.push_back(lvl);
    }
    return out;
}

} // namespace chrelax
