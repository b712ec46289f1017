#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "chrelax/errors.hpp"
#include "chrelax/grid.hpp"
#include "chrelax/potential.hpp"
#include "chrelax/step_system.hpp"

namespace chrelax {

struct TimeGrid {
    double T = 1.0;
    int nt = 2;

    double dt() const { return T / nt; }
    double t(int n) const { return n * dt(); }

    void validate() const {
        if (!(T > 0.0)) throw Error("final time T must be positive");
        if (nt < 2) throw Error("time grid needs at least 2 steps");
    }
};

/// Trapezoidal weight of time level n in quadratures over [0, T].
inline double time_weight(const TimeGrid& tg, int n) {
    return (n == 0 || n == tg.nt) ? 0.5 * tg.dt() : tg.dt();
}

struct StateParams {
    double alpha = 0.1; // hyperbolic relaxation coefficient, 0 selects the limit solver
    double tau = 1.0;   // viscosity
    double gamma = 1.0; // control-equation relaxation

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("alpha must lie in [0, 1]");
        if (!(tau > 0.0)) throw Error("tau must be positive");
        if (!(gamma > 0.0)) throw Error("gamma must be positive");
    }
};

struct InitialData {
    Field mu0, nu0, phi0, w0;
};

/// Piecewise-constant-in-time control: at_step(n) is the value on
/// (t_{n-1}, t_n] for n = 1..nt.
struct ControlTrajectory {
    GridPtr grid;
    int nt = 0;
    std::vector<Field> steps; // steps[n-1] holds u^n

    ControlTrajectory() = default;
    ControlTrajectory(GridPtr g, int nt_, double fill = 0.0)
        : grid(std::move(g)), nt(nt_), steps(nt_, Field(grid, fill)) {}

    Field& at_step(int n) { return steps[n - 1]; }
    const Field& at_step(int n) const { return steps[n - 1]; }

    static ControlTrajectory zero(const GridPtr& g, int nt) { return ControlTrajectory(g, nt); }

    /// Samples f(x, y, t) at the midpoint of each step interval, which makes
    /// the piecewise-constant trajectory a second-order representative of a
    /// continuous control.
    static ControlTrajectory from_function(const GridPtr& g, const TimeGrid& tg,
                                           const std::function<double(double, double, double)>& f) {
        ControlTrajectory u(g, tg.nt);
        for (int n = 1; n <= tg.nt; ++n) {
            const double t = (n - 0.5) * tg.dt();
            u.at_step(n) = make_field(g, [&](double x, double y) { return f(x, y, t); });
        }
        return u;
    }
};

inline double control_inner(const ControlTrajectory& a, const ControlTrajectory& b, double dt) {
    double s = 0.0;
    for (int n = 1; n <= a.nt; ++n) s += dt * inner_product(a.at_step(n), b.at_step(n));
    return s;
}

inline double control_norm(const ControlTrajectory& a, double dt) {
    return std::sqrt(control_inner(a, a, dt));
}

inline double control_max_abs(const ControlTrajectory& a) {
    double m = 0.0;
    for (const Field& f : a.steps) m = std::max(m, norm_linf(f));
    return m;
}

/// Optional manufactured-solution sources added to the right sides of the two
/// step residuals; absent (null) in production runs.
struct MmsSources {
    std::vector<Field> g_mu;  // g_mu[n-1] enters step n
    std::vector<Field> g_phi;
};

struct NewtonOptions {
    double tolerance = 1e-11;       // residual l2 <= tolerance * scale
    int max_iters = 30;
    double boundary_fraction = 0.95; // fraction-to-boundary damping (singular potentials)
};

struct NewtonStepStats {
    int iterations = 0;
    std::vector<double> residuals; // residual history incl. the initial one
};

struct StateSpec {
    GridPtr grid;
    TimeGrid time;
    StateParams params;
    PotentialSpec potential;
    InitialData init;
    NewtonOptions newton;

    void validate() const {
        time.validate();
        params.validate();
        for (const Field* f : {&init.mu0, &init.nu0, &init.phi0, &init.w0}) {
            if (!f->grid || !f->grid->same_as(*grid))
                throw GridMismatch("initial data must live on the problem grid");
        }
        if (potential.singular()) {
            for (double v : init.phi0.values)
                if (!(v > -1.0 && v < 1.0))
                    throw DomainViolation("phi0 must be strictly inside (-1, 1) "
                                          "for the logarithmic potential");
        }
    }
};

struct StateTrajectory {
    GridPtr grid;
    TimeGrid time;
    StateParams params;
    PotentialSpec potential;
    ControlTrajectory control;
    std::vector<Field> mu, phi, w;  // levels 0..nt
    Field mu_ghost;                 // mu^{-1} = mu0 - dt * nu0 (alpha > 0 path)
    std::vector<NewtonStepStats> newton_stats; // one per step
    bool alpha_zero_path = false;
    std::string warning;
    double mean_nu0 = 0.0;
    double mean_phi0 = 0.0;
};

/// Implicit Euler update of the control equation gamma w_t + w = u.
inline Field w_step(double gamma, double dt, const Field& w_prev, const Field& u_cur) {
    if (!(gamma > 0.0) || !(dt > 0.0)) throw Error("w_step: gamma and dt must be positive");
    require_same_grid(w_prev, u_cur, "w_step");
    Field out(w_prev.grid);
    const double aw = gamma / (gamma + dt);
    const double bw = dt / (gamma + dt);
    for (int k = 0; k < out.size(); ++k)
        out.values[k] = aw * w_prev.values[k] + bw * u_cur.values[k];
    return out;
}

struct StepInput {
    const Field& mu;       // mu^n      (ignored when alpha = 0)
    const Field& mu_minus; // mu^{n-1}  (ignored when alpha = 0)
    const Field& phi;      // phi^n
    const Field& w_new;    // w^{n+1}, already advanced
};

struct StepOutput {
    Field mu, phi;
    NewtonStepStats stats;
};

namespace detail {

/// Residuals of the implicit step at iterate (mu, phi):
///   R1 = alpha (mu - 2 mu^n + mu^{n-1})/dt^2 + (phi - phi^n)/dt - L mu - g_mu
///        (the alpha term is dropped on the limit path)
///   R2 = tau (phi - phi^n)/dt - L phi + f'(phi) - mu - w^{n+1} - g_phi
/// Also reports a majorant of the term magnitudes; eps times that majorant is
/// the round-off floor below which the residual cannot be driven, which
/// matters once alpha/dt^2 is large.
inline double step_residual(const StateParams& p, const PotentialSpec& pot, double dt,
                            const StepInput& in, const Field& mu, const Field& phi,
                            const Field* g_mu, const Field* g_phi, bool alpha_zero,
                            std::vector<double>& r1, std::vector<double>& r2) {
    const Grid& g = *mu.grid;
    const int n = g.total_nodes();
    r1.assign(n, 0.0);
    r2.assign(n, 0.0);
    const double inv_dt = 1.0 / dt;
    const double amass = alpha_zero ? 0.0 : p.alpha / (dt * dt);
    double lapscale = 4.0 / (g.spacing(0) * g.spacing(0));
    if (g.dim() == 2) lapscale += 4.0 / (g.spacing(1) * g.spacing(1));
    double major2 = 0.0;
    for (int k = 0; k < n; ++k) {
        double v = (phi.values[k] - in.phi.values[k]) * inv_dt;
        if (!alpha_zero)
            v += amass * (mu.values[k] - 2.0 * in.mu.values[k] + in.mu_minus.values[k]);
        r1[k] = v;
        const double fp = pot.df(phi.values[k]);
        r2[k] = p.tau * inv_dt * (phi.values[k] - in.phi.values[k]) + fp - mu.values[k] -
                in.w_new.values[k];
        double m1 = inv_dt * (std::abs(phi.values[k]) + std::abs(in.phi.values[k])) +
                    lapscale * std::abs(mu.values[k]);
        if (!alpha_zero)
            m1 += amass * (std::abs(mu.values[k]) + 2.0 * std::abs(in.mu.values[k]) +
                           std::abs(in.mu_minus.values[k]));
        double m2 = p.tau * inv_dt * (std::abs(phi.values[k]) + std::abs(in.phi.values[k])) +
                    lapscale * std::abs(phi.values[k]) + std::abs(fp) +
                    std::abs(mu.values[k]) + std::abs(in.w_new.values[k]);
        if (g_mu) m1 += std::abs(g_mu->values[k]);
        if (g_phi) m2 += std::abs(g_phi->values[k]);
        major2 += g.weight(k) * (m1 * m1 + m2 * m2);
    }
    g.add_laplacian(mu.values, r1, -1.0);
    g.add_laplacian(phi.values, r2, -1.0);
    if (g_mu)
        for (int k = 0; k < n; ++k) r1[k] -= g_mu->values[k];
    if (g_phi)
        for (int k = 0; k < n; ++k) r2[k] -= g_phi->values[k];
    return std::sqrt(major2);
}

inline double weighted_norm2(const Grid& g, const std::vector<double>& r1,
                             const std::vector<double>& r2) {
    double s = 0.0;
    const auto& w = g.weights();
    for (int k = 0; k < g.total_nodes(); ++k) s += w[k] * (r1[k] * r1[k] + r2[k] * r2[k]);
    return std::sqrt(s);
}

} // namespace detail

/// One fully implicit time step: advances (mu, phi) by a damped Newton solve
/// of the coupled residuals, after w has been advanced by w_step. For
/// singular potentials the iterates are kept strictly interior by
/// fraction-to-boundary damping, never by truncation.
inline StepOutput state_step(const StateParams& params, const PotentialSpec& pot, double dt,
                             const StepInput& in, const NewtonOptions& opts,
                             const Field* g_mu = nullptr, const Field* g_phi = nullptr,
                             bool alpha_zero = false) {
    const GridPtr grid = in.phi.grid;
    const Grid& g = *grid;
    const int n = g.total_nodes();
    alpha_zero = alpha_zero || params.alpha == 0.0;

    Field mu = in.mu; // initial guess: previous level
    Field phi = in.phi;

    const double scale = 1.0 + norm_l2(in.phi) + norm_l2(in.mu);

    std::vector<double> r1, r2, dmu, dphi, fpp(n);
    NewtonStepStats stats;
    double majorant =
        detail::step_residual(params, pot, dt, in, mu, phi, g_mu, g_phi, alpha_zero, r1, r2);
    double res = detail::weighted_norm2(g, r1, r2);
    stats.residuals.push_back(res);
    // converged when at the requested tolerance or at the evaluation roundoff floor
    auto tol = [&]() {
        return std::max(opts.tolerance * scale,
                        4.0 * std::numeric_limits<double>::epsilon() * majorant);
    };

    while (res > tol()) {
        if (stats.iterations >= opts.max_iters)
            throw NewtonDivergence("state step: residual " + std::to_string(res) +
                                   " above tolerance after " + std::to_string(opts.max_iters) +
                                   " iterations");
        for (int k = 0; k < n; ++k) fpp[k] = pot.d2f(phi.values[k]);
        CoupledStepSolver solver(grid, alpha_zero ? 0.0 : params.alpha, dt, params.tau, fpp,
                                 /*adjoint=*/false);
        for (int k = 0; k < n; ++k) { r1[k] = -r1[k]; r2[k] = -r2[k]; }
        solver.solve(r1, r2, dmu, dphi);

        double lambda = 1.0;
        if (pot.singular()) {
            const double dom = 1.0 - pot.delta_dom;
            double cap = std::numeric_limits<double>::infinity();
            for (int k = 0; k < n; ++k) {
                if (dphi[k] > 0.0) cap = std::min(cap, (dom - phi.values[k]) / dphi[k]);
                else if (dphi[k] < 0.0) cap = std::min(cap, (-dom - phi.values[k]) / dphi[k]);
            }
            lambda = std::min(1.0, opts.boundary_fraction * cap);
            if (!(lambda > 1e-8))
                throw DomainViolation("state step: damping cannot keep phi interior "
                                      "(separation failure or too-large dt)");
        }
        for (int k = 0; k < n; ++k) {
            mu.values[k] += lambda * dmu[k];
            phi.values[k] += lambda * dphi[k];
        }
        ++stats.iterations;
        majorant =
            detail::step_residual(params, pot, dt, in, mu, phi, g_mu, g_phi, alpha_zero, r1, r2);
        res = detail::weighted_norm2(g, r1, r2);
        stats.residuals.push_back(res);
        if (stats.iterations >= opts.max_iters && res > stats.residuals.front())
            throw NewtonDivergence("state step: residual did not decrease");
    }

    if (!all_finite(mu) || !all_finite(phi))
        throw NewtonDivergence("state step: non-finite iterate");
    return StepOutput{std::move(mu), std::move(phi), std::move(stats)};
}

/// Integrates the full state system over the time grid. For alpha = 0 the
/// inertial mu term is dropped and each step solves the coupled
/// elliptic-parabolic system; mu0 and nu0 are ignored on that path.
inline StateTrajectory solve_state(const StateSpec& spec, const ControlTrajectory& u,
                                   const MmsSources* mms = nullptr) {
    spec.validate();
    if (!u.grid || !u.grid->same_as(*spec.grid) || u.nt != spec.time.nt)
        throw GridMismatch("solve_state: control does not match grid/time discretization");
    if (mms && (static_cast<int>(mms->g_mu.size()) != spec.time.nt ||
                static_cast<int>(mms->g_phi.size()) != spec.time.nt))
        throw Error("solve_state: sources must provide one field per step");

    StateTrajectory traj;
    traj.grid = spec.grid;
    traj.time = spec.time;
    traj.params = spec.params;
    traj.potential = spec.potential;
    traj.control = u;
    traj.alpha_zero_path = spec.params.alpha < 1e-14;
    if (spec.params.alpha > 0.0 && traj.alpha_zero_path)
        traj.warning = "alpha below 1e-14: routed to the alpha = 0 solver";
    traj.mean_nu0 = mean(spec.init.nu0);
    traj.mean_phi0 = mean(spec.init.phi0);

    const int nt = spec.time.nt;
    const double dt = spec.time.dt();
    traj.mu.reserve(nt + 1);
    traj.phi.reserve(nt + 1);
    traj.w.reserve(nt + 1);
    traj.mu.push_back(spec.init.mu0);
    traj.phi.push_back(spec.init.phi0);
    traj.w.push_back(spec.init.w0);
    traj.mu_ghost = spec.init.mu0;
    axpy(-dt, spec.init.nu0, traj.mu_ghost);
    traj.newton_stats.reserve(nt);

    for (int n = 1; n <= nt; ++n) {
        Field w_new = w_step(spec.params.gamma, dt, traj.w[n - 1], u.at_step(n));
        const Field& mu_minus = (n == 1) ? traj.mu_ghost : traj.mu[n - 2];
        StepInput in{traj.mu[n - 1], mu_minus, traj.phi[n - 1], w_new};
        const Field* gm = mms ? &mms->g_mu[n - 1] : nullptr;
        const Field* gp = mms ? &mms->g_phi[n - 1] : nullptr;
        StepOutput out = state_step(spec.params, spec.potential, dt, in, spec.newton, gm, gp,
                                    traj.alpha_zero_path);
        traj.mu.push_back(std::move(out.mu));
        traj.phi.push_back(std::move(out.phi));
        traj.w.push_back(std::move(w_new));
        traj.newton_stats.push_back(std::move(out.stats));
    }
    return traj;
}

struct SeparationReport {
    double phi_min = 0.0;
    double phi_max = 0.0;
    double margin = 0.0; // +inf for potentials with full-line domain
};

inline SeparationReport separation_report(const StateTrajectory& traj) {
    SeparationReport rep;
    rep.phi_min = std::numeric_limits<double>::infinity();
    rep.phi_max = -std::numeric_limits<double>::infinity();
    for (const Field& f : traj.phi)
        for (double v : f.values) {
            rep.phi_min = std::min(rep.phi_min, v);
            rep.phi_max = std::max(rep.phi_max, v);
        }
    if (traj.potential.singular())
        rep.margin = std::min(rep.phi_min - (-1.0), 1.0 - rep.phi_max);
    else
        rep.margin = std::numeric_limits<double>::infinity();
    return rep;
}

/// Per-level residual of the telescoped mean identity. For alpha > 0:
/// |alpha (mean mu^n - mean mu^{n-1})/dt + mean phi^n - (alpha mean nu0 + mean phi0)|;
/// for the alpha = 0 path the mass-conservation defect |mean phi^n - mean phi0|.
inline std::vector<double> mean_identity_residuals(const StateTrajectory& traj) {
    const int nt = traj.time.nt;
    const double dt = traj.time.dt();
    std::vector<double> out(nt + 1, 0.0);
    if (traj.alpha_zero_path) {
        const double m0 = mean(traj.phi[0]);
        for (int n = 0; n <= nt; ++n) out[n] = std::abs(mean(traj.phi[n]) - m0);
        return out;
    }
    const double target = traj.params.alpha * traj.mean_nu0 + traj.mean_phi0;
    double mu_prev = mean(traj.mu_ghost);
    for (int n = 0; n <= nt; ++n) {
        const double mu_n = mean(traj.mu[n]);
        out[n] = std::abs(traj.params.alpha * (mu_n - mu_prev) / dt + mean(traj.phi[n]) - target);
        mu_prev = mu_n;
    }
    return out;
}

// L2(Q) and C0(L2) distances between level sequences (0..nt), trapezoidal in
// time; used by the verification and sweep drivers.

inline double levels_l2Q(const std::vector<Field>& a, const std::vector<Field>& b,
                         const TimeGrid& tg) {
    double s = 0.0;
    for (int n = 0; n <= tg.nt; ++n) {
        Field d = a[n] - b[n];
        s += time_weight(tg, n) * inner_product(d, d);
    }
    return std::sqrt(s);
}

inline double levels_linf_l2(const std::vector<Field>& a, const std::vector<Field>& b) {
    double m = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, norm_l2(a[n] - b[n]));
    return m;
}

} // namespace chrelax
