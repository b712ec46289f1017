#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "chrelax/errors.hpp"
#include "chrelax/grid.hpp"
#include "chrelax/state.hpp"
#include "chrelax/step_system.hpp"

namespace chrelax {

/// Tracking weights, control-cost weight and sparsity parameter together with
/// the target fields. phi_Q carries one field per time level (0..nt).
struct CostData {
    double b1 = 1.0;
    double b2 = 0.0;
    double b3 = 1e-2;
    double kappa = 0.0;
    std::vector<Field> phi_Q;
    Field phi_Omega;

    void validate(const GridPtr& grid, int nt) const {
        if (!(b3 > 0.0)) throw Error("cost: b3 must be positive");
        if (b1 < 0.0 || b2 < 0.0 || kappa < 0.0)
            throw Error("cost: b1, b2, kappa must be nonnegative");
        if (static_cast<int>(phi_Q.size()) != nt + 1)
            throw Error("cost: phi_Q must provide one field per time level");
        for (const Field& f : phi_Q)
            if (!f.grid || !f.grid->same_as(*grid))
                throw GridMismatch("cost: phi_Q lives on the wrong grid");
        if (!phi_Omega.grid || !phi_Omega.grid->same_as(*grid))
            throw GridMismatch("cost: phi_Omega lives on the wrong grid");
    }
};

/// Directions through the state map: (eta, psi, v) at levels 0..nt with zero
/// initial levels.
struct LinearizedTrajectory {
    std::vector<Field> eta, psi, v;
};

/// Backward multipliers p, q, r at steps 1..nt (accessed via at_step), plus
/// the smooth reduced gradient b3 u + r per step.
struct AdjointTrajectory {
    GridPtr grid;
    int nt = 0;
    std::vector<Field> p, q, r;      // [n-1] holds step n
    ControlTrajectory grad_smooth;

    const Field& p_at(int n) const { return p[n - 1]; }
    const Field& q_at(int n) const { return q[n - 1]; }
    const Field& r_at(int n) const { return r[n - 1]; }
};

/// Exact directional derivative of the discrete state map: every step solves
/// the Newton-converged Jacobian system of the corresponding forward step,
/// with f''(phi) frozen at the stored state.
inline LinearizedTrajectory solve_linearized(const StateTrajectory& state,
                                             const ControlTrajectory& h) {
    if (!h.grid || !h.grid->same_as(*state.grid) || h.nt != state.time.nt)
        throw GridMismatch("solve_linearized: direction does not match the state discretization");
    if (state.phi.size() != static_cast<std::size_t>(state.time.nt) + 1)
        throw Error("solve_linearized: incomplete stored state");

    const GridPtr grid = state.grid;
    const int nt = state.time.nt;
    const int nn = grid->total_nodes();
    const double dt = state.time.dt();
    const double alpha = state.alpha_zero_path ? 0.0 : state.params.alpha;
    const double amass = alpha / (dt * dt);
    const double aw = state.params.gamma / (state.params.gamma + dt);
    const double bw = dt / (state.params.gamma + dt);

    LinearizedTrajectory lin;
    lin.eta.assign(1, Field(grid, 0.0));
    lin.psi.assign(1, Field(grid, 0.0));
    lin.v.assign(1, Field(grid, 0.0));

    std::vector<double> rhs1(nn), rhs2(nn), x, y, fpp(nn);
    for (int n = 1; n <= nt; ++n) {
        Field v_new(grid);
        for (int k = 0; k < nn; ++k)
            v_new.values[k] = aw * lin.v[n - 1].values[k] + bw * h.at_step(n).values[k];

        const Field& eta_m = lin.eta[n - 1];
        const Field& eta_mm = (n >= 2) ? lin.eta[n - 2] : lin.eta[0]; // levels -1 and 0 vanish
        const Field& psi_m = lin.psi[n - 1];
        for (int k = 0; k < nn; ++k) {
            rhs1[k] = amass * (2.0 * eta_m.values[k] - eta_mm.values[k]) + psi_m.values[k] / dt;
            rhs2[k] = state.params.tau / dt * psi_m.values[k] + v_new.values[k];
            fpp[k] = state.potential.d2f(state.phi[n].values[k]);
        }
        CoupledStepSolver solver(grid, alpha, dt, state.params.tau, fpp, /*adjoint=*/false);
        solver.solve(rhs1, rhs2, x, y);

        Field eta_new(grid), psi_new(grid);
        eta_new.values.assign(x.begin(), x.end());
        psi_new.values.assign(y.begin(), y.end());
        lin.eta.push_back(std::move(eta_new));
        lin.psi.push_back(std::move(psi_new));
        lin.v.push_back(std::move(v_new));
    }
    return lin;
}

/// Transpose of solve_linearized with respect to the space-time pairings
///   psi-side:  sum_n theta_n <psi^n, seed^n>     (trapezoidal time weights)
///   h-side:    sum_n dt <out^n, h^n>,
/// realized as a backward sweep over the transposed step Jacobians. The
/// returned r sequence is the h-side representer of the seeded functional.
inline AdjointTrajectory adjoint_from_seeds(const StateTrajectory& state,
                                            const std::vector<Field>& seeds) {
    const GridPtr grid = state.grid;
    const int nt = state.time.nt;
    const int nn = grid->total_nodes();
    if (static_cast<int>(seeds.size()) != nt)
        throw Error("adjoint_from_seeds: one seed per step required");
    const double dt = state.time.dt();
    const double alpha = state.alpha_zero_path ? 0.0 : state.params.alpha;
    const double amass = alpha / (dt * dt);
    const double aw = state.params.gamma / (state.params.gamma + dt);
    const double bw = dt / (state.params.gamma + dt);

    AdjointTrajectory adj;
    adj.grid = grid;
    adj.nt = nt;
    adj.p.assign(nt, Field(grid, 0.0));
    adj.q.assign(nt, Field(grid, 0.0));
    adj.r.assign(nt, Field(grid, 0.0));

    std::vector<double> rhs1(nn), rhs2(nn), x, y, fpp(nn);
    for (int n = nt; n >= 1; --n) {
        const Field* p1 = (n + 1 <= nt) ? &adj.p[n] : nullptr;     // p^{n+1}
        const Field* p2 = (n + 2 <= nt) ? &adj.p[n + 1] : nullptr; // p^{n+2}
        const Field* q1 = (n + 1 <= nt) ? &adj.q[n] : nullptr;
        const double theta = time_weight(state.time, n);
        for (int k = 0; k < nn; ++k) {
            double a = 0.0;
            if (p1) a += 2.0 * p1->values[k];
            if (p2) a -= p2->values[k];
            rhs1[k] = amass * a;
            double b = (theta / dt) * seeds[n - 1].values[k];
            if (p1) b += p1->values[k] / dt;
            if (q1) b += state.params.tau / dt * q1->values[k];
            rhs2[k] = b;
            fpp[k] = state.potential.d2f(state.phi[n].values[k]);
        }
        CoupledStepSolver solver(grid, alpha, dt, state.params.tau, fpp, /*adjoint=*/true);
        solver.solve(rhs1, rhs2, x, y);
        adj.p[n - 1].values.assign(x.begin(), x.end());
        adj.q[n - 1].values.assign(y.begin(), y.end());
        for (int k = 0; k < nn; ++k) {
            const double r_next = (n + 1 <= nt) ? adj.r[n].values[k] : 0.0;
            adj.r[n - 1].values[k] = bw * adj.q[n - 1].values[k] + aw * r_next;
        }
    }
    return adj;
}

/// Seeds realizing the derivative of the smooth tracking cost: the running
/// b1 term at every level plus the terminal b2 term folded into the last
/// trapezoidal weight.
inline std::vector<Field> cost_seeds(const StateTrajectory& state, const CostData& cost) {
    const int nt = state.time.nt;
    std::vector<Field> seeds;
    seeds.reserve(nt);
    for (int n = 1; n <= nt; ++n) {
        Field s = state.phi[n] - cost.phi_Q[n];
        s *= cost.b1;
        if (n == nt) {
            Field t = state.phi[nt] - cost.phi_Omega;
            axpy(cost.b2 / time_weight(state.time, nt), t, s);
        }
        seeds.push_back(std::move(s));
    }
    return seeds;
}

/// Backward adjoint solve for the smooth cost; grad_smooth = b3 u + r is the
/// reduced gradient of the smooth part with respect to the L2(Q) product.
inline AdjointTrajectory solve_adjoint(const StateTrajectory& state, const CostData& cost) {
    cost.validate(state.grid, state.time.nt);
    AdjointTrajectory adj = adjoint_from_seeds(state, cost_seeds(state, cost));
    adj.grad_smooth = ControlTrajectory(state.grid, state.time.nt);
    for (int n = 1; n <= state.time.nt; ++n) {
        Field g = adj.r_at(n);
        axpy(cost.b3, state.control.at_step(n), g);
        adj.grad_smooth.at_step(n) = std::move(g);
    }
    return adj;
}

/// Chain-rule directional derivative of the smooth cost from a linearized
/// solve; the independent counterpart of <grad_smooth, h>_Q in duality tests.
inline double cost_directional(const StateTrajectory& state, const CostData& cost,
                               const ControlTrajectory& h, const LinearizedTrajectory& lin) {
    const int nt = state.time.nt;
    const double dt = state.time.dt();
    double s = 0.0;
    for (int n = 0; n <= nt; ++n) {
        Field d = state.phi[n] - cost.phi_Q[n];
        s += cost.b1 * time_weight(state.time, n) * inner_product(d, lin.psi[n]);
    }
    Field dT = state.phi[nt] - cost.phi_Omega;
    s += cost.b2 * inner_product(dT, lin.psi[nt]);
    for (int n = 1; n <= nt; ++n)
        s += cost.b3 * dt * inner_product(state.control.at_step(n), h.at_step(n));
    return s;
}

/// <grad_smooth, h> in the step-wise L2(Q) product.
inline double gradient_pairing(const AdjointTrajectory& adj, const ControlTrajectory& h,
                               double dt) {
    return control_inner(adj.grad_smooth, h, dt);
}

struct ConsistencyLevel {
    int nx = 0, nt = 0;
    double res_p = 0.0, res_q = 0.0, res_r = 0.0, res_total = 0.0;
};

struct ConsistencyStudy {
    std::vector<ConsistencyLevel> rows;
    /// Residual decrease factor between consecutive levels (coarse/fine).
    std::vector<double> ratios() const {
        std::vector<double> out;
        for (std::size_t i = 1; i < rows.size(); ++i)
            out.push_back(rows[i - 1].res_total / rows[i].res_total);
        return out;
    }
};

/// Evaluates the continuum adjoint equations on the discrete adjoint with
/// centered time differences at interior levels; under joint (h, dt)
/// refinement the residuals shrink at first order, which ties the transposed
/// discrete sweep back to the adjoint PDE system.
inline ConsistencyStudy adjoint_consistency_study(
    const std::function<std::pair<StateSpec, CostData>(int nx, int nt)>& make_problem,
    const std::function<ControlTrajectory(const StateSpec&)>& make_control,
    const std::vector<std::pair<int, int>>& levels) {
    ConsistencyStudy study;
    for (auto [nx, nt] : levels) {
        auto [spec, cost] = make_problem(nx, nt);
        ControlTrajectory u = make_control(spec);
        StateTrajectory state = solve_state(spec, u);
        AdjointTrajectory adj = solve_adjoint(state, cost);

        const double dt = spec.time.dt();
        const double alpha = state.alpha_zero_path ? 0.0 : spec.params.alpha;
        const Grid& g = *spec.grid;
        const int nn = g.total_nodes();
        double sp = 0.0, sq = 0.0, sr = 0.0;
        for (int n = 2; n <= nt - 1; ++n) {
            std::vector<double> rp(nn, 0.0), rq(nn, 0.0), rr(nn, 0.0);
            const Field& pm = adj.p_at(n - 1);
            const Field& pc = adj.p_at(n);
            const Field& pp = adj.p_at(n + 1);
            const Field& qm = adj.q_at(n - 1);
            const Field& qc = adj.q_at(n);
            const Field& qp = adj.q_at(n + 1);
            for (int k = 0; k < nn; ++k) {
                rp[k] = alpha * (pp.values[k] - 2.0 * pc.values[k] + pm.values[k]) / (dt * dt) -
                        qc.values[k];
                const double pq_p = pp.values[k] + spec.params.tau * qp.values[k];
                const double pq_m = pm.values[k] + spec.params.tau * qm.values[k];
                rq[k] = -(pq_p - pq_m) / (2.0 * dt) +
                        spec.potential.d2f(state.phi[n].values[k]) * qc.values[k] -
                        cost.b1 * (state.phi[n].values[k] - cost.phi_Q[n].values[k]);
                rr[k] = -spec.params.gamma *
                            (adj.r_at(n + 1).values[k] - adj.r_at(n - 1).values[k]) / (2.0 * dt) +
                        adj.r_at(n).values[k] - qc.values[k];
            }
            g.add_laplacian(pc.values, rp, -1.0);
            g.add_laplacian(qc.values, rq, -1.0);
            double np2 = 0.0, nq2 = 0.0, nr2 = 0.0;
            for (int k = 0; k < nn; ++k) {
                np2 += g.weight(k) * rp[k] * rp[k];
                nq2 += g.weight(k) * rq[k] * rq[k];
                nr2 += g.weight(k) * rr[k] * rr[k];
            }
            sp += dt * np2;
            sq += dt * nq2;
            sr += dt * nr2;
        }
        ConsistencyLevel row;
        row.nx = nx;
        row.nt = nt;
        row.res_p = std::sqrt(sp);
        row.res_q = std::sqrt(sq);
        row.res_r = std::sqrt(sr);
        row.res_total = std::sqrt(sp + sq + sr);
        study.rows.push_back(row);
    }
    return study;
}

} // namespace chrelax
