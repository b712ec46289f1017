#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "chrelax/control.hpp"
#include "chrelax/rng.hpp"

using namespace chrelax;

namespace {

// Tracking problem whose target is generated by a known reference control.
ProblemSpec tracking_problem(int nx = 33, int nt = 48, double b3 = 1e-5, double kappa = 0.0) {
    ProblemSpec ps;
    ps.state.grid = Grid::interval(1.0, nx);
    ps.state.time = TimeGrid{0.5, nt};
    ps.state.params = StateParams{0.1, 1.0, 0.2};
    ps.state.potential = PotentialSpec::regular();
    ps.state.init.phi0 = make_field(ps.state.grid, [](double x, double) {
        return 0.1 + 0.2 * std::cos(M_PI * x);
    });
    ps.state.init.mu0 = Field(ps.state.grid, 0.0);
    ps.state.init.nu0 = Field(ps.state.grid, 0.0);
    ps.state.init.w0 = Field(ps.state.grid, 0.0);
    ControlTrajectory uref = ControlTrajectory::from_function(
        ps.state.grid, ps.state.time, [](double x, double, double t) {
            return 1.5 * std::cos(M_PI * x) * std::sin(M_PI * t / 0.5);
        });
    StateTrajectory traj = solve_state(ps.state, uref);
    ps.cost.b1 = 1.0;
    ps.cost.b2 = 0.0;
    ps.cost.b3 = b3;
    ps.cost.kappa = kappa;
    ps.cost.phi_Q = traj.phi;
    ps.cost.phi_Omega = traj.phi[nt];
    ps.bounds = Bounds::box(ps.state.grid, -5.0, 5.0);
    ps.opt.max_iters = 3000;
    ps.opt.tol_stat = 1e-6;
    return ps;
}

} // namespace

TEST_CASE("cost_eval: perfect tracking with zero control costs nothing") {
    ProblemSpec ps = tracking_problem();
    // overwrite targets with the zero-control trajectory itself
    ControlTrajectory zero(ps.state.grid, ps.state.time.nt);
    StateTrajectory traj = solve_state(ps.state, zero);
    ps.cost.phi_Q = traj.phi;
    ps.cost.phi_Omega = traj.phi[ps.state.time.nt];
    ps.cost.b2 = 0.7;
    ps.cost.kappa = 0.4;
    CostBreakdown cb = cost_eval(ps, zero, traj);
    REQUIRE(cb.total == 0.0);
}

TEST_CASE("cost_eval: closed form for constant controls") {
    ProblemSpec ps = tracking_problem();
    ps.cost.b1 = 0.0;
    ps.cost.b2 = 0.0;
    ps.cost.b3 = 2.0;
    ps.cost.kappa = 0.3;
    const double c = -0.75;
    ControlTrajectory u(ps.state.grid, ps.state.time.nt, c);
    StateTrajectory traj = solve_state(ps.state, u);
    CostBreakdown cb = cost_eval(ps, u, traj);
    const double volQ = 1.0 * 0.5; // |Omega| * T
    REQUIRE(cb.smooth == Catch::Approx(0.5 * 2.0 * c * c * volQ).epsilon(1e-13));
    REQUIRE(cb.g_term == Catch::Approx(0.3 * std::abs(c) * volQ).epsilon(1e-13));
    REQUIRE(cb.total == Catch::Approx(cb.smooth + cb.g_term).epsilon(1e-15));

    ps.cost.kappa = 0.0;
    CostBreakdown cb0 = cost_eval(ps, u, traj);
    REQUIRE(cb0.g_term == 0.0);
    REQUIRE(cb0.total == cb0.smooth);

    ControlTrajectory other(ps.state.grid, ps.state.time.nt, 0.1);
    REQUIRE_THROWS_AS(cost_eval(ps, other, traj), Error);
}

TEST_CASE("project_box: identity inside, clamp outside, nonexpansive") {
    auto g = Grid::interval(1.0, 9);
    Field z(g, 0.3);
    Field p = project_box(z, -1.0, 1.0);
    for (int k = 0; k < p.size(); ++k) REQUIRE(p.values[k] == 0.3);
    Field big(g, 5.0);
    p = project_box(big, -1.0, 1.0);
    for (int k = 0; k < p.size(); ++k) REQUIRE(p.values[k] == 1.0);

    Lcg64 rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        Field a(g), b(g);
        for (double& v : a.values) v = 3.0 * rng.symmetric();
        for (double& v : b.values) v = 3.0 * rng.symmetric();
        Field pa = project_box(a, -1.0, 1.0);
        Field pb = project_box(b, -1.0, 1.0);
        REQUIRE(norm_linf(pa - pb) <= norm_linf(a - b) + 1e-15);
    }
    Field lo(g, 1.0), hi(g, -1.0);
    REQUIRE_THROWS_AS(project_box(z, lo, hi), Error);
}

TEST_CASE("prox_l1: soft threshold values") {
    auto g = Grid::interval(1.0, 5);
    Field z(g, 0.5);
    REQUIRE(prox_l1(z, 0.2).values[0] == Catch::Approx(0.3).margin(1e-15));
    Field zn(g, -0.1);
    REQUIRE(prox_l1(zn, 0.2).values[0] == 0.0);
    Field z2(g, -0.7);
    REQUIRE(prox_l1(z2, 0.0).values[0] == -0.7);
    REQUIRE_THROWS_AS(prox_l1(z, -1.0), Error);
}

TEST_CASE("prox with box: exact nodewise minimizer for shifted boxes") {
    // brute-force oracle over a fine grid of candidate points
    auto oracle = [](double z, double theta, double lo, double hi) {
        double best = lo, bestval = 1e300;
        const int m = 20000;
        for (int i = 0; i <= m; ++i) {
            const double v = lo + (hi - lo) * i / m;
            const double val = 0.5 * (v - z) * (v - z) + theta * std::abs(v);
            if (val < bestval) { bestval = val; best = v; }
        }
        return best;
    };
    Lcg64 rng(11);
    for (int rep = 0; rep < 200; ++rep) {
        const double z = 4.0 * rng.symmetric();
        const double theta = 1.5 * rng.uniform();
        double lo = 3.0 * rng.symmetric();
        double hi = lo + 2.5 * rng.uniform();
        const double got = prox_box_l1_node(z, theta, lo, hi);
        const double want = oracle(z, theta, lo, hi);
        REQUIRE(got == Catch::Approx(want).margin(2e-4));
    }
}

TEST_CASE("compute_lambda: subgradient of the L1 term") {
    auto g = Grid::interval(1.0, 5);
    const int nt = 4;
    ControlTrajectory u(g, nt, 1.0);
    AdjointTrajectory adj;
    adj.grid = g;
    adj.nt = nt;
    adj.p.assign(nt, Field(g, 0.0));
    adj.q.assign(nt, Field(g, 0.0));
    adj.r.assign(nt, Field(g, 0.5));

    auto lam = compute_lambda(u, adj, 1.0);
    for (const Field& f : lam)
        for (double v : f.values) REQUIRE(v == 1.0);

    ControlTrajectory uz(g, nt, 0.0);
    lam = compute_lambda(uz, adj, 1.0); // |r| <= kappa: lambda = -r/kappa
    for (const Field& f : lam)
        for (double v : f.values) REQUIRE(v == Catch::Approx(-0.5).margin(1e-15));

    adj.r.assign(nt, Field(g, 2.0));
    lam = compute_lambda(uz, adj, 1.0); // r = 2 kappa: clamped
    for (const Field& f : lam)
        for (double v : f.values) REQUIRE(v == -1.0);

    lam = compute_lambda(u, adj, 0.0);
    for (const Field& f : lam)
        for (double v : f.values) REQUIRE(v == 0.0);

    // subgradient property lambda * u = |u| and |lambda| <= 1 on random data
    Lcg64 rng(17);
    ControlTrajectory ur(g, nt);
    for (int n = 1; n <= nt; ++n)
        for (double& v : ur.at_step(n).values) {
            v = rng.symmetric();
            if (std::abs(v) < 0.3) v = 0.0;
        }
    for (int n = 1; n <= nt; ++n)
        for (double& v : adj.r[n - 1].values) v = 2.0 * rng.symmetric();
    lam = compute_lambda(ur, adj, 0.7);
    for (int n = 1; n <= nt; ++n)
        for (int k = 0; k < 5; ++k) {
            const double l = lam[n - 1].values[k];
            const double uv = ur.at_step(n).values[k];
            REQUIRE(std::abs(l) <= 1.0);
            REQUIRE(l * uv == Catch::Approx(std::abs(uv)).margin(1e-15));
        }
}

TEST_CASE("pure control-cost problem returns the zero control immediately") {
    ProblemSpec ps = tracking_problem();
    ps.cost.b1 = 0.0;
    ps.cost.b2 = 0.0;
    ps.cost.kappa = 0.0;
    ps.cost.b3 = 1.0;
    OptimizationResult res = optimize(ps);
    REQUIRE(res.converged);
    REQUIRE(res.iterations == 0);
    for (int n = 1; n <= res.u.nt; ++n) REQUIRE(norm_linf(res.u.at_step(n)) == 0.0);
    REQUIRE(res.log.back().cost_total == 0.0);
}

TEST_CASE("reachable tracking problem: large cost drop and stationarity") {
    ProblemSpec ps = tracking_problem();
    OptimizationResult res = optimize(ps);
    REQUIRE(res.converged);
    REQUIRE(res.stationarity <= res.tol_stat_abs);
    const double j0 = res.log.front().cost_total;
    const double jf = res.log.back().cost_total;
    REQUIRE(jf <= 1e-2 * j0);
    // monotone nonincreasing log, admissible iterates
    for (std::size_t i = 1; i < res.log.size(); ++i)
        REQUIRE(res.log[i].cost_total <= res.log[i - 1].cost_total + 1e-12 * (1.0 + j0));
    for (int n = 1; n <= res.u.nt; ++n)
        for (double v : res.u.at_step(n).values) {
            REQUIRE(v >= -5.0);
            REQUIRE(v <= 5.0);
        }
}

TEST_CASE("kappa above the measured threshold forces the zero control") {
    ProblemSpec ps = tracking_problem(33, 48, 1e-2);
    const double kappa_hat = measure_kappa_hat(ps);
    REQUIRE(kappa_hat > 0.0);
    ps.cost.kappa = 1.1 * kappa_hat;
    OptimizationResult res = optimize(ps);
    REQUIRE(res.converged);
    SparsityReport rep = sparsity_report(res, ps.cost.kappa, ps.effective_delta_sparse());
    REQUIRE(rep.applicable);
    REQUIRE(rep.zero_fraction == 1.0);
    REQUIRE(rep.iff_violations == 0);
}

TEST_CASE("intermediate kappa yields partial sparsity with a consistent iff set") {
    ProblemSpec ps = tracking_problem(33, 48, 1e-2);
    const double kappa_hat = measure_kappa_hat(ps);
    ps.cost.kappa = 0.3 * kappa_hat;
    ps.opt.max_iters = 5000;
    OptimizationResult res = optimize(ps);
    REQUIRE(res.converged);
    SparsityReport rep = sparsity_report(res, ps.cost.kappa, ps.effective_delta_sparse());
    REQUIRE(rep.applicable);
    REQUIRE(rep.zero_fraction > 0.0);
    REQUIRE(rep.zero_fraction < 1.0);
    REQUIRE(rep.iff_violations == 0);

    // kappa = 0 report flags the iff-check as not applicable
    SparsityReport na = sparsity_report(res, 0.0, ps.effective_delta_sparse());
    REQUIRE(!na.applicable);
}

TEST_CASE("bounds away from zero use the shifted prox and stay admissible") {
    ProblemSpec ps = tracking_problem(17, 16, 1e-2, 0.05);
    ps.bounds = Bounds::box(ps.state.grid, 0.5, 2.0);
    ps.opt.max_iters = 400;
    OptimizationResult res = optimize(ps);
    for (int n = 1; n <= res.u.nt; ++n)
        for (double v : res.u.at_step(n).values) {
            REQUIRE(v >= 0.5);
            REQUIRE(v <= 2.0);
        }
    for (std::size_t i = 1; i < res.log.size(); ++i)
        REQUIRE(res.log[i].cost_total <= res.log[i - 1].cost_total + 1e-12);
}

TEST_CASE("optimizer works on the logarithmic potential") {
    ProblemSpec ps = tracking_problem(17, 16, 1e-2, 0.02);
    ps.state.potential = PotentialSpec::logarithmic(2.0);
    // rebuild targets under the new potential so the problem is consistent
    ControlTrajectory uref = ControlTrajectory::from_function(
        ps.state.grid, ps.state.time, [](double x, double, double t) {
            return std::cos(M_PI * x) * std::sin(M_PI * t / 0.5);
        });
    StateTrajectory traj = solve_state(ps.state, uref);
    ps.cost.phi_Q = traj.phi;
    ps.cost.phi_Omega = traj.phi[16];
    ps.opt.max_iters = 300;
    OptimizationResult res = optimize(ps);
    REQUIRE(res.log.back().cost_total <= res.log.front().cost_total);
    SeparationReport sep = separation_report(res.state);
    REQUIRE(sep.margin > 0.0);
    for (std::size_t i = 1; i < res.log.size(); ++i)
        REQUIRE(res.log[i].cost_total <= res.log[i - 1].cost_total + 1e-12);
}

TEST_CASE("stationarity residual is positive away from stationary points") {
    ProblemSpec ps = tracking_problem(17, 16, 1e-2);
    ControlTrajectory u(ps.state.grid, ps.state.time.nt, 0.7);
    StateTrajectory st = solve_state(ps.state, u);
    AdjointTrajectory adj = solve_adjoint(st, ps.cost);
    auto lam = compute_lambda(u, adj, ps.cost.kappa);
    REQUIRE(stationarity_residual(u, adj, lam, ps) > 1e-6);
}

TEST_CASE("problem validation rejects inconsistent bounds and weights") {
    ProblemSpec ps = tracking_problem(17, 16);
    ps.cost.b3 = 0.0;
    REQUIRE_THROWS_AS(optimize(ps), Error);
    ps = tracking_problem(17, 16);
    ps.bounds.lower = Field(ps.state.grid, 2.0);
    ps.bounds.upper = Field(ps.state.grid, -2.0);
    REQUIRE_THROWS_AS(optimize(ps), Error);
}
