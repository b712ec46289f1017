#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "chrelax/asymptotics.hpp"

using namespace chrelax;

namespace {

ProblemSpec base_problem(bool stationary, PotentialSpec pot = PotentialSpec::regular(),
                         int nx = 33, int nt = 32) {
    ProblemSpec ps;
    ps.state.grid = Grid::interval(1.0, nx);
    ps.state.time = TimeGrid{0.5, nt};
    ps.state.params = StateParams{0.1, 1.0, 1.0};
    ps.state.potential = pot;
    const double m = 0.1;
    if (stationary) {
        ps.state.init.phi0 = Field(ps.state.grid, m);
        ps.state.init.mu0 = Field(ps.state.grid, pot.df(m));
    } else {
        ps.state.init.phi0 = make_field(ps.state.grid, [&](double x, double) {
            return m + 0.2 * std::cos(M_PI * x);
        });
        ps.state.init.mu0 = Field(ps.state.grid, 0.0);
    }
    ps.state.init.nu0 = Field(ps.state.grid, 0.0);
    ps.state.init.w0 = Field(ps.state.grid, 0.0);
    Field target = make_field(ps.state.grid, [](double x, double) {
        return 0.2 * std::cos(M_PI * x);
    });
    ps.cost.b1 = 1.0;
    ps.cost.b2 = 0.5;
    ps.cost.b3 = 1e-2;
    ps.cost.phi_Q.assign(nt + 1, target);
    ps.cost.phi_Omega = target;
    ps.bounds = Bounds::box(ps.state.grid, -2.0, 2.0);
    ps.opt.max_iters = 400;
    ps.opt.tol_stat = 1e-6;
    return ps;
}

ControlTrajectory smooth_control(const StateSpec& spec, double amp) {
    return ControlTrajectory::from_function(spec.grid, spec.time,
                                            [amp](double x, double, double t) {
                                                return amp * std::cos(M_PI * x) *
                                                       std::sin(2.0 * M_PI * t);
                                            });
}

} // namespace

TEST_CASE("sweep gates reject bad alpha sequences and (A9)-violating runs") {
    SweepPlan plan;
    plan.base = base_problem(false);
    plan.control = smooth_control(plan.base.state, 0.5);

    plan.alphas = {};
    REQUIRE_THROWS_AS(run_state_sweep(plan), RejectedConfiguration);
    plan.alphas = {0.1, 0.5};
    REQUIRE_THROWS_AS(run_state_sweep(plan), RejectedConfiguration);
    plan.alphas = {1.5, 0.1};
    REQUIRE_THROWS_AS(run_state_sweep(plan), RejectedConfiguration);

    SweepPlan logplan;
    logplan.base = base_problem(false, PotentialSpec::logarithmic(2.0));
    logplan.mode = SweepMode::Adjoint;
    logplan.control = smooth_control(logplan.base.state, 0.3);
    REQUIRE_THROWS_AS(run_adjoint_sweep(logplan), RejectedConfiguration);
}

TEST_CASE("stationary data: identical constant solution at every alpha") {
    SweepPlan plan;
    plan.base = base_problem(true);
    plan.control = ControlTrajectory::zero(plan.base.state.grid, plan.base.state.time.nt);
    SweepResult res = run_state_sweep(plan);
    REQUIRE(res.rows.size() == 4);
    for (const SweepRow& r : res.rows) {
        REQUIRE(r.err_phi == 0.0);
        REQUIRE(r.err_mu == 0.0);
        REQUIRE(r.err_w == 0.0);
    }
}

TEST_CASE("state sweep: errors and scaled mu-velocity decrease along alpha") {
    SweepPlan plan;
    plan.base = base_problem(false);
    plan.control = smooth_control(plan.base.state, 0.5);
    SweepResult res = run_state_sweep(plan);
    for (std::size_t i = 1; i < res.rows.size(); ++i) {
        REQUIRE(res.rows[i].err_phi < res.rows[i - 1].err_phi);
        REQUIRE(res.rows[i].alpha_mu_velocity < res.rows[i - 1].alpha_mu_velocity);
        REQUIRE(res.rows[i].ratio_prev < 1.0);
    }
    REQUIRE(res.rows.front().err_phi > 0.0);
}

TEST_CASE("adjoint sweep: zero cost weights give exactly zero errors") {
    SweepPlan plan;
    plan.mode = SweepMode::Adjoint;
    plan.base = base_problem(false);
    plan.base.cost.b1 = 0.0;
    plan.base.cost.b2 = 0.0;
    plan.control = smooth_control(plan.base.state, 0.5);
    SweepResult res = run_adjoint_sweep(plan);
    for (const SweepRow& r : res.rows) {
        REQUIRE(r.err_p == 0.0);
        REQUIRE(r.err_q == 0.0);
        REQUIRE(r.err_r == 0.0);
        REQUIRE(r.err_pq == 0.0);
    }
}

TEST_CASE("adjoint sweep: (p + tau q) error decreases along alpha") {
    SweepPlan plan;
    plan.mode = SweepMode::Adjoint;
    plan.base = base_problem(false);
    plan.control = smooth_control(plan.base.state, 0.5);
    SweepResult res = run_adjoint_sweep(plan);
    for (std::size_t i = 1; i < res.rows.size(); ++i)
        REQUIRE(res.rows[i].err_pq < res.rows[i - 1].err_pq);
    REQUIRE(res.rows.front().err_pq > 0.0);
}

TEST_CASE("optimal-control sweep: trivial problem gives zero gaps") {
    SweepPlan plan;
    plan.mode = SweepMode::OptimalControl;
    plan.base = base_problem(false);
    plan.base.cost.b1 = 0.0;
    plan.base.cost.b2 = 0.0;
    plan.base.cost.b3 = 1.0;
    plan.alphas = {1.0, 0.1};
    SweepResult res = run_optimal_control_sweep(plan);
    for (const SweepRow& r : res.rows) {
        REQUIRE(r.err_u == 0.0);
        REQUIRE(r.cost_gap == 0.0);
        REQUIRE(!r.suspected_distinct_minima);
    }
}

TEST_CASE("optimal-control sweep: warm-started gaps are finite and reported") {
    SweepPlan plan;
    plan.mode = SweepMode::OptimalControl;
    plan.base = base_problem(false);
    plan.alphas = {1.0, 0.1, 0.01};
    SweepResult res = run_optimal_control_sweep(plan);
    REQUIRE(res.rows.size() == 3);
    for (const SweepRow& r : res.rows) {
        REQUIRE(std::isfinite(r.err_u));
        REQUIRE(std::isfinite(r.cost_gap));
        REQUIRE(r.cost_alpha >= 0.0);
    }
}

TEST_CASE("rerunning the reference produces bit-identical norms") {
    SweepPlan plan;
    plan.base = base_problem(false);
    plan.control = smooth_control(plan.base.state, 0.5);
    SweepResult a = run_state_sweep(plan);
    SweepResult b = run_state_sweep(plan);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        REQUIRE(a.rows[i].err_phi == b.rows[i].err_phi);
        REQUIRE(a.rows[i].err_mu == b.rows[i].err_mu);
        REQUIRE(a.rows[i].alpha_mu_velocity == b.rows[i].alpha_mu_velocity);
    }
}

TEST_CASE("sweep error norms agree with the grid norms on known differences") {
    ProblemSpec ps = base_problem(true);
    const int nt = ps.state.time.nt;
    std::vector<Field> a(nt + 1, Field(ps.state.grid, 2.0));
    std::vector<Field> b(nt + 1, Field(ps.state.grid, -1.0));
    // constant difference 3: L2(Q) norm = 3 sqrt(|Omega| T), sup-in-time L2 = 3 sqrt(|Omega|)
    REQUIRE(levels_l2Q(a, b, ps.state.time) ==
            Catch::Approx(3.0 * std::sqrt(0.5)).epsilon(1e-13));
    REQUIRE(levels_linf_l2(a, b) == Catch::Approx(3.0).epsilon(1e-13));
}
