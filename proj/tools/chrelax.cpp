// Command-line driver: forward runs, derivative checks, verification studies,
// optimization and vanishing-relaxation sweeps, all emitting deterministic
// CSV files (17 significant digits, seeded generators).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chrelax/chrelax.hpp"

namespace fs = std::filesystem;
using namespace chrelax;

namespace {

struct RunContext {
    RunConfig cfg;
    fs::path out;
    std::string subcommand;
    std::vector<std::string> notes;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void note(const std::string& line) { notes.push_back(line); }

    void write_log() const {
        std::ofstream log(out / "run.log");
        log << "chrelax " << version << "\n";
        log << "subcommand = " << subcommand << "\n";
        for (const auto& [k, v] : cfg.echo_lines()) log << k << " = " << v << "\n";
        for (const std::string& n : notes) log << n << "\n";
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        log << "elapsed_seconds = " << g17(elapsed) << "\n";
    }
};

void write_scalars(const RunContext& ctx, const StateTrajectory& traj) {
    CsvFile csv((ctx.out / "scalars.csv").string());
    csv.row({"t", "mean_mu", "mean_phi", "mean_w", "mean_identity_residual", "phi_min",
             "phi_max"});
    const std::vector<double> resid = mean_identity_residuals(traj);
    for (int n = 0; n <= traj.time.nt; ++n) {
        double pmin = traj.phi[n].values[0], pmax = pmin;
        for (double v : traj.phi[n].values) {
            pmin = std::min(pmin, v);
            pmax = std::max(pmax, v);
        }
        csv.row({g17(traj.time.t(n)), g17(mean(traj.mu[n])), g17(mean(traj.phi[n])),
                 g17(mean(traj.w[n])), g17(resid[n]), g17(pmin), g17(pmax)});
    }
}

void write_fields(const RunContext& ctx, const StateTrajectory& traj) {
    const int nt = traj.time.nt;
    std::vector<int> levels;
    for (int n = 0; n <= nt; n += ctx.cfg.save_stride) levels.push_back(n);
    if (levels.empty() || levels.back() != nt) levels.push_back(nt);
    const Grid& g = *traj.grid;
    for (int n : levels) {
        CsvFile csv((ctx.out / ("fields_" + std::to_string(n) + ".csv")).string());
        if (g.dim() == 1) csv.row({"x", "mu", "phi", "w"});
        else csv.row({"x", "y", "mu", "phi", "w"});
        for (int k = 0; k < g.total_nodes(); ++k) {
            std::vector<std::string> cells{g17(g.x(k))};
            if (g.dim() == 2) cells.push_back(g17(g.y(k)));
            cells.push_back(g17(traj.mu[n].values[k]));
            cells.push_back(g17(traj.phi[n].values[k]));
            cells.push_back(g17(traj.w[n].values[k]));
            csv.row(cells);
        }
    }
}

void write_control_csv(const RunContext& ctx, const std::string& name,
                       const ControlTrajectory& u, const TimeGrid& tg) {
    CsvFile csv((ctx.out / name).string());
    const Grid& g = *u.grid;
    if (g.dim() == 1) csv.row({"t", "x", "u"});
    else csv.row({"t", "x", "y", "u"});
    for (int n = 1; n <= tg.nt; ++n)
        for (int k = 0; k < g.total_nodes(); ++k) {
            std::vector<std::string> cells{g17(tg.t(n)), g17(g.x(k))};
            if (g.dim() == 2) cells.push_back(g17(g.y(k)));
            cells.push_back(g17(u.at_step(n).values[k]));
            csv.row(cells);
        }
}

ControlTrajectory random_direction(const StateSpec& spec, Lcg64& rng) {
    ControlTrajectory h(spec.grid, spec.time.nt);
    for (int n = 1; n <= spec.time.nt; ++n)
        for (double& v : h.at_step(n).values) v = rng.symmetric();
    return h;
}

int run_solve_state(RunContext& ctx) {
    StateSpec spec = make_state_spec(ctx.cfg);
    ControlTrajectory u = make_driver_control(ctx.cfg, spec, ctx.cfg.seed);
    StateTrajectory traj = solve_state(spec, u);
    if (!traj.warning.empty()) ctx.note("warning: " + traj.warning);
    write_scalars(ctx, traj);
    write_fields(ctx, traj);
    const SeparationReport sep = separation_report(traj);
    ctx.note("phi_min = " + g17(sep.phi_min));
    ctx.note("phi_max = " + g17(sep.phi_max));
    ctx.note("separation_margin = " + g17(sep.margin));
    return 0;
}

int run_check_gradient(RunContext& ctx) {
    ProblemSpec ps = make_problem(ctx.cfg);
    ControlTrajectory u(ps.state.grid, ps.state.time.nt);
    for (int n = 1; n <= u.nt; ++n)
        u.at_step(n) = project_box(u.at_step(n), ps.bounds.lower, ps.bounds.upper);
    Lcg64 rng(ctx.cfg.seed);
    ControlTrajectory h = random_direction(ps.state, rng);

    StateTrajectory state = solve_state(ps.state, u);
    AdjointTrajectory adj = solve_adjoint(state, ps.cost);
    const double dt = ps.state.time.dt();
    const double gval = gradient_pairing(adj, h, dt);

    CsvFile csv((ctx.out / "gradcheck.csv").string());
    csv.row({"epsilon", "fd_value", "adjoint_value", "rel_error"});
    double best = 1e300;
    for (double eps : ctx.cfg.epsilons) {
        ControlTrajectory up = u, um = u;
        for (int n = 1; n <= u.nt; ++n) {
            axpy(eps, h.at_step(n), up.at_step(n));
            axpy(-eps, h.at_step(n), um.at_step(n));
        }
        StateTrajectory sp = solve_state(ps.state, up);
        StateTrajectory sm = solve_state(ps.state, um);
        const double jp = cost_eval(ps, up, sp).smooth;
        const double jm = cost_eval(ps, um, sm).smooth;
        const double fd = (jp - jm) / (2.0 * eps);
        const double rel = std::abs(fd - gval) / std::max(std::abs(gval), 1e-300);
        best = std::min(best, rel);
        csv.row({g17(eps), g17(fd), g17(gval), g17(rel)});
    }
    ctx.note("best_rel_error = " + g17(best));
    return 0;
}

int run_check_duality(RunContext& ctx) {
    ProblemSpec ps = make_problem(ctx.cfg);
    ControlTrajectory u(ps.state.grid, ps.state.time.nt);
    for (int n = 1; n <= u.nt; ++n)
        u.at_step(n) = project_box(u.at_step(n), ps.bounds.lower, ps.bounds.upper);
    StateTrajectory state = solve_state(ps.state, u);
    AdjointTrajectory adj = solve_adjoint(state, ps.cost);
    const double dt = ps.state.time.dt();

    Lcg64 rng(ctx.cfg.seed);
    CsvFile csv((ctx.out / "duality.csv").string());
    csv.row({"direction", "linearized_value", "adjoint_value", "rel_error"});
    double worst = 0.0;
    for (int j = 0; j < ctx.cfg.duality_directions; ++j) {
        ControlTrajectory h = random_direction(ps.state, rng);
        LinearizedTrajectory lin = solve_linearized(state, h);
        const double lhs = cost_directional(state, ps.cost, h, lin);
        const double rhs = gradient_pairing(adj, h, dt);
        const double rel = std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300);
        worst = std::max(worst, rel);
        csv.row({std::to_string(j), g17(lhs), g17(rhs), g17(rel)});
    }
    ctx.note("worst_rel_error = " + g17(worst));
    return 0;
}

int run_mms_verify(RunContext& ctx) {
    if (ctx.cfg.grid_dim != 1)
        throw ConfigError::bad_value("grid_dim", "mms-verify supports 1D runs only");
    const RunConfig& cfg = ctx.cfg;
    StateParams params{cfg.alpha, cfg.tau, cfg.gamma};
    PotentialSpec pot = (cfg.potential == "log")
                            ? PotentialSpec::logarithmic(cfg.c1, cfg.delta_dom)
                            : PotentialSpec::regular();
    NewtonOptions newton{cfg.newton_tol, cfg.newton_max_iters, cfg.newton_damping};
    MmsCase mcase;

    std::vector<std::pair<int, int>> space_levels, time_levels;
    for (int l = 0; l < cfg.mms_levels; ++l)
        space_levels.emplace_back((cfg.grid_nx - 1) * (1 << l) + 1,
                                  cfg.time_steps * (1 << (2 * l)));
    const int nx_time = (cfg.grid_nx - 1) * 16 + 1;
    const int nt_time_base = std::max(8, cfg.time_steps / 4);
    for (int l = 0; l < cfg.mms_levels; ++l)
        time_levels.emplace_back(nx_time, nt_time_base * (1 << l));

    auto space = mms_study(mcase, params, pot, newton, cfg.grid_length, cfg.time_final,
                           space_levels);
    auto time = mms_study(mcase, params, pot, newton, cfg.grid_length, cfg.time_final,
                          time_levels);

    CsvFile csv((ctx.out / "mms.csv").string());
    csv.row({"study", "level", "nx", "nt", "err_phi", "err_mu", "order"});
    for (std::size_t l = 0; l < space.size(); ++l)
        csv.row({"space", std::to_string(l), std::to_string(space[l].nx),
                 std::to_string(space[l].nt), g17(space[l].err_phi), g17(space[l].err_mu),
                 g17(space[l].order)});
    for (std::size_t l = 0; l < time.size(); ++l)
        csv.row({"time", std::to_string(l), std::to_string(time[l].nx),
                 std::to_string(time[l].nt), g17(time[l].err_phi), g17(time[l].err_mu),
                 g17(time[l].order)});
    double min_space = 1e300, min_time = 1e300;
    for (std::size_t l = 1; l < space.size(); ++l) min_space = std::min(min_space, space[l].order);
    for (std::size_t l = 1; l < time.size(); ++l) min_time = std::min(min_time, time[l].order);
    ctx.note("min_space_order = " + g17(min_space));
    ctx.note("min_time_order = " + g17(min_time));
    return 0;
}

int run_optimize(RunContext& ctx) {
    ProblemSpec ps = make_problem(ctx.cfg);
    OptimizationResult res = optimize(ps);
    CsvFile csv((ctx.out / "optlog.csv").string());
    csv.row({"iter", "cost_total", "cost_smooth", "g_term", "step", "stationarity",
             "zero_fraction"});
    for (const IterationRow& r : res.log)
        csv.row({std::to_string(r.iter), g17(r.cost_total), g17(r.cost_smooth), g17(r.g_term),
                 g17(r.step), g17(r.stationarity), g17(r.zero_fraction)});
    write_control_csv(ctx, "u_final.csv", res.u, ps.state.time);
    if (ctx.cfg.target == TargetMode::Reachable) {
        TargetBuild tb = build_targets(ctx.cfg, ps.state);
        write_control_csv(ctx, "u_ref.csv", tb.u_ref, ps.state.time);
    }
    ctx.note(std::string("converged = ") + (res.converged ? "yes" : "no"));
    ctx.note("iterations = " + std::to_string(res.iterations));
    ctx.note("stationarity = " + g17(res.stationarity));
    ctx.note("stationarity_tolerance = " + g17(res.tol_stat_abs));
    return 0;
}

int run_alpha_sweep(RunContext& ctx) {
    SweepPlan plan;
    plan.base = make_problem(ctx.cfg);
    plan.alphas = ctx.cfg.alphas;
    if (ctx.cfg.sweep_mode == "state") plan.mode = SweepMode::State;
    else if (ctx.cfg.sweep_mode == "adjoint") plan.mode = SweepMode::Adjoint;
    else plan.mode = SweepMode::OptimalControl;
    if (plan.mode != SweepMode::OptimalControl)
        plan.control = make_driver_control(ctx.cfg, plan.base.state, ctx.cfg.seed);

    SweepResult result;
    switch (plan.mode) {
        case SweepMode::State: result = run_state_sweep(plan); break;
        case SweepMode::Adjoint: result = run_adjoint_sweep(plan); break;
        case SweepMode::OptimalControl: result = run_optimal_control_sweep(plan); break;
    }

    CsvFile csv((ctx.out / "sweep.csv").string());
    csv.row({"alpha", "err_phi", "err_mu", "err_w", "err_p", "err_q", "err_r", "err_u",
             "ratio_prev"});
    for (const SweepRow& r : result.rows) {
        csv.row({g17(r.alpha), g17(r.err_phi), g17(r.err_mu), g17(r.err_w), g17(r.err_p),
                 g17(r.err_q), g17(r.err_r), g17(r.err_u), g17(r.ratio_prev)});
        ctx.note("alpha " + g17(r.alpha) + ": alpha_mu_velocity = " + g17(r.alpha_mu_velocity) +
                 ", err_pq = " + g17(r.err_pq) + ", cost_gap = " + g17(r.cost_gap) +
                 (r.suspected_distinct_minima ? ", suspected distinct stationary points" : ""));
    }
    return 0;
}

int run_sparsity_sweep(RunContext& ctx) {
    ProblemSpec base = make_problem(ctx.cfg);
    const double kappa_hat = measure_kappa_hat(base);
    ctx.note("kappa_hat = " + g17(kappa_hat));
    CsvFile csv((ctx.out / "sparsity.csv").string());
    csv.row({"kappa", "zero_fraction", "iff_violations", "cost_total", "stationarity"});
    for (double f : ctx.cfg.kappa_factors) {
        ProblemSpec ps = base;
        ps.cost.kappa = f * kappa_hat;
        OptimizationResult res = optimize(ps);
        SparsityReport rep = sparsity_report(res, ps.cost.kappa, ps.effective_delta_sparse());
        const CostBreakdown cb = cost_eval(ps, res.u, res.state);
        csv.row({g17(ps.cost.kappa), g17(rep.zero_fraction),
                 std::to_string(rep.iff_violations), g17(cb.total), g17(res.stationarity)});
        if (!rep.applicable) ctx.note("kappa = 0: iff-check not applicable");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Viscous Cahn-Hilliard control toolkit (hyperbolically relaxed "
                 "chemical potential)"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    std::string config_path, out_dir = "out";
    std::uint64_t seed_override = 0;
    bool seed_given = false;

    const std::vector<std::string> names = {"solve-state",  "check-gradient", "check-duality",
                                            "mms-verify",   "optimize",       "alpha-sweep",
                                            "sparsity-sweep"};
    for (const std::string& name : names) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "path to the key = value run configuration")
            ->required();
        sub->add_option("--out", out_dir, "output directory (created if missing)");
        sub->add_option("--seed", seed_override, "override the configured RNG seed")
            ->each([&](const std::string&) { seed_given = true; });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        RunContext ctx;
        ctx.subcommand = app.get_subcommands().front()->get_name();
        ctx.cfg = parse_config(config_path);
        if (seed_given) ctx.cfg.seed = seed_override;
        ctx.out = out_dir;
        fs::create_directories(ctx.out);

        int rc = 1;
        if (ctx.subcommand == "solve-state") rc = run_solve_state(ctx);
        else if (ctx.subcommand == "check-gradient") rc = run_check_gradient(ctx);
        else if (ctx.subcommand == "check-duality") rc = run_check_duality(ctx);
        else if (ctx.subcommand == "mms-verify") rc = run_mms_verify(ctx);
        else if (ctx.subcommand == "optimize") rc = run_optimize(ctx);
        else if (ctx.subcommand == "alpha-sweep") rc = run_alpha_sweep(ctx);
        else if (ctx.subcommand == "sparsity-sweep") rc = run_sparsity_sweep(ctx);
        ctx.write_log();
        return rc;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
