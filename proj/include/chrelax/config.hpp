#pragma once

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "chrelax/control.hpp"
#include "chrelax/errors.hpp"
#include "chrelax/rng.hpp"
#include "chrelax/state.hpp"

namespace chrelax {

enum class TargetMode { Constant, Cosine, Reachable };
enum class ControlMode { Zero, Cosine, Random };

/// Fully validated run configuration assembled from a flat key = value file.
/// Every effective value (defaults included) is echoed through echo_lines().
struct RunConfig {
    // grid / time
    int grid_dim = 1;
    double grid_length = 1.0;
    double grid_length_y = 1.0;
    int grid_nx = 0;
    int grid_ny = 0;
    double time_final = 0.0;
    int time_steps = 0;
    // state parameters
    double alpha = 0.0;
    double tau = 0.0;
    double gamma = 0.0;
    std::string potential; // "regular" | "log"
    double c1 = 2.0;
    double delta_dom = 1e-9;
    // initial data
    double phi0_mean = 0.0;
    double phi0_amplitude = 0.0;
    double mu0_value = 0.0;
    double nu0_value = 0.0;
    double w0_value = 0.0;
    // cost
    double b1 = 1.0;
    double b2 = 0.0;
    double b3 = 0.01;
    double kappa = 0.0;
    double u_min = -1.0;
    double u_max = 1.0;
    TargetMode target = TargetMode::Constant;
    double target_value = 0.0;
    double target_amplitude = 0.25;
    double uref_amplitude = 1.0;
    // solvers
    double newton_tol = 1e-11;
    int newton_max_iters = 30;
    double newton_damping = 0.95;
    int opt_max_iters = 200;
    double opt_sigma0 = 0.0;
    double opt_tol_stat = 1e-6;
    double opt_delta_sparse = 0.0;
    // drivers
    ControlMode control_mode = ControlMode::Zero;
    double control_amplitude = 1.0;
    int save_stride = 16;
    std::vector<double> epsilons = {1e-2, 1e-3, 1e-4, 1e-5};
    std::vector<double> alphas = {1.0, 0.1, 0.01, 0.001};
    std::string sweep_mode = "state";
    std::vector<double> kappa_factors = {1.1, 0.3};
    int mms_levels = 3;
    int duality_directions = 10;
    std::uint64_t seed = 42;

    std::vector<std::pair<std::string, std::string>> echo_lines() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError::bad_value(key, "not a number: '" + v + "'");
    return x;
}

inline long to_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const long x = std::strtol(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError::bad_value(key, "not an integer: '" + v + "'");
    return x;
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(to_double(key, item));
    }
    if (out.empty()) throw ConfigError::bad_value(key, "empty list");
    return out;
}

} // namespace detail

/// Parses a plain-text key = value file ('#' comments, one key per line),
/// applies defaults, and validates every key with an error naming the key.
/// Unknown and duplicate keys are rejected.
inline RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file " + path);

    std::map<std::string, std::string> kv;
    std::vector<std::string> order;
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw Error("config line without '=': " + line);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw Error("config line with empty key: " + line);
        if (kv.count(key)) throw ConfigError::bad_value(key, "duplicate key");
        kv[key] = value;
        order.push_back(key);
    }

    RunConfig cfg;
    auto take = [&](const char* key) -> const std::string* {
        auto it = kv.find(key);
        if (it == kv.end()) return nullptr;
        return &it->second;
    };
    auto require = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError::missing_key(key);
        return it->second;
    };
    std::vector<std::string> known;
    auto mark = [&](const char* key) { known.push_back(key); };

    auto opt_double = [&](const char* key, double& slot) {
        mark(key);
        if (const std::string* v = take(key)) slot = detail::to_double(key, *v);
    };
    auto opt_int = [&](const char* key, int& slot) {
        mark(key);
        if (const std::string* v = take(key)) slot = static_cast<int>(detail::to_int(key, *v));
    };
    auto opt_list = [&](const char* key, std::vector<double>& slot) {
        mark(key);
        if (const std::string* v = take(key)) slot = detail::to_list(key, *v);
    };

    mark("grid_nx");
    cfg.grid_nx = static_cast<int>(detail::to_int("grid_nx", require("grid_nx")));
    mark("time_final");
    cfg.time_final = detail::to_double("time_final", require("time_final"));
    mark("time_steps");
    cfg.time_steps = static_cast<int>(detail::to_int("time_steps", require("time_steps")));
    mark("alpha");
    cfg.alpha = detail::to_double("alpha", require("alpha"));
    mark("tau");
    cfg.tau = detail::to_double("tau", require("tau"));
    mark("gamma");
    cfg.gamma = detail::to_double("gamma", require("gamma"));
    mark("potential");
    cfg.potential = require("potential");

    opt_int("grid_dim", cfg.grid_dim);
    opt_double("grid_length", cfg.grid_length);
    cfg.grid_length_y = cfg.grid_length;
    opt_double("grid_length_y", cfg.grid_length_y);
    cfg.grid_ny = cfg.grid_nx;
    opt_int("grid_ny", cfg.grid_ny);
    opt_double("c1", cfg.c1);
    opt_double("delta_dom", cfg.delta_dom);
    opt_double("phi0_mean", cfg.phi0_mean);
    opt_double("phi0_amplitude", cfg.phi0_amplitude);
    opt_double("mu0_value", cfg.mu0_value);
    opt_double("nu0_value", cfg.nu0_value);
    opt_double("w0_value", cfg.w0_value);
    opt_double("b1", cfg.b1);
    opt_double("b2", cfg.b2);
    opt_double("b3", cfg.b3);
    opt_double("kappa", cfg.kappa);
    opt_double("u_min", cfg.u_min);
    opt_double("u_max", cfg.u_max);
    mark("target");
    if (const std::string* v = take("target")) {
        if (*v == "constant") cfg.target = TargetMode::Constant;
        else if (*v == "cosine") cfg.target = TargetMode::Cosine;
        else if (*v == "reachable") cfg.target = TargetMode::Reachable;
        else throw ConfigError::bad_value("target", "must be constant, cosine or reachable");
    }
    opt_double("target_value", cfg.target_value);
    opt_double("target_amplitude", cfg.target_amplitude);
    opt_double("uref_amplitude", cfg.uref_amplitude);
    opt_double("newton_tol", cfg.newton_tol);
    opt_int("newton_max_iters", cfg.newton_max_iters);
    opt_double("newton_damping", cfg.newton_damping);
    opt_int("opt_max_iters", cfg.opt_max_iters);
    opt_double("opt_sigma0", cfg.opt_sigma0);
    opt_double("opt_tol_stat", cfg.opt_tol_stat);
    opt_double("opt_delta_sparse", cfg.opt_delta_sparse);
    mark("control_mode");
    if (const std::string* v = take("control_mode")) {
        if (*v == "zero") cfg.control_mode = ControlMode::Zero;
        else if (*v == "cosine") cfg.control_mode = ControlMode::Cosine;
        else if (*v == "random") cfg.control_mode = ControlMode::Random;
        else throw ConfigError::bad_value("control_mode", "must be zero, cosine or random");
    }
    opt_double("control_amplitude", cfg.control_amplitude);
    opt_int("save_stride", cfg.save_stride);
    opt_list("epsilons", cfg.epsilons);
    opt_list("alphas", cfg.alphas);
    mark("sweep_mode");
    if (const std::string* v = take("sweep_mode")) {
        if (*v != "state" && *v != "adjoint" && *v != "optimal-control")
            throw ConfigError::bad_value("sweep_mode", "must be state, adjoint or optimal-control");
        cfg.sweep_mode = *v;
    }
    opt_list("kappa_factors", cfg.kappa_factors);
    opt_int("mms_levels", cfg.mms_levels);
    opt_int("duality_directions", cfg.duality_directions);
    mark("seed");
    if (const std::string* v = take("seed"))
        cfg.seed = static_cast<std::uint64_t>(detail::to_int("seed", *v));

    for (const std::string& key : order) {
        bool ok = false;
        for (const std::string& k : known)
            if (k == key) { ok = true; break; }
        if (!ok) throw ConfigError::unknown_key(key);
    }

    // Semantic validation, one explicit message per key.
    if (cfg.grid_dim != 1 && cfg.grid_dim != 2)
        throw ConfigError::bad_value("grid_dim", "must be 1 or 2");
    if (cfg.grid_nx < 3) throw ConfigError::bad_value("grid_nx", "needs at least 3 nodes");
    if (cfg.grid_dim == 2 && cfg.grid_ny < 3)
        throw ConfigError::bad_value("grid_ny", "needs at least 3 nodes");
    if (!(cfg.grid_length > 0.0)) throw ConfigError::bad_value("grid_length", "must be positive");
    if (cfg.grid_dim == 2 && !(cfg.grid_length_y > 0.0))
        throw ConfigError::bad_value("grid_length_y", "must be positive");
    if (!(cfg.time_final > 0.0)) throw ConfigError::bad_value("time_final", "must be positive");
    if (cfg.time_steps < 2) throw ConfigError::bad_value("time_steps", "needs at least 2 steps");
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0))
        throw ConfigError::bad_value("alpha", "must be in [0,1]");
    if (!(cfg.tau > 0.0)) throw ConfigError::bad_value("tau", "must be positive");
    if (!(cfg.gamma > 0.0)) throw ConfigError::bad_value("gamma", "must be positive");
    if (cfg.potential != "regular" && cfg.potential != "log")
        throw ConfigError::bad_value("potential", "must be regular or log");
    if (cfg.potential == "log" && !(cfg.c1 > 1.0))
        throw ConfigError::bad_value("c1", "must exceed 1");
    if (cfg.potential == "log" && !(cfg.delta_dom > 0.0 && cfg.delta_dom < 0.5))
        throw ConfigError::bad_value("delta_dom", "must lie in (0, 0.5)");
    if (cfg.b1 < 0.0) throw ConfigError::bad_value("b1", "must be nonnegative");
    if (cfg.b2 < 0.0) throw ConfigError::bad_value("b2", "must be nonnegative");
    if (!(cfg.b3 > 0.0)) throw ConfigError::bad_value("b3", "must be positive");
    if (cfg.kappa < 0.0) throw ConfigError::bad_value("kappa", "must be nonnegative");
    if (!(cfg.u_min <= cfg.u_max))
        throw ConfigError::bad_value("u_min", "must not exceed u_max");
    if (!(cfg.newton_tol > 0.0)) throw ConfigError::bad_value("newton_tol", "must be positive");
    if (cfg.newton_max_iters < 1)
        throw ConfigError::bad_value("newton_max_iters", "must be at least 1");
    if (!(cfg.newton_damping > 0.0 && cfg.newton_damping <= 1.0))
        throw ConfigError::bad_value("newton_damping", "must lie in (0, 1]");
    if (cfg.opt_max_iters < 1) throw ConfigError::bad_value("opt_max_iters", "must be at least 1");
    if (cfg.opt_sigma0 < 0.0) throw ConfigError::bad_value("opt_sigma0", "must be nonnegative");
    if (!(cfg.opt_tol_stat > 0.0))
        throw ConfigError::bad_value("opt_tol_stat", "must be positive");
    if (cfg.opt_delta_sparse < 0.0)
        throw ConfigError::bad_value("opt_delta_sparse", "must be nonnegative");
    if (cfg.save_stride < 1) throw ConfigError::bad_value("save_stride", "must be at least 1");
    for (double e : cfg.epsilons)
        if (!(e > 0.0)) throw ConfigError::bad_value("epsilons", "entries must be positive");
    if (cfg.mms_levels < 2 || cfg.mms_levels > 5)
        throw ConfigError::bad_value("mms_levels", "must be between 2 and 5");
    if (cfg.duality_directions < 1)
        throw ConfigError::bad_value("duality_directions", "must be at least 1");
    if (cfg.potential == "log") {
        const double hi = cfg.phi0_mean + std::abs(cfg.phi0_amplitude);
        const double lo = cfg.phi0_mean - std::abs(cfg.phi0_amplitude);
        if (!(lo > -1.0 && hi < 1.0))
            throw ConfigError::bad_value("phi0_mean",
                                         "initial phi must stay strictly inside (-1, 1)");
    }
    return cfg;
}

inline std::vector<std::pair<std::string, std::string>> RunConfig::echo_lines() const {
    std::vector<std::pair<std::string, std::string>> out;
    auto add = [&](const char* k, const std::string& v) { out.emplace_back(k, v); };
    char buf[40];
    auto d = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    auto i = [&](long v) { return std::to_string(v); };
    auto list = [&](const std::vector<double>& v) {
        std::string s;
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (k) s += ",";
            s += d(v[k]);
        }
        return s;
    };
    add("grid_dim", i(grid_dim));
    add("grid_length", d(grid_length));
    if (grid_dim == 2) add("grid_length_y", d(grid_length_y));
    add("grid_nx", i(grid_nx));
    if (grid_dim == 2) add("grid_ny", i(grid_ny));
    add("time_final", d(time_final));
    add("time_steps", i(time_steps));
    add("alpha", d(alpha));
    add("tau", d(tau));
    add("gamma", d(gamma));
    add("potential", potential);
    if (potential == "log") {
        add("c1", d(c1));
        add("delta_dom", d(delta_dom));
    }
    add("phi0_mean", d(phi0_mean));
    add("phi0_amplitude", d(phi0_amplitude));
    add("mu0_value", d(mu0_value));
    add("nu0_value", d(nu0_value));
    add("w0_value", d(w0_value));
    add("b1", d(b1));
    add("b2", d(b2));
    add("b3", d(b3));
    add("kappa", d(kappa));
    add("u_min", d(u_min));
    add("u_max", d(u_max));
    add("target", target == TargetMode::Constant ? "constant"
                  : target == TargetMode::Cosine ? "cosine" : "reachable");
    add("target_value", d(target_value));
    add("target_amplitude", d(target_amplitude));
    add("uref_amplitude", d(uref_amplitude));
    add("newton_tol", d(newton_tol));
    add("newton_max_iters", i(newton_max_iters));
    add("newton_damping", d(newton_damping));
    add("opt_max_iters", i(opt_max_iters));
    add("opt_sigma0", d(opt_sigma0));
    add("opt_tol_stat", d(opt_tol_stat));
    add("opt_delta_sparse", d(opt_delta_sparse));
    add("control_mode", control_mode == ControlMode::Zero ? "zero"
                        : control_mode == ControlMode::Cosine ? "cosine" : "random");
    add("control_amplitude", d(control_amplitude));
    add("save_stride", i(save_stride));
    add("epsilons", list(epsilons));
    add("alphas", list(alphas));
    add("sweep_mode", sweep_mode);
    add("kappa_factors", list(kappa_factors));
    add("mms_levels", i(mms_levels));
    add("duality_directions", i(duality_directions));
    add("seed", i(static_cast<long>(seed)));
    return out;
}

// ---- problem assembly -------------------------------------------------

inline GridPtr make_grid(const RunConfig& cfg) {
    if (cfg.grid_dim == 1) return Grid::interval(cfg.grid_length, cfg.grid_nx);
    return Grid::rectangle(cfg.grid_length, cfg.grid_length_y, cfg.grid_nx, cfg.grid_ny);
}

inline StateSpec make_state_spec(const RunConfig& cfg) {
    StateSpec spec;
    spec.grid = make_grid(cfg);
    spec.time = TimeGrid{cfg.time_final, cfg.time_steps};
    spec.params = StateParams{cfg.alpha, cfg.tau, cfg.gamma};
    spec.potential = (cfg.potential == "log") ? PotentialSpec::logarithmic(cfg.c1, cfg.delta_dom)
                                              : PotentialSpec::regular();
    spec.newton = NewtonOptions{cfg.newton_tol, cfg.newton_max_iters, cfg.newton_damping};
    const double lx = cfg.grid_length;
    const double ly = cfg.grid_length_y;
    auto cosprof = [&](double x, double y) {
        double v = std::cos(M_PI * x / lx);
        if (cfg.grid_dim == 2) v *= std::cos(M_PI * y / ly);
        return v;
    };
    spec.init.phi0 = make_field(spec.grid, [&](double x, double y) {
        return cfg.phi0_mean + cfg.phi0_amplitude * cosprof(x, y);
    });
    spec.init.mu0 = Field(spec.grid, cfg.mu0_value);
    spec.init.nu0 = Field(spec.grid, cfg.nu0_value);
    spec.init.w0 = Field(spec.grid, cfg.w0_value);
    return spec;
}

/// The documented reference control behind "reachable" targets:
///   u_ref(x, t) = a cos(pi x / Lx) [cos(pi y / Ly)] sin(pi t / T),
/// clamped to the control box so that it is admissible.
inline ControlTrajectory make_reference_control(const RunConfig& cfg, const StateSpec& spec) {
    const double lx = cfg.grid_length;
    const double ly = cfg.grid_length_y;
    const double T = cfg.time_final;
    ControlTrajectory u = ControlTrajectory::from_function(
        spec.grid, spec.time, [&](double x, double y, double t) {
            double v = cfg.uref_amplitude * std::cos(M_PI * x / lx) * std::sin(M_PI * t / T);
            if (cfg.grid_dim == 2) v *= std::cos(M_PI * y / ly);
            return std::min(cfg.u_max, std::max(cfg.u_min, v));
        });
    return u;
}

struct TargetBuild {
    CostData cost;
    ControlTrajectory u_ref; // nonempty only for reachable targets
    bool has_u_ref = false;
};

/// Builds phi_Q / phi_Omega per the configured target mode; the reachable
/// mode simulates the reference control and tracks its trajectory.
inline TargetBuild build_targets(const RunConfig& cfg, const StateSpec& spec) {
    TargetBuild tb;
    tb.cost.b1 = cfg.b1;
    tb.cost.b2 = cfg.b2;
    tb.cost.b3 = cfg.b3;
    tb.cost.kappa = cfg.kappa;
    const int nt = spec.time.nt;
    if (cfg.target == TargetMode::Reachable) {
        tb.u_ref = make_reference_control(cfg, spec);
        tb.has_u_ref = true;
        StateTrajectory traj = solve_state(spec, tb.u_ref);
        tb.cost.phi_Q = traj.phi;
        tb.cost.phi_Omega = traj.phi[nt];
        return tb;
    }
    Field profile(spec.grid, cfg.target_value);
    if (cfg.target == TargetMode::Cosine) {
        const double lx = cfg.grid_length, ly = cfg.grid_length_y;
        profile = make_field(spec.grid, [&](double x, double y) {
            double v = std::cos(M_PI * x / lx);
            if (cfg.grid_dim == 2) v *= std::cos(M_PI * y / ly);
            return cfg.target_value + cfg.target_amplitude * v;
        });
    }
    tb.cost.phi_Q.assign(nt + 1, profile);
    tb.cost.phi_Omega = profile;
    return tb;
}

inline ProblemSpec make_problem(const RunConfig& cfg) {
    ProblemSpec ps;
    ps.state = make_state_spec(cfg);
    TargetBuild tb = build_targets(cfg, ps.state);
    ps.cost = std::move(tb.cost);
    ps.bounds = Bounds::box(ps.state.grid, cfg.u_min, cfg.u_max);
    ps.opt = OptimizerConfig{cfg.opt_max_iters, cfg.opt_sigma0, 0.5, 1e-4,
                             cfg.opt_tol_stat, cfg.opt_delta_sparse, 1e-12};
    return ps;
}

/// Control for the plain simulation driver: zero, a smooth cosine profile, or
/// seeded nodewise noise within the control box.
inline ControlTrajectory make_driver_control(const RunConfig& cfg, const StateSpec& spec,
                                             std::uint64_t seed) {
    switch (cfg.control_mode) {
        case ControlMode::Zero:
            return ControlTrajectory::zero(spec.grid, spec.time.nt);
        case ControlMode::Cosine: {
            RunConfig c2 = cfg;
            c2.uref_amplitude = cfg.control_amplitude;
            return make_reference_control(c2, spec);
        }
        case ControlMode::Random: {
            Lcg64 rng(seed);
            ControlTrajectory u(spec.grid, spec.time.nt);
            for (int n = 1; n <= spec.time.nt; ++n)
                for (double& v : u.at_step(n).values) {
                    const double raw = cfg.control_amplitude * rng.symmetric();
                    v = std::min(cfg.u_max, std::max(cfg.u_min, raw));
                }
            return u;
        }
    }
    throw Error("make_driver_control: unknown mode");
}

} // namespace chrelax
