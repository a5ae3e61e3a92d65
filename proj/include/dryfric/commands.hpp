#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include <dryfric/analytic.hpp>
#include <dryfric/io.hpp>
#include <dryfric/model.hpp>
#include <dryfric/propagator.hpp>
#include <dryfric/simulate.hpp>
#include <dryfric/stats.hpp>

namespace dryfric {

// quadrature failed to reach its tolerance; distinct from bad arguments and
// I/O failures so callers can map it to its own exit code
struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommandResult {
    RunManifest manifest;
    nlohmann::ordered_json console;  // printable diagnostics, insertion order kept
    int exit_code = 0;
};

namespace detail {

// rerun support: keep the filename, swap the directory
inline std::string remap_dir(const std::string& path, const std::string& dir) {
    if (dir.empty()) return path;
    namespace fs = std::filesystem;
    return (fs::path(dir) / fs::path(path).filename()).string();
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    open_out(path) << j.dump(2) << '\n';
}

}  // namespace detail

// --- stationary ---

struct StationaryCommand {
    double nu = 1.0;
    double tau = 1.0;
    double y = 0.0;
    double grid_lo = 0.0;  // lo == hi selects the automatic grid
    double grid_hi = 0.0;
    std::size_t points = 0;  // 0 selects the automatic point count
    std::string out = "stationary.csv";
};

inline void to_json(nlohmann::json& j, const StationaryCommand& c) {
    j = {{"nu", c.nu},           {"tau", c.tau},
         {"y", c.y},             {"grid-lo", c.grid_lo},
         {"grid-hi", c.grid_hi}, {"points", c.points},
         {"out", c.out}};
}

inline void from_json(const nlohmann::json& j, StationaryCommand& c) {
    j.at("nu").get_to(c.nu);
    j.at("tau").get_to(c.tau);
    j.at("y").get_to(c.y);
    j.at("grid-lo").get_to(c.grid_lo);
    j.at("grid-hi").get_to(c.grid_hi);
    j.at("points").get_to(c.points);
    j.at("out").get_to(c.out);
}

inline CommandResult run_stationary(const StationaryCommand& c) {
    if (!(c.nu > 0)) throw std::invalid_argument("--nu must be > 0");
    if (!(c.tau > 0)) throw std::invalid_argument("--tau must be > 0");
    if (!std::isfinite(c.y)) throw std::invalid_argument("--y must be finite");
    if (c.points == 1)
        throw std::invalid_argument("--points must be 0 (automatic) or >= 2");

    ReducedParams r;
    r.nu = c.nu;
    r.tau = c.tau;
    r.y = c.y;
    r.w = c.y / c.tau;

    std::vector<double> grid;
    if (c.grid_lo == 0.0 && c.grid_hi == 0.0) {
        grid = stationary_default_grid(r, c.points);
    } else {
        if (!(c.grid_lo < c.grid_hi))
            throw std::invalid_argument("--grid-lo must be below --grid-hi");
        grid = linspace(c.grid_lo, c.grid_hi, c.points ? c.points : 2001);
    }
    auto curve = stationary_pdf(r, grid);

    // residual of the closed-form normalizer against direct quadrature of the
    // unnormalized density, in log space so tiny partition functions survive
    const double logn = stationary_log_normalizer(r);
    const double vstar = potential_minimizer({c.tau, c.y});
    const double shift = stationary_log_unnormalized(r, vstar);
    auto f = [&](double v) {
        return std::exp(stationary_log_unnormalized(r, v) - shift);
    };
    const double inf = std::numeric_limits<double>::infinity();
    auto q = integrate_adaptive(f, -inf, inf, 1e-11, 4000, {0.0, vstar});
    if (!q.converged)
        throw NonConvergence("stationary normalizer quadrature did not converge");
    const double logn_quad = shift + std::log(q.value);

    write_curve_csv(c.out, curve);

    CommandResult res;
    res.console["log_normalizer"] = logn;
    if (std::fabs(logn) < 700.0) res.console["normalizer"] = std::exp(logn);
    res.console["quadrature_residual"] = std::fabs(std::expm1(logn - logn_quad));
    res.manifest = {"stationary", nlohmann::json(c), 0, {c.out}};
    write_manifest(c.out + ".manifest.json", res.manifest);
    return res;
}

// --- figure1 ---

struct Figure1Command {
    std::string out_dir = "figure1";
};

inline void to_json(nlohmann::json& j, const Figure1Command& c) {
    j = {{"out-dir", c.out_dir}};
}

inline void from_json(const nlohmann::json& j, Figure1Command& c) {
    j.at("out-dir").get_to(c.out_dir);
}

inline CommandResult run_figure1(const Figure1Command& c) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(c.out_dir, ec);  // open_out reports any failure
    auto path = [&](const std::string& name) {
        return (fs::path(c.out_dir) / name).string();
    };

    const double tau = 1.0, y_viscous = 3.0;
    nlohmann::ordered_json curves;
    std::vector<std::string> outputs;

    const double ws[] = {0.0, 0.4, 0.9};
    const char* stuck_names[] = {"stuck_w0.csv", "stuck_w04.csv", "stuck_w09.csv"};
    const char* stuck_keys[] = {"stuck_w0", "stuck_w04", "stuck_w09"};
    for (int i = 0; i < 3; ++i) {
        auto curve = limit_pdf_stuck(ws[i], stuck_default_grid(ws[i]));
        write_curve_csv(path(stuck_names[i]), curve);
        outputs.push_back(path(stuck_names[i]));
        curves[stuck_keys[i]] = {{"file", stuck_names[i]},
                                 {"w", ws[i]},
                                 {"scaled_variable", "x = v / nu"},
                                 {"value_at_zero", limit_pdf_stuck_value(ws[i], 0.0)}};
    }

    // the two conditional branch densities live on opposite half lines
    // (negative branch in x = v/nu, positive in x = v/sqrt(nu)), so a
    // pointwise maximum overlays them losslessly except at the shared origin,
    // where the exponential branch's height 2 wins
    auto pgrid = linspace(-10.0, 10.0, 2001);
    auto neg = limit_pdf_partly_stuck(-1, tau, pgrid);
    auto pos = limit_pdf_partly_stuck(+1, tau, pgrid);
    DensityCurve comp;
    comp.grid = pgrid;
    comp.values.resize(pgrid.size());
    for (std::size_t i = 0; i < pgrid.size(); ++i)
        comp.values[i] = std::max(neg.values[i], pos.values[i]);
    comp.meta = {{"kind", "limit_pdf_partly_stuck_composite"}, {"tau", tau}};
    write_curve_csv(path("partly_stuck_tau1.csv"), comp);
    outputs.push_back(path("partly_stuck_tau1.csv"));
    curves["partly_stuck_tau1"] = {
        {"file", "partly_stuck_tau1.csv"},
        {"tau", tau},
        {"note",
         "negative branch in x = v/nu, positive branch in x = v/sqrt(nu); each "
         "branch is a conditional density on its own half line"},
        {"height_at_zero", 2.0}};

    auto visc = limit_pdf_viscous(tau, viscous_default_grid(tau));
    write_curve_csv(path("viscous_tau1.csv"), visc);
    outputs.push_back(path("viscous_tau1.csv"));
    const double mean = y_viscous - (y_viscous > 0 ? tau : -tau);
    curves["viscous_tau1"] = {
        {"file", "viscous_tau1.csv"},
        {"tau", tau},
        {"y", y_viscous},
        {"scaled_variable", "x = (v - asymptotic_mean) / sqrt(nu)"},
        {"asymptotic_mean", mean}};

    nlohmann::ordered_json index = {{"curves", curves}};
    detail::write_json_file(path("index.json"), index);
    outputs.push_back(path("index.json"));

    CommandResult res;
    res.console["out_dir"] = c.out_dir;
    res.console["curves"] = 5;
    res.console["viscous_asymptotic_mean"] = mean;
    res.manifest = {"figure1", nlohmann::json(c), 0, outputs};
    write_manifest(path("manifest.json"), res.manifest);
    return res;
}

// --- simulate ---

struct SimulateCommand {
    double alpha = 1.0;
    double a = 0.0;
    double delta = 1.0;
    double diffusion = 1.0;
    double drift_scale = 0.5;
    double v0 = 0.0;
    double t = 1.0;
    double dt = 1e-3;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 0;
    bool functionals = false;
    std::string out = "ensemble.csv";
};

inline void to_json(nlohmann::json& j, const SimulateCommand& c) {
    j = {{"alpha", c.alpha},
         {"a", c.a},
         {"delta", c.delta},
         {"diffusion", c.diffusion},
         {"drift-scale", c.drift_scale},
         {"v0", c.v0},
         {"t", c.t},
         {"dt", c.dt},
         {"n-paths", c.n_paths},
         {"seed", c.seed},
         {"functionals", c.functionals},
         {"out", c.out}};
}

inline void from_json(const nlohmann::json& j, SimulateCommand& c) {
    j.at("alpha").get_to(c.alpha);
    j.at("a").get_to(c.a);
    j.at("delta").get_to(c.delta);
    j.at("diffusion").get_to(c.diffusion);
    j.at("drift-scale").get_to(c.drift_scale);
    j.at("v0").get_to(c.v0);
    j.at("t").get_to(c.t);
    j.at("dt").get_to(c.dt);
    j.at("n-paths").get_to(c.n_paths);
    j.at("seed").get_to(c.seed);
    j.at("functionals").get_to(c.functionals);
    j.at("out").get_to(c.out);
}

inline CommandResult run_simulate(const SimulateCommand& c) {
    if (!std::isfinite(c.alpha) || c.alpha < 0)
        throw std::invalid_argument("--alpha must be finite and >= 0");
    if (!std::isfinite(c.a)) throw std::invalid_argument("--a must be finite");
    if (!std::isfinite(c.delta) || c.delta < 0)
        throw std::invalid_argument("--delta must be finite and >= 0");
    if (!std::isfinite(c.diffusion) || c.diffusion < 0)
        throw std::invalid_argument("--diffusion must be finite and >= 0");
    if (!(c.drift_scale > 0)) throw std::invalid_argument("--drift-scale must be > 0");
    if (!std::isfinite(c.v0)) throw std::invalid_argument("--v0 must be finite");
    if (!(c.t > 0)) throw std::invalid_argument("--t must be > 0");
    if (!(c.dt > 0) || c.dt > c.t)
        throw std::invalid_argument("--dt must lie in (0, --t]");
    if (c.n_paths == 0) throw std::invalid_argument("--n-paths must be >= 1");

    SimConfig cfg;
    cfg.params = {c.alpha, c.a, c.delta, c.diffusion, c.drift_scale};
    cfg.v0 = c.v0;
    cfg.t_final = c.t;
    cfg.dt = c.dt;
    cfg.n_paths = c.n_paths;
    cfg.seed = c.seed;
    cfg.record_functionals = c.functionals;
    cfg.check();

    auto ens = euler_maruyama_ensemble(cfg);
    write_ensemble_csv(c.out, ens);
    write_ensemble_summary(c.out + ".summary.json", ens);

    CommandResult res;
    res.console["n"] = ens.terminal.size();
    res.console["mean"] = sample_mean(ens.terminal);
    res.console["variance"] = sample_variance(ens.terminal);

    // pure dry friction has an exact terminal law; print the KS distance so
    // scripted runs can gate on it
    if (c.alpha == 0 && c.a == 0 && c.delta > 0 && c.diffusion > 0) {
        ModelParams folded{0.0, 0.0, c.drift_scale * c.delta, c.diffusion, 1.0};
        auto q = scale_to_unit_diffusion(folded, c.t);
        Ecdf e(ens.terminal);
        res.console["ks_vs_closed_form"] = ks_distance(e, [&](double v) {
            return propagator_free_cdf({c.v0, v, q.time, q.params.delta});
        });
    }

    res.manifest = {"simulate", nlohmann::json(c), c.seed,
                    {c.out, c.out + ".summary.json"}};
    write_manifest(c.out + ".manifest.json", res.manifest);
    return res;
}

// --- propagator ---

struct PropagatorCommand {
    double v0 = 0.0;
    double t = 1.0;
    double delta = 1.0;
    double a = 0.0;  // force convention: positive a pushes toward positive v
    double alpha = 0.0;
    std::string method = "closed";
    double grid_lo = 0.0;
    double grid_hi = 0.0;
    std::size_t points = 0;
    std::size_t n_paths = 20000;
    double dt = 1e-3;
    std::uint64_t seed = 0;
    double bandwidth = 0.0;  // 0 selects Silverman's rule
    std::string out = "propagator.csv";
};

inline void to_json(nlohmann::json& j, const PropagatorCommand& c) {
    j = {{"v0", c.v0},           {"t", c.t},
         {"delta", c.delta},     {"a", c.a},
         {"alpha", c.alpha},     {"method", c.method},
         {"grid-lo", c.grid_lo}, {"grid-hi", c.grid_hi},
         {"points", c.points},   {"n-paths", c.n_paths},
         {"dt", c.dt},           {"seed", c.seed},
         {"bandwidth", c.bandwidth}, {"out", c.out}};
}

inline void from_json(const nlohmann::json& j, PropagatorCommand& c) {
    j.at("v0").get_to(c.v0);
    j.at("t").get_to(c.t);
    j.at("delta").get_to(c.delta);
    j.at("a").get_to(c.a);
    j.at("alpha").get_to(c.alpha);
    j.at("method").get_to(c.method);
    j.at("grid-lo").get_to(c.grid_lo);
    j.at("grid-hi").get_to(c.grid_hi);
    j.at("points").get_to(c.points);
    j.at("n-paths").get_to(c.n_paths);
    j.at("dt").get_to(c.dt);
    j.at("seed").get_to(c.seed);
    j.at("bandwidth").get_to(c.bandwidth);
    j.at("out").get_to(c.out);
}

inline CommandResult run_propagator(const PropagatorCommand& c) {
    if (!std::isfinite(c.v0)) throw std::invalid_argument("--v0 must be finite");
    if (!(c.t > 0)) throw std::invalid_argument("--t must be > 0");
    if (!(c.delta > 0)) throw std::invalid_argument("--delta must be > 0");
    if (!std::isfinite(c.a)) throw std::invalid_argument("--a must be finite");
    if (!std::isfinite(c.alpha) || c.alpha < 0)
        throw std::invalid_argument("--alpha must be finite and >= 0");
    if (c.points == 1)
        throw std::invalid_argument("--points must be 0 (automatic) or >= 2");

    // refusal, not approximation: each method owns an exact parameter range
    if (c.method == "closed") {
        if (c.alpha != 0)
            throw std::invalid_argument("--method closed requires --alpha 0");
        if (c.a != 0) throw std::invalid_argument("--method closed requires --a 0");
    } else if (c.method == "quadrature") {
        if (c.alpha != 0)
            throw std::invalid_argument("--method quadrature requires --alpha 0");
    } else if (c.method == "girsanov") {
        if (!(c.dt > 0) || c.dt > c.t)
            throw std::invalid_argument("--dt must lie in (0, --t]");
        if (c.n_paths == 0) throw std::invalid_argument("--n-paths must be >= 1");
        if (!(c.bandwidth >= 0))
            throw std::invalid_argument("--bandwidth must be >= 0 (0 = automatic)");
    } else {
        throw std::invalid_argument(
            "--method must be one of closed, quadrature, girsanov");
    }

    std::vector<double> grid;
    if (c.grid_lo == 0.0 && c.grid_hi == 0.0) {
        grid = propagator_default_grid(c.v0, c.t, c.delta, c.points);
    } else {
        if (!(c.grid_lo < c.grid_hi))
            throw std::invalid_argument("--grid-lo must be below --grid-hi");
        grid = linspace(c.grid_lo, c.grid_hi, c.points ? c.points : 2001);
    }

    // the measure-change layer underneath uses the opposite sign for the
    // constant force, so the flag value is negated once at this boundary
    const double a_measure = -c.a;

    CommandResult res;
    res.console["method"] = c.method;
    DensityCurve curve;
    if (c.method == "closed") {
        curve = propagator_free_curve(c.v0, c.t, c.delta, grid);
    } else if (c.method == "quadrature") {
        curve = propagator_forced_curve(c.v0, c.t, c.delta, a_measure, grid);
        if (!curve.meta.at("converged").get<bool>())
            throw NonConvergence("quadrature did not reach tolerance on the grid");
        res.console["error_estimate"] = curve.meta.at("error_estimate").get<double>();
        res.console["panels_used"] = curve.meta.at("panels_used").get<std::size_t>();
    } else {
        curve = girsanov_propagator_estimate(c.v0, grid, c.t, c.delta, a_measure,
                                             c.alpha, c.n_paths, c.dt, c.seed,
                                             c.bandwidth);
        res.console["ess"] = curve.meta.at("ess").get<double>();
        res.console["sum_weight"] = curve.meta.at("sum_weight").get<double>();
        res.console["ess_warning"] = curve.meta.at("ess_warning").get<bool>();
    }
    curve.meta["force_a"] = c.a;

    write_curve_csv(c.out, curve);
    detail::write_json_file(c.out + ".meta.json", curve.meta);

    res.manifest = {"propagator", nlohmann::json(c), c.seed,
                    {c.out, c.out + ".meta.json"}};
    write_manifest(c.out + ".manifest.json", res.manifest);
    return res;
}

// --- rerun ---

inline CommandResult run_rerun(const std::string& manifest_path,
                               const std::string& out_dir = "") {
    RunManifest m;
    try {
        m = read_manifest(manifest_path);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(manifest_path + ": " + e.what());
    }
    if (!out_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
    }
    try {
        if (m.command == "stationary") {
            auto c = m.parameters.get<StationaryCommand>();
            c.out = detail::remap_dir(c.out, out_dir);
            return run_stationary(c);
        }
        if (m.command == "figure1") {
            auto c = m.parameters.get<Figure1Command>();
            if (!out_dir.empty()) c.out_dir = out_dir;
            return run_figure1(c);
        }
        if (m.command == "simulate") {
            auto c = m.parameters.get<SimulateCommand>();
            c.out = detail::remap_dir(c.out, out_dir);
            return run_simulate(c);
        }
        if (m.command == "propagator") {
            auto c = m.parameters.get<PropagatorCommand>();
            c.out = detail::remap_dir(c.out, out_dir);
            return run_propagator(c);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(manifest_path + ": " + e.what());
    }
    throw std::invalid_argument("manifest command '" + m.command +
                                "' cannot be rerun");
}

}
