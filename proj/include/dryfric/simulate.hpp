#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <dryfric/curve.hpp>
#include <dryfric/model.hpp>
#include <dryfric/rng.hpp>
#include <dryfric/stats.hpp>

namespace dryfric {

struct SimConfig {
    ModelParams params;
    double v0 = 0.0;
    double t_final = 1.0;
    double dt = 1e-3;
    std::size_t n_paths = 1;
    std::uint64_t seed = 0;
    bool record_functionals = false;

    void check() const {
        params.check();
        if (!std::isfinite(v0))
            throw std::invalid_argument("simulate: v0 must be finite");
        if (!std::isfinite(t_final) || !(t_final > 0))
            throw std::invalid_argument("simulate: t_final must be > 0");
        if (!std::isfinite(dt) || !(dt > 0) || !(dt <= t_final))
            throw std::invalid_argument("simulate: need 0 < dt <= t_final");
        if (n_paths < 1)
            throw std::invalid_argument("simulate: n_paths must be >= 1");
    }
};

// path functionals of a driftless Brownian reference path; exactly the six
// quantities the change-of-measure weight needs
struct BrownianFunctionals {
    double b_t = 0.0;        // terminal value
    double l_t = 0.0;        // local time at 0, |B| = |v0| + int sgn dB + 2 L
    double occupation = 0.0; // time with B >= 0
    double int_b = 0.0;      // int B ds
    double int_abs_b = 0.0;  // int |B| ds
    double int_b2 = 0.0;     // int B^2 ds
};

struct PathEnsemble {
    std::vector<double> terminal;
    std::vector<BrownianFunctionals> functionals;  // filled iff record_functionals
    SimConfig config;
};

struct GirsanovWeight {
    double log_weight = 0.0;
};

namespace detail {

struct StepPlan {
    std::size_t n_full;
    double rem;  // final short step, 0 when dt divides t_final
};

inline StepPlan plan_steps(double t_final, double dt) {
    const double n = std::floor(t_final / dt + 1e-9);
    double rem = t_final - n * dt;
    if (std::fabs(rem) <= dt * 1e-9) rem = 0.0;
    return {static_cast<std::size_t>(n), std::max(rem, 0.0)};
}

// runs fn(p) for every path index; work is pulled in fixed chunks but each
// path writes only its own slot, so results never depend on the schedule
template <class Fn>
inline void parallel_paths(std::size_t n, unsigned threads, Fn&& fn) {
    threads = static_cast<unsigned>(
        std::min<std::size_t>(threads ? threads : 1, n));
    if (threads <= 1) {
        for (std::size_t p = 0; p < n; ++p) fn(p);
        return;
    }
    std::atomic<std::size_t> cursor{0};
    constexpr std::size_t chunk = 256;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t lo = cursor.fetch_add(chunk);
                if (lo >= n) return;
                const std::size_t hi = std::min(n, lo + chunk);
                for (std::size_t p = lo; p < hi; ++p) fn(p);
            }
        });
    for (auto& th : pool) th.join();
}

// explicit Euler step chain; sgn always at the pre-step value, left-endpoint
// sums for the functionals (the weights consume Ito integrals)
template <bool WithFunctionals>
inline void run_path(const SimConfig& cfg, const StepPlan& plan, std::uint64_t p,
                     double& terminal, BrownianFunctionals* fn) {
    auto g = path_stream(cfg.seed, p);
    const double c = cfg.params.drift_scale;
    const double al = cfg.params.alpha, a = cfg.params.a, d = cfg.params.delta;
    const double sqdt = std::sqrt(cfg.params.diffusion * cfg.dt);
    double v = cfg.v0;
    double occ = 0, ib = 0, iab = 0, ib2 = 0, tanaka = 0;
    auto step = [&](double h, double sqh) {
        const double s = sgn(v);
        if constexpr (WithFunctionals) {
            if (v >= 0) occ += h;
            ib += v * h;
            iab += std::fabs(v) * h;
            ib2 += v * v * h;
        }
        const double vn = v - c * (al * v - a + d * s) * h + sqh * standard_normal(g);
        if constexpr (WithFunctionals) tanaka += s * (vn - v);
        v = vn;
    };
    for (std::size_t k = 0; k < plan.n_full; ++k) step(cfg.dt, sqdt);
    if (plan.rem > 0) step(plan.rem, std::sqrt(cfg.params.diffusion * plan.rem));
    terminal = v;
    if constexpr (WithFunctionals) {
        fn->b_t = v;
        // Tanaka residual; exact zero up to roundoff when the path never
        // changes sign, clamped so the l_t >= 0 invariant survives rounding
        fn->l_t = std::max(0.0, 0.5 * (std::fabs(v) - std::fabs(cfg.v0) - tanaka));
        fn->occupation = occ;
        fn->int_b = ib;
        fn->int_abs_b = iab;
        fn->int_b2 = ib2;
    }
}

}  // namespace detail

inline unsigned default_thread_count() {
    const unsigned n = std::thread::hardware_concurrency();
    return n ? n : 1;
}

inline PathEnsemble euler_maruyama_ensemble(const SimConfig& cfg,
                                            unsigned threads = default_thread_count()) {
    cfg.check();
    const auto plan = detail::plan_steps(cfg.t_final, cfg.dt);
    PathEnsemble e;
    e.config = cfg;
    e.terminal.resize(cfg.n_paths);
    if (cfg.record_functionals) e.functionals.resize(cfg.n_paths);
    std::atomic<std::size_t> bad{0};
    if (cfg.record_functionals)
        detail::parallel_paths(cfg.n_paths, threads, [&](std::size_t p) {
            detail::run_path<true>(cfg, plan, p, e.terminal[p], &e.functionals[p]);
            if (!std::isfinite(e.terminal[p])) bad.fetch_add(1);
        });
    else
        detail::parallel_paths(cfg.n_paths, threads, [&](std::size_t p) {
            detail::run_path<false>(cfg, plan, p, e.terminal[p], nullptr);
            if (!std::isfinite(e.terminal[p])) bad.fetch_add(1);
        });
    if (bad.load() > 0)
        throw std::runtime_error("euler_maruyama_ensemble: " +
                                 std::to_string(bad.load()) +
                                 " paths produced non-finite values");
    return e;
}

// driftless Brownian reference ensemble carrying all six path functionals
inline PathEnsemble brownian_ensemble_with_functionals(double v0, double t, double dt,
                                                       std::size_t n_paths,
                                                       std::uint64_t seed,
                                                       unsigned threads =
                                                           default_thread_count()) {
    SimConfig cfg;
    cfg.params = {0.0, 0.0, 0.0, 1.0, 1.0};
    cfg.v0 = v0;
    cfg.t_final = t;
    cfg.dt = dt;
    cfg.n_paths = n_paths;
    cfg.seed = seed;
    cfg.record_functionals = true;
    return euler_maruyama_ensemble(cfg, threads);
}

// cross-check local-time estimator: band occupancy of |B| < eps over 4 eps
// with eps = 2 sqrt(dt), replaying the exact same per-path streams as
// brownian_ensemble_with_functionals so the two estimators see one path set
inline std::vector<double> local_time_band_ensemble(double v0, double t, double dt,
                                                    std::size_t n_paths,
                                                    std::uint64_t seed) {
    const auto plan = detail::plan_steps(t, dt);
    const double eps = 2.0 * std::sqrt(dt);
    std::vector<double> out(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) {
        auto g = path_stream(seed, p);
        double v = v0, band = 0;
        auto step = [&](double h, double sqh) {
            if (std::fabs(v) < eps) band += h;
            v += sqh * standard_normal(g);
        };
        const double sqdt = std::sqrt(dt);
        for (std::size_t k = 0; k < plan.n_full; ++k) step(dt, sqdt);
        if (plan.rem > 0) step(plan.rem, std::sqrt(plan.rem));
        out[p] = band / (4.0 * eps);
    }
    return out;
}

// log change-of-measure weight turning driftless Brownian paths into paths of
// dv = -[delta sgn(v) + a + alpha v] dt + dB (see docs/formulas.md for the
// derivation; the alpha v part contributes the Ito boundary term). This layer
// uses the measure-change sign convention: positive a drifts toward negative
// v; callers holding the canonical force pass its negative.
inline GirsanovWeight girsanov_log_weight(const BrownianFunctionals& f, double v0,
                                          double t, double delta, double a,
                                          double alpha) {
    const double lw = delta * (std::fabs(v0) - std::fabs(f.b_t)) + a * (v0 - f.b_t) +
                      2.0 * delta * f.l_t - 0.5 * (delta * delta + a * a) * t +
                      a * delta * t - 2.0 * a * delta * f.occupation +
                      0.5 * alpha * t - 0.5 * alpha * alpha * f.int_b2 -
                      alpha * delta * f.int_abs_b - a * alpha * f.int_b -
                      0.5 * alpha * (f.b_t * f.b_t - v0 * v0);
    return {lw};
}

// weighted-KDE propagator estimate; the only propagator route open at
// alpha > 0. bandwidth <= 0 selects Silverman's rule on the terminal sample.
inline DensityCurve girsanov_propagator_estimate(
    double v0, const std::vector<double>& v_grid, double t, double delta, double a,
    double alpha, std::size_t n_paths, double dt, std::uint64_t seed,
    double bandwidth = 0.0, unsigned threads = default_thread_count()) {
    if (!(delta > 0))
        throw std::invalid_argument("girsanov estimate: delta must be > 0");
    if (!(alpha >= 0))
        throw std::invalid_argument("girsanov estimate: alpha must be >= 0");
    auto ens = brownian_ensemble_with_functionals(v0, t, dt, n_paths, seed, threads);
    std::vector<double> b(n_paths), w(n_paths);
    double wsum = 0;
    for (std::size_t p = 0; p < n_paths; ++p) {
        b[p] = ens.functionals[p].b_t;
        w[p] = std::exp(
            girsanov_log_weight(ens.functionals[p], v0, t, delta, a, alpha).log_weight);
        wsum += w[p];
    }
    const double bw = bandwidth > 0 ? bandwidth : silverman_bandwidth(b);
    DensityCurve c = kernel_density(b, w, bw, v_grid);
    // kernel_density normalizes by sum w; the unbiased density estimate is
    // sum_i w_i K(b_i - v) / n
    const double scale = wsum / static_cast<double>(n_paths);
    for (auto& val : c.values) val *= scale;
    const double e = ess(w);
    c.meta = {{"kind", "girsanov_propagator"},
              {"v0", v0},
              {"t", t},
              {"delta", delta},
              {"a", a},
              {"alpha", alpha},
              {"n_paths", n_paths},
              {"dt", dt},
              {"seed", seed},
              {"bandwidth", bw},
              {"sum_weight", wsum},
              {"ess", e},
              {"ess_warning", e < 0.01 * static_cast<double>(n_paths)}};
    return c;
}

}
