#pragma once
// Time-dependent transition densities at unit diffusion: the driftless
// propagator in closed form, the constant-force propagator by quadrature over
// the Brownian local-time/occupation-time laws, and the detailed-balance and
// semigroup identities as first-class checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <dryfric/analytic.hpp>
#include <dryfric/curve.hpp>
#include <dryfric/stats.hpp>

namespace dryfric {

struct PropagatorQuery {
    double v0 = 0.0;
    double v = 0.0;
    double t = 1.0;
    double delta = 1.0;
    double a = 0.0;

    void check() const {
        if (!(t > 0)) throw std::invalid_argument("PropagatorQuery: t must be > 0");
        if (!(delta > 0)) throw std::invalid_argument("PropagatorQuery: delta must be > 0");
    }
};

// density in s of the first passage to level |v| by a standard Brownian motion
inline double h_kernel(double s, double v) {
    if (!(s > 0)) throw std::invalid_argument("h_kernel: s must be > 0");
    return std::fabs(v) / std::sqrt(2.0 * std::numbers::pi * s * s * s) *
           std::exp(-v * v / (2.0 * s));
}

// mass of the event {no zero hit by t} at terminal value b > 0, start v0 >= 0
inline double atom_weight(double v0, double b, double t) {
    if (!(v0 >= 0)) throw std::invalid_argument("atom_weight: v0 must be >= 0");
    if (!(b > 0)) throw std::invalid_argument("atom_weight: b must be > 0");
    if (!(t > 0)) throw std::invalid_argument("atom_weight: t must be > 0");
    return gaussian_kernel(t, b - v0) - gaussian_kernel(t, b + v0);
}

// continuous part of the (B_t, L_t) law from v0 >= 0; both sign branches share
// the argument 2l + v0 + |b|, so the density is 2 h(t, 2l + v0 + |b|)
inline double joint_density_bl(double v0, double b, double l, double t) {
    if (!(v0 >= 0)) throw std::invalid_argument("joint_density_bl: v0 must be >= 0");
    if (l < 0) throw std::invalid_argument("joint_density_bl: l must be >= 0");
    return 2.0 * h_kernel(t, 2.0 * l + v0 + std::fabs(b));
}

// (B_t, L_t, Gamma_t) law from v0 >= 0 as a density in all three variables,
// where occupation is the time spent on the positive side
inline double trivariate_density(double v0, double b, double l, double occupation,
                                 double t) {
    if (!(v0 >= 0)) throw std::invalid_argument("trivariate_density: v0 must be >= 0");
    if (l < 0) throw std::invalid_argument("trivariate_density: l must be >= 0");
    if (!(occupation > 0 && occupation < t))
        throw std::invalid_argument("trivariate_density: occupation must lie in (0, t)");
    if (b < 0) return 2.0 * h_kernel(occupation, l + v0) * h_kernel(t - occupation, l - b);
    return 2.0 * h_kernel(t - occupation, l) * h_kernel(occupation, l + b + v0);
}

// exact mass of the (B_t, L_t) law from v0 = 0 on a rectangle [b1,b2] x [l1,l2]
// with the b-range on one side of 0; infinite b2 or l2 are allowed
inline double joint_bl_bin_mass(double b1, double b2, double l1, double l2, double t) {
    if (!(t > 0)) throw std::invalid_argument("joint_bl_bin_mass: t must be > 0");
    if (!(b1 < b2) || !(l1 < l2) || l1 < 0)
        throw std::invalid_argument("joint_bl_bin_mass: need b1 < b2, 0 <= l1 < l2");
    if (b2 <= 0) return joint_bl_bin_mass(-b2, -b1, l1, l2, t);
    if (b1 < 0)
        throw std::invalid_argument("joint_bl_bin_mass: b-range must not straddle 0");
    const double st = std::sqrt(t);
    auto slab = [&](double l) {
        return gaussian_cdf((b2 + 2.0 * l) / st) - gaussian_cdf((b1 + 2.0 * l) / st);
    };
    return slab(l1) - slab(l2);
}

// driftless propagator (alpha = a = 0): exact density of V_t given v0, valid
// for all real v, v0 through the mirror identity p(v,t|v0) = p(-v,t|-v0)
inline double propagator_free(const PropagatorQuery& q) {
    q.check();
    const double av = std::fabs(q.v), av0 = std::fabs(q.v0);
    const double d = q.delta, t = q.t;
    const double lump = std::exp(d * (av0 - av) - d * d * t / 2.0 +
                                 log_gaussian_kernel(t, q.v - q.v0));
    const double relaxed = d * std::exp(-2.0 * d * av) *
                           gaussian_cdf((d * t - (av + av0)) / std::sqrt(t));
    return lump + relaxed;
}

namespace detail {

// exp(c) * Phi(z) with the product kept in log space; c can be large positive
// when z is far negative
inline double exp_times_cdf(double c, double z) {
    return std::exp(c + log_gaussian_tail(-z));
}

}  // namespace detail

// closed-form CDF of the driftless propagator: P(V_t <= q.v | q.v0)
inline double propagator_free_cdf(const PropagatorQuery& q) {
    q.check();
    if (q.v0 < 0) return 1.0 - propagator_free_cdf({-q.v0, -q.v, q.t, q.delta});
    const double x = q.v, v0 = q.v0, d = q.delta, t = q.t;
    const double st = std::sqrt(t), xm = std::min(x, 0.0);

    // traveling lump, integrated piecewise around the kink
    double acc = detail::exp_times_cdf(2.0 * d * v0, (xm - v0 - d * t) / st);
    if (x > 0)
        acc += gaussian_cdf((x - v0 + d * t) / st) - gaussian_cdf((-v0 + d * t) / st);

    // relaxed component on v <= xm
    acc += 0.5 * detail::exp_times_cdf(2.0 * d * xm, (xm + d * t - v0) / st) -
           0.5 * detail::exp_times_cdf(2.0 * d * v0, (xm - d * t - v0) / st);
    if (x > 0)
        acc += 0.5 * detail::exp_times_cdf(2.0 * d * v0, (-d * t - x - v0) / st) -
               0.5 * detail::exp_times_cdf(2.0 * d * v0, (-d * t - v0) / st) -
               0.5 * detail::exp_times_cdf(-2.0 * d * x, (d * t - x - v0) / st) +
               0.5 * gaussian_cdf((d * t - v0) / st);
    return std::clamp(acc, 0.0, 1.0);
}

// |p(v, s+t | v0) - integral of p(v, t | u) p(u, s | v0) du|
inline double chapman_kolmogorov_residual(double v0, double v, double s, double t,
                                          double delta) {
    if (!(s > 0) || !(t > 0))
        throw std::invalid_argument("chapman_kolmogorov_residual: s, t must be > 0");
    const double direct = propagator_free({v0, v, s + t, delta});
    auto f = [&](double u) {
        return propagator_free({u, v, t, delta}) * propagator_free({v0, u, s, delta});
    };
    const double inf = std::numeric_limits<double>::infinity();
    auto q = integrate_adaptive(f, -inf, inf, 1e-9, 20000, {0.0, v0, v});
    return std::fabs(direct - q.value);
}

struct ForcedDensity {
    double value = 0.0;
    double error_estimate = 0.0;
    std::size_t panels = 0;
    bool converged = false;
};

namespace detail {

// inner l-integral of e^{2 delta l} against the trivariate law at fixed
// occupation, in closed form through the half-Gaussian moments
//   M_k = integral_0^inf l^k exp(-P l^2 + Q l) dl.
// The peak factor e^{r^2} inside erfcx(-r) is split off for r > 25 so the
// local-time tilt cannot overflow before the global prefactor cancels it.
// Returns the log of the integral; p and m are the kernel shifts.
inline double log_forced_inner(double p, double m, double delta, double tau,
                               double t) {
    const double tneg = t - tau;
    const double P = 0.5 * (1.0 / tau + 1.0 / tneg);
    const double Q = 2.0 * delta - p / tau - m / tneg;
    const double r = 0.5 * Q / std::sqrt(P);
    const double kappa = r > 25.0 ? r * r : 0.0;
    const double m0 = 0.5 * std::sqrt(std::numbers::pi / P) *
                      (r > 25.0 ? 2.0 : erfcx(-r));
    const double m1 = std::exp(-kappa) / (2.0 * P) + 0.5 * Q / P * m0;
    const double m2 = m0 / (2.0 * P) + 0.5 * Q / P * m1;
    const double poly = m2 + (p + m) * m1 + p * m * m0;
    if (!(poly > 0)) return -std::numeric_limits<double>::infinity();
    const double logc = -p * p / (2.0 * tau) - m * m / (2.0 * tneg) -
                        std::log(2.0 * std::numbers::pi) - 1.5 * std::log(tau * tneg);
    return logc + kappa + std::log(2.0 * poly);
}

}  // namespace detail

// constant-force propagator (alpha = 0, a != 0 allowed): occupation-time
// quadrature with the l-integral in closed form. v0 < 0 is handled by the
// mirror (v, v0, a) -> (-v, -v0, -a).
inline ForcedDensity propagator_forced_detail(const PropagatorQuery& q,
                                              double abs_tol = 1e-10,
                                              std::size_t max_panels = 10000) {
    q.check();
    if (q.v0 < 0) return propagator_forced_detail({-q.v0, -q.v, q.t, q.delta, -q.a},
                                                  abs_tol, max_panels);
    const double v0 = q.v0, v = q.v, t = q.t, d = q.delta, a = q.a;
    const double log_pref =
        d * (std::fabs(q.v0) - std::fabs(v)) + a * (v0 - v) - (d - a) * (d - a) * t / 2.0;
    const double p = v >= 0 ? v + v0 : v0;
    const double m = v >= 0 ? 0.0 : -v;

    // occupation integral under the arcsine map tau = t sin^2(theta), which
    // flattens the inverse-sqrt behavior at both endpoints
    auto g = [&](double theta) {
        const double s = std::sin(theta), c = std::cos(theta);
        const double tau = t * s * s;
        if (!(tau > 0) || !(tau < t)) return 0.0;
        const double log_val = log_pref - 2.0 * a * d * tau +
                               detail::log_forced_inner(p, m, d, tau, t);
        const double w = std::exp(log_val) * 2.0 * t * s * c;
        return std::isfinite(w) ? w : 0.0;
    };
    auto r = integrate_adaptive(g, 0.0, 0.5 * std::numbers::pi, abs_tol, max_panels);

    double atom = 0.0;
    if (v > 0 && v0 > 0)
        atom = std::exp(log_pref - 2.0 * a * d * t) * atom_weight(v0, v, t);
    return {r.value + atom, r.error_estimate, r.panels, r.converged};
}

inline double propagator_forced(const PropagatorQuery& q) {
    auto r = propagator_forced_detail(q);
    if (!r.converged)
        throw std::runtime_error(
            "propagator_forced: quadrature did not converge, error estimate " +
            std::to_string(r.error_estimate));
    return r.value;
}

// numerical (l, occupation) marginalization of the trivariate law plus the
// atom. The first-passage convolution identity makes it equal gamma_t(b - v0)
// exactly, so the comparison is a pure consistency gate on the formulas.
inline QuadratureResult trivariate_marginal_b(double v0, double b, double t,
                                              double abs_tol = 1e-8) {
    const double inf = std::numeric_limits<double>::infinity();
    // the l-integral at fixed tau scales like 1/sqrt of the shorter leg, an
    // inverse square root endpoint singularity in tau; the arcsine map
    // tau = t sin^2(theta) supplies a weight that cancels it, and the inner
    // integral runs in l rescaled by the shorter leg so the kernel spike
    // stays resolved, with the tolerance loosened by the same 1/s growth
    auto outer = [&](double theta) {
        const double si = std::sin(theta), co = std::cos(theta);
        const double tau = t * si * si;
        if (!(tau > 0) || !(tau < t)) return 0.0;
        const double s = std::sqrt(std::min(tau, t - tau));
        auto inner = [&](double x) {
            return s * trivariate_density(v0, b, s * x, tau, t);
        };
        const double inner_tol = abs_tol * 1e-3 / std::min(1.0, s);
        const double val = integrate_adaptive(inner, 0.0, inf, inner_tol, 2000).value;
        return val * 2.0 * t * si * co;
    };
    auto r = integrate_adaptive(outer, 0.0, std::asin(1.0), abs_tol, 4000);
    if (b > 0 && v0 > 0) r.value += atom_weight(v0, b, t);
    return r;
}

// --- curves ---

inline DensityCurve propagator_free_curve(double v0, double t, double delta,
                                          const std::vector<double>& grid) {
    DensityCurve c;
    c.grid = grid;
    c.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        c.values[i] = propagator_free({v0, grid[i], t, delta});
    c.meta = {{"kind", "propagator_free"}, {"v0", v0}, {"t", t}, {"delta", delta}};
    c.check();
    return c;
}

inline DensityCurve propagator_forced_curve(double v0, double t, double delta,
                                            double a, const std::vector<double>& grid,
                                            double abs_tol = 1e-10) {
    DensityCurve c;
    c.grid = grid;
    c.values.resize(grid.size());
    double err = 0.0;
    std::size_t panels = 0;
    bool converged = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        auto r = propagator_forced_detail({v0, grid[i], t, delta, a}, abs_tol);
        c.values[i] = r.value;
        err = std::max(err, r.error_estimate);
        panels = std::max(panels, r.panels);
        converged = converged && r.converged;
    }
    c.meta = {{"kind", "propagator_forced"}, {"v0", v0},   {"t", t},
              {"delta", delta},              {"a", a},     {"panels_used", panels},
              {"error_estimate", err},       {"fallback_used", false},
              {"converged", converged}};
    c.check();
    return c;
}

// spans the traveling lump from v0 and the relaxed component around 0; the
// kink at v = 0 sets the point count as in the stationary grids
inline std::vector<double> propagator_default_grid(double v0, double t, double delta,
                                                   std::size_t points = 0) {
    if (!(t > 0) || !(delta > 0))
        throw std::invalid_argument("propagator_default_grid: t, delta must be > 0");
    const double pad = 12.0 * std::sqrt(t) + 7.0 / delta;
    const double lo = std::min(0.0, v0) - pad, hi = std::max(0.0, v0) + pad;
    const double jump = 2.0 * delta * (propagator_free({v0, 0.0, t, delta}) + delta);
    return linspace(lo, hi, detail::kink_points(0.5 * (hi - lo), jump, points));
}

}  // namespace dryfric
