#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "curve.hpp"
#include "model.hpp"

namespace dryfric {

inline constexpr double sqrt2pi = 2.5066282746310005;

// G(u) = P(Z > u) for standard normal Z
inline double gaussian_tail(double u) {
    return 0.5 * std::erfc(u / std::numbers::sqrt2);
}

inline double gaussian_cdf(double v) {
    return 0.5 * std::erfc(-v / std::numbers::sqrt2);
}

// log G(u), stable far into both tails (erfc underflows past u ~ 37.6)
inline double log_gaussian_tail(double u) {
    if (u > 30.0) {
        const double u2 = u * u;
        const double series = -1.0 / u2 + 3.0 / (u2 * u2) - 15.0 / (u2 * u2 * u2) +
                              105.0 / (u2 * u2 * u2 * u2);
        return -0.5 * u2 - std::log(u * sqrt2pi) + std::log1p(series);
    }
    if (u < -30.0) return std::log1p(-gaussian_tail(-u));
    return std::log(0.5 * std::erfc(u / std::numbers::sqrt2));
}

// exp(x^2) erfc(x); the direct product is fine up to x ~ 26, asymptotic beyond
inline double erfcx(double x) {
    if (x >= 26.0) {
        const double z = 1.0 / (2.0 * x * x);
        // 1 - z + 3z^2 - 15z^3 + 105z^4, truncation < 1e-13 for x >= 26
        const double series = 1.0 + z * (-1.0 + z * (3.0 + z * (-15.0 + z * 105.0)));
        return series / (x * std::sqrt(std::numbers::pi));
    }
    if (x <= -26.0)
        throw std::overflow_error("erfcx: argument too negative, exp(x^2) overflows");
    return std::exp(x * x) * std::erfc(x);
}

inline double gaussian_kernel(double t, double u) {
    if (!(t > 0)) throw std::invalid_argument("gaussian_kernel: t must be > 0");
    return std::exp(-u * u / (2.0 * t)) / (sqrt2pi * std::sqrt(t));
}

inline double log_gaussian_kernel(double t, double u) {
    if (!(t > 0)) throw std::invalid_argument("gaussian_kernel: t must be > 0");
    return -u * u / (2.0 * t) - std::log(sqrt2pi) - 0.5 * std::log(t);
}

struct Potential {
    double tau = 1.0;
    double y = 0.0;
};

inline double potential_value(const Potential& p, double v) {
    if (!(p.tau > 0)) throw std::invalid_argument("potential: tau must be > 0");
    return (v - p.y) * (v - p.y) / (2.0 * p.tau) + std::fabs(v);
}

inline double potential_minimizer(const Potential& p) {
    if (!(p.tau > 0)) throw std::invalid_argument("potential: tau must be > 0");
    if (std::fabs(p.y) <= p.tau) return 0.0;
    return p.y - sgn(p.y) * p.tau;
}

inline double stationary_log_unnormalized(const ReducedParams& r, double v) {
    r.check();
    if (!r.tau || !r.y)
        throw std::invalid_argument("stationary: tau and y required (alpha > 0)");
    const double d = v - *r.y;
    return -(d * d / (2.0 * *r.tau) + std::fabs(v)) / r.nu;
}

// log N(nu,tau,y), N = sqrt(2 pi tau nu) [ e^{(tau-2y)/(2nu)} G((tau-y)/s)
//                                        + e^{(tau+2y)/(2nu)} G((tau+y)/s) ],
// s = sqrt(tau nu). Both terms can overflow alone at small nu, so combine
// in log domain.
inline double stationary_log_normalizer(const ReducedParams& r) {
    r.check();
    if (!r.tau || !r.y)
        throw std::invalid_argument("stationary: tau and y required (alpha > 0)");
    const double tau = *r.tau, y = *r.y, nu = r.nu;
    const double s = std::sqrt(tau * nu);
    const double t1 = (tau - 2.0 * y) / (2.0 * nu) + log_gaussian_tail((tau - y) / s);
    const double t2 = (tau + 2.0 * y) / (2.0 * nu) + log_gaussian_tail((tau + y) / s);
    const double hi = std::max(t1, t2), lo = std::min(t1, t2);
    return 0.5 * std::log(2.0 * std::numbers::pi * tau * nu) + hi +
           std::log1p(std::exp(lo - hi));
}

inline double stationary_normalizer(const ReducedParams& r) {
    const double logn = stationary_log_normalizer(r);
    // the linear-scale value leaves double range long before the log form does
    if (std::fabs(logn) > 700.0)
        throw std::overflow_error("stationary_normalizer: out of double range, use the log form");
    return std::exp(logn);
}

inline double stationary_pdf_value(const ReducedParams& r, double v) {
    return std::exp(stationary_log_unnormalized(r, v) - stationary_log_normalizer(r));
}

// closed-form stationary cdf from the same Gaussian-tail pieces
inline double stationary_cdf(const ReducedParams& r, double v) {
    r.check();
    if (!r.tau || !r.y)
        throw std::invalid_argument("stationary: tau and y required (alpha > 0)");
    const double tau = *r.tau, y = *r.y, nu = r.nu;
    const double s = std::sqrt(tau * nu);
    const double logn = stationary_log_normalizer(r);
    const double logpref = 0.5 * std::log(2.0 * std::numbers::pi * tau * nu);
    if (v <= 0) {
        // integral of the left branch up to v
        const double la = (tau + 2.0 * y) / (2.0 * nu) +
                          log_gaussian_tail((y + tau - v) / s);
        return std::exp(logpref + la - logn);
    }
    // 1 - survival via the right branch
    const double ls = (tau - 2.0 * y) / (2.0 * nu) +
                      log_gaussian_tail((v + tau - y) / s);
    return 1.0 - std::exp(logpref + ls - logn);
}

inline DensityCurve stationary_pdf(const ReducedParams& r,
                                   const std::vector<double>& grid) {
    const double logn = stationary_log_normalizer(r);
    DensityCurve c;
    c.grid = grid;
    c.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        c.values[i] = std::exp(stationary_log_unnormalized(r, grid[i]) - logn);
    c.meta = {{"kind", "stationary_pdf"},
              {"nu", r.nu},
              {"tau", *r.tau},
              {"y", *r.y},
              {"w", r.w},
              {"log_normalizer", logn}};
    c.check();
    return c;
}

// --- D -> 0 limit laws (scaled variables) ---

// stuck regime, x = v/nu: f(x) = ((1-w^2)/2) exp(-|x| + w x), |w| < 1
inline double limit_pdf_stuck_value(double w, double x) {
    if (!(std::fabs(w) < 1)) throw std::invalid_argument("stuck limit: need |w| < 1");
    return 0.5 * (1.0 - w * w) * std::exp(-std::fabs(x) + w * x);
}

inline double limit_cdf_stuck(double w, double x) {
    if (!(std::fabs(w) < 1)) throw std::invalid_argument("stuck limit: need |w| < 1");
    if (x < 0) return 0.5 * (1.0 - w) * std::exp((1.0 + w) * x);
    return 1.0 - 0.5 * (1.0 + w) * std::exp(-(1.0 - w) * x);
}

inline DensityCurve limit_pdf_stuck(double w, const std::vector<double>& grid) {
    DensityCurve c;
    c.grid = grid;
    c.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        c.values[i] = limit_pdf_stuck_value(w, grid[i]);
    c.meta = {{"kind", "limit_pdf_stuck"}, {"w", w}, {"scaled_variable", "v/nu"}};
    c.check();
    return c;
}

// partly stuck (|a| = delta). side = sign of a*v selects the branch:
// side < 0: 2 exp(-2|x|) in x = v/nu on {a v < 0};
// side > 0: half-Gaussian (2/sqrt(2 pi tau)) exp(-x^2/(2 tau)) in x = v/sqrt(nu).
// Each branch is a probability density on its own half-line; grid points on
// the opposite side get value 0.
inline DensityCurve limit_pdf_partly_stuck(int side, double tau,
                                           const std::vector<double>& grid) {
    if (side == 0) throw std::invalid_argument("partly stuck limit: side must be +-1");
    if (side > 0 && !(tau > 0))
        throw std::invalid_argument("partly stuck limit: tau must be > 0 on the "
                                    "Gaussian side");
    DensityCurve c;
    c.grid = grid;
    c.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid[i];
        const bool on_side = side < 0 ? x <= 0 : x >= 0;
        if (!on_side) {
            c.values[i] = 0.0;
        } else if (side < 0) {
            c.values[i] = 2.0 * std::exp(-2.0 * std::fabs(x));
        } else {
            c.values[i] = 2.0 / (sqrt2pi * std::sqrt(tau)) *
                          std::exp(-x * x / (2.0 * tau));
        }
    }
    c.meta = {{"kind", "limit_pdf_partly_stuck"},
              {"side", side},
              {"scaled_variable", side < 0 ? "v/nu" : "v/sqrt(nu)"}};
    if (side > 0) c.meta["tau"] = tau;
    c.check();
    return c;
}

// viscous regime: (v - (y - sgn(y) tau)) / sqrt(nu) -> N(0, tau)
inline DensityCurve limit_pdf_viscous(double tau, const std::vector<double>& grid) {
    if (!(tau > 0)) throw std::invalid_argument("viscous limit: tau must be > 0");
    DensityCurve c;
    c.grid = grid;
    c.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        c.values[i] = gaussian_kernel(tau, grid[i]);
    c.meta = {{"kind", "limit_pdf_viscous"},
              {"tau", tau},
              {"scaled_variable", "(v - (y - sgn(y) tau))/sqrt(nu)"}};
    c.check();
    return c;
}

// --- default grid policies ---
//
// Base resolution is 2001 points with truncated tail mass below ~1e-6. The
// slope kink at v = 0 leaves an irreducible trapezoid residue of
// h^2 |f'(0+) - f'(0-)| / 12, so when a default grid is requested (points = 0)
// the count grows past the base, capped at 200001, to keep curve normalization
// within grid_tolerance. Explicit point counts are honored as given.

inline constexpr double grid_tolerance = 2e-4;

namespace detail {

// step matching the baseline residue of a unit slope jump at 2001 points, +-40
inline std::size_t kink_points(double half, double slope_jump, std::size_t points) {
    if (points != 0) return points;
    if (!(slope_jump > 0)) return 2001;
    const double h = 0.04 / std::sqrt(slope_jump);
    const double n = 2.0 * std::ceil(half / h) + 1.0;
    return static_cast<std::size_t>(std::clamp(n, 2001.0, 200001.0));
}

}  // namespace detail

inline std::vector<double> stationary_default_grid(const ReducedParams& r,
                                                   std::size_t points = 0) {
    if (!r.tau || !r.y)
        throw std::invalid_argument("stationary: tau and y required (alpha > 0)");
    const double center = potential_minimizer({*r.tau, *r.y});
    const double half = 12.0 * (std::sqrt(*r.tau * r.nu) + r.nu);
    const double jump = 2.0 * stationary_pdf_value(r, 0.0) / r.nu;
    return linspace(center - half, center + half,
                    detail::kink_points(half, jump, points));
}

// the stuck-law tail scale is 1/(1 - |w|), so widen past +-40 near |w| = 1
inline std::vector<double> stuck_default_grid(double w, std::size_t points = 0) {
    if (!(std::fabs(w) < 1)) throw std::invalid_argument("stuck limit: need |w| < 1");
    const double half = std::max(40.0, 14.0 / (1.0 - std::fabs(w)));
    return linspace(-half, half, detail::kink_points(half, 1.0 - w * w, points));
}

inline std::vector<double> viscous_default_grid(double tau, std::size_t points = 2001) {
    if (!(tau > 0)) throw std::invalid_argument("viscous limit: tau must be > 0");
    return linspace(-12.0 * std::sqrt(tau), 12.0 * std::sqrt(tau), points);
}

}
