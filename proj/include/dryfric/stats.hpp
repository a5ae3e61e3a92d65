#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "curve.hpp"

namespace dryfric {

struct QuadratureResult {
    double value = 0;
    double error_estimate = 0;
    std::size_t panels = 0;
    bool converged = false;
};

namespace detail {

// Gauss-7 / Kronrod-15 pair, positive half. Even indices are Kronrod-only
// nodes, odd indices plus the center are the embedded Gauss-7 nodes.
inline constexpr double gk_x[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, err;
    bool operator<(const Panel& o) const { return err < o.err; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
    const double hl = 0.5 * (b - a);
    const double c = 0.5 * (a + b);
    const double fc = f(c);
    double resk = gk_wk[7] * fc;
    double resg = gk_wg[3] * fc;
    double resabs = std::fabs(resk);
    double fv1[7], fv2[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = hl * gk_x[j];
        fv1[j] = f(c - dx);
        fv2[j] = f(c + dx);
        const double fsum = fv1[j] + fv2[j];
        resk += gk_wk[j] * fsum;
        resabs += gk_wk[j] * (std::fabs(fv1[j]) + std::fabs(fv2[j]));
        if (j & 1) resg += gk_wg[(j - 1) / 2] * fsum;
    }
    const double reskh = 0.5 * resk;
    double resasc = gk_wk[7] * std::fabs(fc - reskh);
    for (int j = 0; j < 7; ++j)
        resasc += gk_wk[j] * (std::fabs(fv1[j] - reskh) + std::fabs(fv2[j] - reskh));
    resabs *= hl;
    resasc *= hl;
    double err = std::fabs((resk - resg) * hl);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double eps50 = 50.0 * std::numeric_limits<double>::epsilon();
    if (resabs > std::numeric_limits<double>::min() / eps50)
        err = std::max(err, eps50 * resabs);
    return {a, b, resk * hl, err};
}

template <class F>
QuadratureResult adapt_finite(F& f, double a, double b, double abs_tol,
                              std::size_t max_panels,
                              const std::vector<double>& splits) {
    std::vector<Panel> heap;
    std::vector<Panel> frozen;  // panels too narrow to split further
    double left = a;
    for (double s : splits)
        if (s > left && s < b) {
            heap.push_back(gk15(f, left, s));
            left = s;
        }
    heap.push_back(gk15(f, left, b));
    std::make_heap(heap.begin(), heap.end());
    std::size_t panels = heap.size();

    auto total_err = [&] {
        double e = 0;
        for (const auto& p : heap) e += p.err;
        for (const auto& p : frozen) e += p.err;
        return e;
    };

    const double wmin = 64.0 * std::numeric_limits<double>::epsilon() *
                        std::max({std::fabs(a), std::fabs(b), 1.0});
    while (!heap.empty() && total_err() > abs_tol && panels < max_panels) {
        std::pop_heap(heap.begin(), heap.end());
        Panel worst = heap.back();
        heap.pop_back();
        if (worst.b - worst.a <= wmin) {
            frozen.push_back(worst);
            continue;
        }
        const double m = 0.5 * (worst.a + worst.b);
        heap.push_back(gk15(f, worst.a, m));
        std::push_heap(heap.begin(), heap.end());
        heap.push_back(gk15(f, m, worst.b));
        std::push_heap(heap.begin(), heap.end());
        ++panels;
    }

    QuadratureResult r;
    r.panels = panels;
    // accumulate smallest-first to limit roundoff
    std::vector<double> vals;
    for (const auto& p : heap) {
        r.error_estimate += p.err;
        vals.push_back(p.value);
    }
    for (const auto& p : frozen) {
        r.error_estimate += p.err;
        vals.push_back(p.value);
    }
    std::sort(vals.begin(), vals.end(),
              [](double x, double y) { return std::fabs(x) < std::fabs(y); });
    for (double v : vals) r.value += v;
    r.converged = r.error_estimate <= abs_tol;
    return r;
}

}  // namespace detail

// Adaptive Gauss-Kronrod integration. Endpoints may be +-infinity; the
// semi-infinite map x = lo + u/(1-u) (and its mirror) is applied rather than
// truncating, so far tails are still seen. Non-finite integrand values under
// the map (0 * inf in an underflowed tail) count as zero.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double lo, double hi,
                                    double abs_tol = 1e-10,
                                    std::size_t max_panels = 10000,
                                    const std::vector<double>& splits = {}) {
    if (!(lo < hi)) throw std::invalid_argument("integrate_adaptive: lo < hi required");
    const bool lo_inf = std::isinf(lo), hi_inf = std::isinf(hi);

    if (!splits.empty()) {
        std::vector<double> s(splits);
        std::sort(s.begin(), s.end());
        s.erase(std::unique(s.begin(), s.end()), s.end());
        s.erase(std::remove_if(s.begin(), s.end(),
                               [&](double x) { return !(x > lo && x < hi); }),
                s.end());
        if (!lo_inf && !hi_inf)
            return detail::adapt_finite(f, lo, hi, abs_tol, max_panels, s);
        // infinite ends: integrate segment by segment
        QuadratureResult total;
        total.converged = true;
        std::vector<double> cuts;
        cuts.push_back(lo);
        for (double x : s) cuts.push_back(x);
        cuts.push_back(hi);
        const std::size_t nseg = cuts.size() - 1;
        for (std::size_t i = 0; i < nseg; ++i) {
            auto r = integrate_adaptive(f, cuts[i], cuts[i + 1],
                                        abs_tol / static_cast<double>(nseg),
                                        std::max<std::size_t>(max_panels / nseg, 100));
            total.value += r.value;
            total.error_estimate += r.error_estimate;
            total.panels += r.panels;
            total.converged = total.converged && r.converged;
        }
        return total;
    }

    if (lo_inf && hi_inf) {
        auto r1 = integrate_adaptive(f, -std::numeric_limits<double>::infinity(), 0.0,
                                     abs_tol / 2, max_panels / 2);
        auto r2 = integrate_adaptive(f, 0.0, std::numeric_limits<double>::infinity(),
                                     abs_tol / 2, max_panels / 2);
        return {r1.value + r2.value, r1.error_estimate + r2.error_estimate,
                r1.panels + r2.panels, r1.converged && r2.converged};
    }
    if (hi_inf) {
        auto g = [&f, lo](double u) {
            const double d = 1.0 - u;
            const double v = f(lo + u / d) / (d * d);
            return std::isfinite(v) ? v : 0.0;
        };
        return detail::adapt_finite(g, 0.0, 1.0, abs_tol, max_panels, {});
    }
    if (lo_inf) {
        auto g = [&f, hi](double u) {
            const double d = 1.0 - u;
            const double v = f(hi - u / d) / (d * d);
            return std::isfinite(v) ? v : 0.0;
        };
        return detail::adapt_finite(g, 0.0, 1.0, abs_tol, max_panels, {});
    }
    return detail::adapt_finite(f, lo, hi, abs_tol, max_panels, {});
}

// Fixed composite Simpson rule; the independent cross-check for the adaptive
// integrator (no shared code path beyond the integrand itself).
template <class F>
double integrate_simpson(F&& f, double lo, double hi, std::size_t n = 20000) {
    if (n % 2) ++n;
    const double h = (hi - lo) / static_cast<double>(n);
    double s = f(lo) + f(hi);
    for (std::size_t i = 1; i < n; ++i)
        s += f(lo + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

class Ecdf {
    std::vector<double> xs_;

  public:
    explicit Ecdf(std::vector<double> samples) : xs_(std::move(samples)) {
        if (xs_.empty()) throw std::invalid_argument("Ecdf: empty sample");
        std::sort(xs_.begin(), xs_.end());
    }
    std::size_t size() const { return xs_.size(); }
    const std::vector<double>& samples() const { return xs_; }
    // right-continuous: fraction of samples <= x
    double operator()(double x) const {
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        return static_cast<double>(it - xs_.begin()) / static_cast<double>(xs_.size());
    }
    double quantile(double p) const {
        if (p <= 0) return xs_.front();
        if (p >= 1) return xs_.back();
        auto idx = static_cast<std::size_t>(p * static_cast<double>(xs_.size()));
        if (idx >= xs_.size()) idx = xs_.size() - 1;
        return xs_[idx];
    }
};

// one-sample KS against a continuous cdf, both one-sided gaps
template <class CDF>
double ks_distance(const Ecdf& e, CDF&& cdf) {
    const auto& x = e.samples();
    const double n = static_cast<double>(x.size());
    double d = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double F = cdf(x[i]);
        d = std::max(d, (static_cast<double>(i) + 1.0) / n - F);
        d = std::max(d, F - static_cast<double>(i) / n);
    }
    return d;
}

inline double ks_distance_two(const Ecdf& e1, const Ecdf& e2) {
    const auto& a = e1.samples();
    const auto& b = e2.samples();
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double d = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        double x = (j >= b.size() || (i < a.size() && a[i] <= b[j])) ? a[i] : b[j];
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na -
                                  static_cast<double>(j) / nb));
    }
    return d;
}

// asymptotic KS null quantile c/sqrt(n); c = 1.95 corresponds to p = 0.001
inline double ks_null_quantile(std::size_t n, double c = 1.95) {
    return c / std::sqrt(static_cast<double>(n));
}

inline double ess(const std::vector<double>& weights) {
    double s = 0, s2 = 0;
    for (double w : weights) {
        s += w;
        s2 += w * w;
    }
    if (s2 == 0) throw std::invalid_argument("ess: all weights zero");
    return s * s / s2;
}

inline double silverman_bandwidth(const std::vector<double>& samples) {
    if (samples.size() < 2) throw std::invalid_argument("bandwidth: need >= 2 samples");
    std::vector<double> s(samples);
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double mean = 0;
    for (double x : s) mean += x;
    mean /= n;
    double var = 0;
    for (double x : s) var += (x - mean) * (x - mean);
    var /= (n - 1);
    const double q1 = s[static_cast<std::size_t>(0.25 * n)];
    const double q3 = s[static_cast<std::size_t>(0.75 * n)];
    const double spread = std::min(std::sqrt(var), (q3 - q1) / 1.349);
    return 0.9 * spread * std::pow(n, -0.2);
}

// weighted Gaussian KDE normalized by the total weight; kernel truncated at
// 8 bandwidths (relative mass lost ~1e-15)
inline DensityCurve kernel_density(const std::vector<double>& samples,
                                   const std::vector<double>& weights,
                                   double bandwidth,
                                   const std::vector<double>& grid) {
    if (!(bandwidth > 0)) throw std::invalid_argument("kernel_density: bandwidth <= 0");
    if (samples.empty()) throw std::invalid_argument("kernel_density: empty sample");
    if (!weights.empty() && weights.size() != samples.size())
        throw std::invalid_argument("kernel_density: weight/sample size mismatch");
    double wsum = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        if (w < 0) throw std::invalid_argument("kernel_density: negative weight");
        wsum += w;
    }
    if (wsum <= 0) throw std::invalid_argument("kernel_density: all weights zero");

    DensityCurve out;
    out.grid = grid;
    out.values.assign(grid.size(), 0.0);
    const double cut = 8.0 * bandwidth;
    const double norm = 1.0 / (wsum * bandwidth * std::sqrt(2.0 * std::numbers::pi));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        if (w == 0) continue;
        const double x = samples[i];
        auto lo = std::lower_bound(grid.begin(), grid.end(), x - cut);
        auto hi = std::upper_bound(grid.begin(), grid.end(), x + cut);
        for (auto it = lo; it != hi; ++it) {
            const double u = (*it - x) / bandwidth;
            out.values[static_cast<std::size_t>(it - grid.begin())] +=
                w * norm * std::exp(-0.5 * u * u);
        }
    }
    out.meta = {{"kind", "kde"}, {"bandwidth", bandwidth}, {"n", samples.size()}};
    return out;
}

namespace detail {

inline double gamma_p_series(double a, double x) {
    double term = 1.0 / a, sum = term;
    for (int n = 1; n < 500; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_cf(double a, double x) {
    // Lentz continued fraction for Q(a,x), x > a+1
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace detail

// regularized upper incomplete gamma Q(a,x)
inline double gamma_q(double a, double x) {
    if (!(a > 0) || x < 0) throw std::invalid_argument("gamma_q: need a > 0, x >= 0");
    if (x == 0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_cf(a, x);
}

// P(chi2_k > x)
inline double chi2_tail(double x, double dof) { return gamma_q(0.5 * dof, 0.5 * x); }

// inverse standard normal cdf: Acklam's rational approximation plus one
// Halley step against erfc, good to ~1e-15
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("normal_quantile: p must be in (0,1)");
    static constexpr double A[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                    -2.759285104469687e+02, 1.383577518672690e+02,
                                    -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double B[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
    static constexpr double C[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                    -2.400758277161838e+00, -2.549732539343734e+00,
                                    4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double D[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                    2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
            ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
    } else if (p > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5]) /
            ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0);
    } else {
        const double q = p - 0.5, r = q * q;
        x = (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q /
            (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

inline double sample_mean(const std::vector<double>& x) {
    double s = 0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double sample_variance(const std::vector<double>& x) {
    const double m = sample_mean(x);
    double s = 0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

// k-th moment of a curve about `center` by trapezoid
inline double curve_moment(const DensityCurve& c, int k, double center = 0.0) {
    DensityCurve m;
    m.grid = c.grid;
    m.values.resize(c.values.size());
    for (std::size_t i = 0; i < c.grid.size(); ++i)
        m.values[i] = c.values[i] * std::pow(c.grid[i] - center, k);
    return m.trapezoid();
}

}
