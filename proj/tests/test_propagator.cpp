#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <dryfric/propagator.hpp>
#include <dryfric/stats.hpp>

using namespace dryfric;

namespace {

const double inf = std::numeric_limits<double>::infinity();

// brute-force oracle for the constant-force propagator: iterated quadrature of
// the tilted trivariate law with no analytic inner step, plus the atom
double forced_raw(double v0, double v, double t, double delta, double a) {
    if (v0 < 0) return forced_raw(-v0, -v, t, delta, -a);
    const double log_pref = delta * (std::fabs(v0) - std::fabs(v)) + a * (v0 - v) -
                            (delta - a) * (delta - a) * t / 2.0;
    // arcsine map in tau cancels the inverse square root endpoint growth of
    // the inner integral; l is rescaled by the shorter leg to keep the kernel
    // spike resolved, with the inner tolerance loosened by the same factor
    auto outer = [&](double theta) {
        const double si = std::sin(theta), co = std::cos(theta);
        const double tau = t * si * si;
        if (!(tau > 0) || !(tau < t)) return 0.0;
        const double s = std::sqrt(std::min(tau, t - tau));
        auto inner = [&](double x) {
            const double l = s * x;
            return s * std::exp(2.0 * delta * l) * trivariate_density(v0, v, l, tau, t);
        };
        const double tol = 1e-13 / std::min(1.0, s);
        return std::exp(-2.0 * a * delta * tau) *
               integrate_adaptive(inner, 0.0, inf, tol, 4000).value * 2.0 * t * si * co;
    };
    double val = integrate_adaptive(outer, 0.0, std::asin(1.0), 1e-10, 4000).value;
    if (v > 0 && v0 > 0) val += std::exp(-2.0 * a * delta * t) * atom_weight(v0, v, t);
    return std::exp(log_pref) * val;
}

double free_mean(double v0, double t, double delta) {
    auto f = [&](double v) { return v * propagator_free({v0, v, t, delta}); };
    return integrate_adaptive(f, -inf, inf, 1e-11, 40000, {0.0, v0}).value;
}

double forced_mean(double v0, double t, double delta, double a) {
    auto f = [&](double v) {
        return v * propagator_forced_detail({v0, v, t, delta, a}, 1e-9).value;
    };
    return integrate_adaptive(f, -10.0 - std::fabs(v0), 10.0 + std::fabs(v0), 1e-7,
                              4000, {0.0, v0})
        .value;
}

}  // namespace

TEST_CASE("first passage kernel") {
    CHECK_THAT(h_kernel(1.0, 1.0),
               Catch::Matchers::WithinRel(0.24197072451914335, 1e-14));
    CHECK_THAT(h_kernel(0.25, 1.0),
               Catch::Matchers::WithinRel(0.43192773210550442, 1e-14));
    CHECK(h_kernel(1.0, 0.0) == 0.0);
    CHECK(h_kernel(1.0, -1.0) == h_kernel(1.0, 1.0));
    CHECK_THROWS_AS(h_kernel(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(h_kernel(-0.5, 1.0), std::invalid_argument);

    // density in s: total first-passage probability is 1 for any level.
    // the raw tail decays like s^(-3/2), too slow for the rational map, so
    // integrate in x = 1/sqrt(s) where the integrand is a plain Gaussian
    for (double v : {1.0, 2.5}) {
        auto q = integrate_adaptive(
            [v](double x) { return h_kernel(1.0 / (x * x), v) * 2.0 / (x * x * x); },
            0.0, inf, 1e-10, 40000);
        REQUIRE(q.converged);
        CHECK_THAT(q.value, Catch::Matchers::WithinAbs(1.0, 1e-9));
    }
}

TEST_CASE("no-crossing atom") {
    for (double b : {0.1, 1.0, 4.0}) CHECK(atom_weight(0.0, b, 1.0) == 0.0);
    CHECK_THAT(atom_weight(1.0, 1.0, 1.0),
               Catch::Matchers::WithinRel(0.34495131388824463, 1e-14));
    // far from the origin at short time the crossing correction vanishes
    CHECK_THAT(atom_weight(3.0, 3.0, 0.01),
               Catch::Matchers::WithinRel(3.9894228040143274, 1e-14));
    CHECK_THROWS_AS(atom_weight(1.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(atom_weight(-0.1, 1.0, 1.0), std::invalid_argument);

    // total atom mass = P(no zero hit by t) = 2 Phi(v0/sqrt(t)) - 1
    auto q = integrate_adaptive([](double b) { return atom_weight(1.0, b, 1.0); }, 0.0,
                                inf, 1e-11, 40000);
    REQUIRE(q.converged);
    CHECK_THAT(q.value, Catch::Matchers::WithinAbs(0.6826894921370859, 1e-10));
}

TEST_CASE("terminal value and local time joint law") {
    CHECK_THAT(joint_density_bl(0.0, -0.5, 0.5, 1.0),
               Catch::Matchers::WithinRel(0.38855278699767518, 1e-14));
    // same kernel argument 2l + v0 + |b| = 1.5
    CHECK_THAT(joint_density_bl(1.0, 0.5, 0.0, 1.0),
               Catch::Matchers::WithinRel(0.38855278699767518, 1e-14));
    CHECK_THROWS_AS(joint_density_bl(0.0, 0.5, -0.1, 1.0), std::invalid_argument);

    // marginalizing out l recovers the Gaussian law (v0 = 0 has no atom)
    for (double b : {0.7, -0.7}) {
        auto q = integrate_adaptive(
            [b](double l) { return joint_density_bl(0.0, b, l, 1.0); }, 0.0, inf, 1e-11,
            40000);
        REQUIRE(q.converged);
        CHECK_THAT(q.value, Catch::Matchers::WithinAbs(0.31225393336676126, 1e-8));
    }
}

TEST_CASE("trivariate occupation law") {
    CHECK_THAT(trivariate_density(0.0, -1.0, 0.5, 0.3, 1.0),
               Catch::Matchers::WithinRel(0.32783335631688681, 1e-13));
    CHECK_THAT(trivariate_density(0.0, -1.0, 0.5, 0.3, 1.0),
               Catch::Matchers::WithinRel(
                   2.0 * h_kernel(0.3, 0.5) * h_kernel(0.7, 1.5), 1e-15));
    // continuity across b = 0
    CHECK_THAT(trivariate_density(0.0, -1e-14, 0.5, 0.5, 1.0),
               Catch::Matchers::WithinRel(trivariate_density(0.0, 1e-14, 0.5, 0.5, 1.0),
                                          1e-10));
    CHECK_THROWS_AS(trivariate_density(0.0, 1.0, 0.5, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(trivariate_density(0.0, 1.0, 0.5, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(trivariate_density(0.0, 1.0, -0.5, 0.5, 1.0), std::invalid_argument);
}

TEST_CASE("first passage convolution identity") {
    // integral over the splitting time of h(tau,A) h(t-tau,B) = h(t, A+B);
    // this is what collapses the trivariate marginalization to a Gaussian
    for (auto [A, B, t] : {std::tuple{1.0, 0.5, 1.0}, {0.3, 1.2, 2.0}, {2.0, 2.0, 0.5}}) {
        auto f = [&, A = A, B = B, t = t](double tau) {
            if (!(tau > 0) || !(tau < t)) return 0.0;
            return h_kernel(tau, A) * h_kernel(t - tau, B);
        };
        auto q = integrate_adaptive(f, 0.0, t, 1e-12, 40000);
        REQUIRE(q.converged);
        CHECK_THAT(q.value, Catch::Matchers::WithinAbs(h_kernel(t, A + B), 1e-10));
    }
}

TEST_CASE("trivariate marginalization recovers the Gaussian") {
    auto m1 = trivariate_marginal_b(0.5, -0.4, 1.0);
    CHECK_THAT(m1.value, Catch::Matchers::WithinAbs(0.26608524989875482, 1e-6));
    // positive side picks up the atom
    auto m2 = trivariate_marginal_b(0.5, 0.4, 1.0);
    CHECK_THAT(m2.value,
               Catch::Matchers::WithinAbs(gaussian_kernel(1.0, 0.1), 1e-6));
    auto m3 = trivariate_marginal_b(0.0, 1.3, 2.0);
    CHECK_THAT(m3.value,
               Catch::Matchers::WithinAbs(gaussian_kernel(2.0, 1.3), 1e-6));
}

TEST_CASE("joint bin masses") {
    // closed form vs 2-D quadrature of the density
    auto quad_mass = [](double b1, double b2, double l1, double l2, double t) {
        auto outer = [&](double l) {
            return integrate_adaptive(
                       [&](double b) { return joint_density_bl(0.0, b, l, t); }, b1, b2,
                       1e-12, 2000)
                .value;
        };
        return integrate_adaptive(outer, l1, l2, 1e-10, 2000).value;
    };
    CHECK_THAT(joint_bl_bin_mass(0.3, 0.9, 0.2, 0.7, 1.0),
               Catch::Matchers::WithinAbs(quad_mass(0.3, 0.9, 0.2, 0.7, 1.0), 1e-9));
    CHECK_THAT(joint_bl_bin_mass(-1.2, -0.1, 0.0, 0.4, 2.0),
               Catch::Matchers::WithinAbs(quad_mass(-1.2, -0.1, 0.0, 0.4, 2.0), 1e-9));

    // each half line carries half the mass, and a partition sums to it
    CHECK_THAT(joint_bl_bin_mass(0.0, inf, 0.0, inf, 1.0),
               Catch::Matchers::WithinRel(0.5, 1e-14));
    CHECK_THAT(joint_bl_bin_mass(-inf, 0.0, 0.0, inf, 1.0),
               Catch::Matchers::WithinRel(0.5, 1e-14));
    double total = 0.0;
    const std::vector<double> be{0.0, 0.4, 1.1, inf}, le{0.0, 0.3, 0.9, inf};
    for (std::size_t i = 0; i + 1 < be.size(); ++i)
        for (std::size_t j = 0; j + 1 < le.size(); ++j)
            total += joint_bl_bin_mass(be[i], be[i + 1], le[j], le[j + 1], 1.0);
    CHECK_THAT(total, Catch::Matchers::WithinRel(0.5, 1e-13));

    CHECK_THROWS_AS(joint_bl_bin_mass(-0.5, 0.5, 0.0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(joint_bl_bin_mass(0.5, 0.3, 0.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("driftless propagator values") {
    CHECK_THAT(propagator_free({0.0, 0.0, 1.0, 1.0}),
               Catch::Matchers::WithinRel(1.0833154705876863, 1e-14));
    CHECK_THAT(propagator_free({0.0, 0.5, 1.0, 1.0}),
               Catch::Matchers::WithinRel(0.38389241951040575, 1e-14));
    CHECK_THROWS_AS(propagator_free({0.0, 0.0, 0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(propagator_free({0.0, 0.0, 1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("driftless propagator normalization lattice") {
    for (double v0 : {-1.0, 0.0, 0.7})
        for (double t : {0.1, 1.0, 10.0})
            for (double delta : {0.5, 1.0, 2.0}) {
                auto f = [&](double v) { return propagator_free({v0, v, t, delta}); };
                auto q = integrate_adaptive(f, -inf, inf, 1e-12, 40000, {0.0, v0});
                REQUIRE(q.converged);
                INFO("v0=" << v0 << " t=" << t << " delta=" << delta);
                CHECK_THAT(q.value, Catch::Matchers::WithinAbs(1.0, 1e-8));
            }
}

TEST_CASE("detailed balance and mirror symmetry") {
    std::mt19937_64 rng(20240811);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        const double v0 = U(rng), v = U(rng);
        const double t = std::array{0.1, 1.0, 5.0}[i % 3];
        const double d = std::array{0.5, 1.0, 2.0}[i % 3 == 0 ? (i / 3) % 3 : i % 3];
        const double lhs = std::exp(-2.0 * d * std::fabs(v0)) *
                           propagator_free({v0, v, t, d});
        const double rhs = std::exp(-2.0 * d * std::fabs(v)) *
                           propagator_free({v, v0, t, d});
        CHECK_THAT(lhs, Catch::Matchers::WithinRel(rhs, 1e-12));
        CHECK(propagator_free({v0, v, t, d}) == propagator_free({-v0, -v, t, d}));
    }
}

TEST_CASE("long-time limit is the speed measure") {
    for (double v : {0.0, 0.5, -0.5})
        CHECK_THAT(propagator_free({0.3, v, 200.0, 1.0}),
                   Catch::Matchers::WithinAbs(std::exp(-2.0 * std::fabs(v)), 1e-6));
    double sup = 0.0;
    for (int i = 0; i <= 600; ++i) {
        const double v = -3.0 + 0.01 * i;
        sup = std::max(sup, std::fabs(propagator_free({0.3, v, 200.0, 1.0}) -
                                      std::exp(-2.0 * std::fabs(v))));
    }
    CHECK(sup <= 1e-4);
}

TEST_CASE("short-time concentration") {
    const double t = 1e-3, v0 = 0.4, delta = 1.0;
    const double mean = free_mean(v0, t, delta);
    CHECK(std::fabs(mean - v0) <= 2e-3 + delta * t);
    auto f2 = [&](double v) {
        return (v - mean) * (v - mean) * propagator_free({v0, v, t, delta});
    };
    const double var = integrate_adaptive(f2, -inf, inf, 1e-12, 40000, {0.0, v0}).value;
    CHECK(var <= 2.0 * t);
}

TEST_CASE("driftless cdf closed form vs quadrature") {
    for (auto [v0, t, d] : {std::tuple{0.0, 1.0, 1.0}, {0.7, 0.5, 2.0},
                            {-1.0, 2.0, 0.5}, {0.3, 10.0, 1.0}}) {
        double prev = 0.0;
        for (double x : {-2.0, -0.5, 0.0, 0.3, 1.5}) {
            auto f = [&, v0 = v0, t = t, d = d](double v) {
                return propagator_free({v0, v, t, d});
            };
            auto q = integrate_adaptive(f, -inf, x, 1e-12, 40000, {0.0, v0});
            INFO("v0=" << v0 << " t=" << t << " delta=" << d << " x=" << x);
            const double c = propagator_free_cdf({v0, x, t, d});
            CHECK_THAT(c, Catch::Matchers::WithinAbs(q.value, 1e-9));
            CHECK(c >= prev);
            prev = c;
        }
        CHECK(propagator_free_cdf({v0, -60.0, t, d}) < 1e-12);
        CHECK(propagator_free_cdf({v0, 60.0, t, d}) > 1.0 - 1e-12);
    }
}

TEST_CASE("chapman-kolmogorov residuals") {
    CHECK(chapman_kolmogorov_residual(0.0, 0.2, 0.5, 0.5, 1.0) <= 1e-4);
    CHECK(chapman_kolmogorov_residual(1.0, -1.0, 0.25, 0.75, 2.0) <= 1e-4);
    // near-identity factor: looser gate
    CHECK(chapman_kolmogorov_residual(0.0, 0.2, 1e-6, 1.0, 1.0) <= 1e-2);
    CHECK_THROWS_AS(chapman_kolmogorov_residual(0.0, 0.0, 0.0, 1.0, 1.0),
                    std::invalid_argument);
}

TEST_CASE("forced propagator reduces to the driftless one at a = 0") {
    for (auto [v0, v, t, d] : {std::tuple{0.0, 0.5, 1.0, 1.0}, {0.3, -0.8, 2.0, 0.7},
                               {-0.6, 0.4, 0.5, 1.5}, {0.0, 0.0, 1.0, 1.0}}) {
        INFO("v0=" << v0 << " v=" << v << " t=" << t << " delta=" << d);
        CHECK_THAT(propagator_forced({v0, v, t, d, 0.0}),
                   Catch::Matchers::WithinAbs(propagator_free({v0, v, t, d}), 1e-6));
    }
}

TEST_CASE("forced propagator against the brute-force oracle") {
    for (auto [v0, v, a] : {std::tuple{0.0, 0.5, 0.5}, {0.5, -0.3, -0.4},
                            {0.2, 0.9, 0.3}, {-0.4, 0.6, 0.5}}) {
        INFO("v0=" << v0 << " v=" << v << " a=" << a);
        const double got = propagator_forced({v0, v, 1.0, 1.0, a});
        const double want = forced_raw(v0, v, 1.0, 1.0, a);
        CHECK_THAT(got, Catch::Matchers::WithinRel(want, 1e-6));
    }
}

TEST_CASE("forced propagator normalization") {
    auto f = [](double v) {
        return propagator_forced_detail({0.0, v, 1.0, 1.0, 0.5}, 1e-10).value;
    };
    auto q = integrate_adaptive(f, -inf, inf, 1e-8, 4000, {0.0});
    REQUIRE(q.converged);
    CHECK_THAT(q.value, Catch::Matchers::WithinAbs(1.0, 1e-5));
}

TEST_CASE("forced propagator tilts the mean against a") {
    // a enters the dynamics as an extra drift of -a, i.e. the weight
    // exp(-2 a delta tau) suppresses time spent on the positive side,
    // so raising a pushes the terminal mean down (callers wanting a
    // force of +F toward positive v pass a = -F)
    const double m_neg = forced_mean(0.2, 1.0, 1.0, -0.5);
    const double m_zero = forced_mean(0.2, 1.0, 1.0, 0.0);
    const double m_pos = forced_mean(0.2, 1.0, 1.0, 0.5);
    CHECK(m_neg > m_zero);
    CHECK(m_zero > m_pos);
    // the driftless mean agrees with the free propagator's
    CHECK_THAT(m_zero, Catch::Matchers::WithinAbs(free_mean(0.2, 1.0, 1.0), 1e-5));
}

TEST_CASE("forced propagator mirror symmetry") {
    for (double v : {-0.7, 0.0, 0.4})
        CHECK_THAT(propagator_forced({0.5, v, 1.0, 1.0, 0.3}),
                   Catch::Matchers::WithinRel(
                       propagator_forced({-0.5, -v, 1.0, 1.0, -0.3}), 1e-12));
}

TEST_CASE("propagator curves and grids") {
    auto grid = propagator_default_grid(0.7, 1.0, 1.0);
    auto c = propagator_free_curve(0.7, 1.0, 1.0, grid);
    CHECK_THAT(c.trapezoid(), Catch::Matchers::WithinAbs(1.0, grid_tolerance));
    CHECK(c.meta.at("kind") == "propagator_free");

    auto fc = propagator_forced_curve(0.0, 1.0, 1.0, 0.5, linspace(-4.0, 4.0, 101),
                                      1e-8);
    CHECK(fc.meta.at("kind") == "propagator_forced");
    CHECK(fc.meta.at("converged").get<bool>());
    CHECK(fc.meta.at("fallback_used").get<bool>() == false);
    CHECK(fc.meta.at("panels_used").get<std::size_t>() > 0);
    for (double x : fc.values) CHECK(x >= 0.0);
    CHECK_THROWS_AS(propagator_default_grid(0.0, -1.0, 1.0), std::invalid_argument);
}
