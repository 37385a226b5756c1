#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "varbesov/rates.hpp"

using namespace varbesov;
using Catch::Approx;

TEST_CASE("nu_exponent") {
    CHECK(nu_exponent(2.0, 1) == 0.0);
    CHECK(nu_exponent(2.0, 7) == 0.0);
    CHECK(nu_exponent(4.0, 3) == 0.0);  // clamped at zero for p > 2
    CHECK(nu_exponent(std::numeric_limits<double>::infinity(), 2) == 0.0);
    CHECK(nu_exponent(1.0, 2) == 1.0);
    CHECK(nu_exponent(1.0, 1) == 0.5);
    CHECK(nu_exponent(2.0 / 3.0, 1) == Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(nu_exponent(0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(nu_exponent(2.0, 0), std::invalid_argument);
}

TEST_CASE("estimation_rate_variable matches the high-precision oracle") {
    CHECK(estimation_rate_variable(1e6, 1.0, 5, 0.2, 0.0) ==
          Approx(1.29541822291008597e-6).epsilon(1e-13));
    CHECK_THROWS_AS(estimation_rate_variable(15.0, 1.0, 5, 0.2, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(estimation_rate_variable(1e5, 1.0, 5, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(estimation_rate_variable(1e5, 0.0, 5, 0.2, 0.0), std::invalid_argument);
}

TEST_CASE("estimation_rate_variable: vanishing log exponents reduce to the pure power") {
    // alpha = d(s - nu)/(3s) kills the ln n exponent
    const double s = 1.0, nu = 0.0;
    const int d = 3;
    const double alpha = d * (s - nu) / (3.0 * s);
    for (double n : {1e2, 1e4, 1e6}) {
        const double llexp = 2.0 * d * (s - nu) / ((2.0 * s + d) * alpha);
        const double expect = std::pow(n, -2.0 * s / (2.0 * s + d)) *
                              std::pow(std::log(std::log(n)), llexp);
        CHECK(estimation_rate_variable(n, s, d, alpha, nu) == Approx(expect).epsilon(1e-14));
    }
    // nu = s kills the ln ln n exponent
    for (double n : {1e2, 1e4, 1e6}) {
        const double lexp = 6.0 * 1.0 / (2.0 + 1.0);  // -2(sd - nu d - 3 alpha s)/((2s+d)a), s=nu=d=alpha=1
        const double expect = std::pow(n, -2.0 / 3.0) * std::pow(std::log(n), lexp);
        CHECK(estimation_rate_variable(n, 1.0, 1, 1.0, 1.0) == Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("estimation_rate_variable: doubling d increases the log improvement when nu = 0") {
    const double s = 1.0, alpha = 0.2;
    auto improvement = [&](int d) {
        return 2.0 * (s * d - 3.0 * alpha * s) / ((2.0 * s + d) * alpha);
    };
    for (int d : {1, 2, 5, 10, 15}) {
        INFO("d = " << d);
        CHECK(improvement(2 * d) > improvement(d));
    }
}

TEST_CASE("estimation_rate_fixed") {
    CHECK(estimation_rate_fixed(1e6, 1.5, 1) == Approx(3.16227766016837933e-5).epsilon(1e-13));
    CHECK(estimation_rate_fixed(1.0, 2.0, 3) == 1.0);
    CHECK(estimation_rate_fixed(100.0, 1.5, 10000) > 0.99);  // d large: curve flattens
    CHECK_THROWS_AS(estimation_rate_fixed(0.5, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(estimation_rate_fixed(10.0, -1.0, 1), std::invalid_argument);
}

TEST_CASE("approx_rate_variable matches the oracle and degenerates cleanly") {
    CHECK(approx_rate_variable(std::ldexp(1.0, 20), 2.0, 4, 0.5, 0.0) ==
          Approx(1.26352982562924749e-6).epsilon(1e-13));

    const double inf = std::numeric_limits<double>::infinity();
    for (double N : {16.0, 1e3, 1e6}) {
        CHECK(approx_rate_variable(N, 1.5, 2, inf, 0.0) == std::pow(N, -0.75));
        CHECK(approx_rate_variable(N, 1.5, 2, 0.7, 1.5) == std::pow(N, -0.75));
    }
    CHECK_THROWS_AS(approx_rate_variable(8.0, 1.0, 1, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(approx_rate_variable(100.0, 1.0, 1, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("linear_lower_rate") {
    CHECK(linear_lower_rate(1e6, 1.0, 0.0, 1) == Approx(1e-4).epsilon(1e-13));
    // nu = 0 reproduces the fixed Besov rate exactly
    for (double n : {16.0, 1e3, 1e7})
        CHECK(linear_lower_rate(n, 1.3, 0.0, 2) == estimation_rate_fixed(n, 1.3, 2));
    // p = 1 gives nu = d/2
    const int d = 2;
    const double nu = nu_exponent(1.0, d);
    CHECK(nu == 1.0);
    CHECK(linear_lower_rate(1e4, 1.5, nu, d) ==
          Approx(std::pow(1e4, -2.0 * 0.5 / (2.0 * 0.5 + d))).epsilon(1e-14));
    CHECK_THROWS_AS(linear_lower_rate(1e4, 0.5, 0.5, 1), std::invalid_argument);
}

TEST_CASE("deep curve crosses below the linear lower rate for large n (p < 2)") {
    // s=1, d=1, p=1 (nu = 1/2), alpha=1: the log factors penalize small n,
    // the polynomial exponent wins for large n
    const double s = 1.0, alpha = 1.0, nu = 0.5;
    const int d = 1;
    const double r_small = estimation_rate_variable(1e4, s, d, alpha, nu) /
                           linear_lower_rate(1e4, s, nu, d);
    const double r_large = estimation_rate_variable(1e20, s, d, alpha, nu) /
                           linear_lower_rate(1e20, s, nu, d);
    CHECK(r_small > 1.0);
    CHECK(r_large < 1.0);  // a crossing exists in between
}

TEST_CASE("curves are strictly positive and eventually strictly decreasing") {
    std::vector<double> grid = log_spaced_grid(1e4, 1e12, 25);
    RateSpec spec;
    spec.grid = grid;
    spec.s = 1.0;
    spec.d = 5;
    spec.alpha = 0.2;
    spec.p = 2.0;
    for (CurveKind k : {CurveKind::deep_variable, CurveKind::besov_fixed,
                        CurveKind::linear_lower, CurveKind::approx_variable}) {
        spec.kind = k;
        std::vector<double> v = rate_curve(spec);
        REQUIRE(v.size() == grid.size());
        for (size_t i = 0; i < v.size(); ++i) {
            CHECK(v[i] > 0.0);
            if (i > 0) CHECK(v[i] < v[i - 1]);
        }
    }
}

TEST_CASE("rate_curve is deterministic and validates its spec") {
    RateSpec spec;
    spec.kind = CurveKind::deep_variable;
    spec.grid = log_spaced_grid(16.0, 1e8, 12);
    spec.s = 1.2;
    spec.d = 3;
    spec.alpha = 0.4;
    std::vector<double> a = rate_curve(spec);
    std::vector<double> b = rate_curve(spec);
    CHECK(a == b);

    RateSpec bad = spec;
    bad.grid = {100.0, 100.0, 200.0};
    CHECK_THROWS_AS(rate_curve(bad), std::invalid_argument);
    RateSpec empty = spec;
    empty.grid.clear();
    CHECK_THROWS_AS(rate_curve(empty), std::invalid_argument);
}

TEST_CASE("fit_slope recovers exact power laws") {
    std::vector<double> xs{10.0, 100.0, 1000.0, 10000.0};
    std::vector<double> ys(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) ys[i] = 1.0 / (xs[i] * xs[i]);
    SlopeFit f = fit_slope(xs, ys);
    CHECK(f.slope == Approx(-2.0).margin(1e-12));
    CHECK(f.r2 == Approx(1.0).margin(1e-12));

    std::vector<double> flat(xs.size(), 3.5);
    SlopeFit c = fit_slope(xs, flat);
    CHECK(std::abs(c.slope) <= 1e-15);
    CHECK(c.r2 == 1.0);  // zero total variation: perfect by convention
}

TEST_CASE("fit_slope sees log contamination as a milder slope") {
    std::vector<double> xs = log_spaced_grid(1e2, 1e6, 9);
    std::vector<double> ys(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) ys[i] = std::log(xs[i]) / xs[i];
    SlopeFit f = fit_slope(xs, ys);
    CHECK(f.slope > -1.0);
    CHECK(f.slope < -0.85);
}

TEST_CASE("fit_slope rejects bad inputs") {
    CHECK_THROWS_AS(fit_slope({1.0, 2.0}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_slope({1.0, 2.0, 2.0}, {1.0, 2.0, 3.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_slope({1.0, 2.0, 3.0}, {1.0, -2.0, 3.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_slope({1.0, 2.0, 3.0}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(fit_slope({1.0, -2.0, 3.0}, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("log_spaced_grid endpoints and monotonicity") {
    std::vector<double> g = log_spaced_grid(16.0, 4096.0, 9);
    CHECK(g.front() == 16.0);
    CHECK(g.back() == 4096.0);
    for (size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
    CHECK_THROWS_AS(log_spaced_grid(0.0, 10.0, 5), std::invalid_argument);
    CHECK_THROWS_AS(log_spaced_grid(1.0, 10.0, 1), std::invalid_argument);
}
