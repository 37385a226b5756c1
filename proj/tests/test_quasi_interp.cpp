#include <catch2/catch_amalgamated.hpp>

#include "varbesov/quadrature.hpp"
#include "varbesov/quasi_interp.hpp"

using namespace varbesov;

namespace {

double smooth_bump(const std::vector<double>& x) {
    double r = 1.0;
    for (double xi : x) {
        double t = 2.0 * xi - 1.0;
        r *= std::exp(-4.0 * t * t) * (1.0 + 0.3 * std::sin(5.0 * xi));
    }
    return r;
}

}  // namespace

TEST_CASE("projection reproduces constants exactly") {
    auto one = [](const std::vector<double>&) { return 1.0; };
    for (int d = 1; d <= 2; ++d) {
        SplineExpansion e = project(one, 2, 3, d);
        for (double c : e.layers[0].coeffs) CHECK(c == Catch::Approx(1.0).margin(1e-10));
    }
}

TEST_CASE("projection reproduces a single basis function") {
    DyadicIndex j0 = {3};
    auto f = [&](const std::vector<double>& x) { return bspline_tensor(2, 4, j0, x); };
    SplineExpansion e = project(f, 2, 4, 1);
    const SplineLayer& l = e.layers[0];
    for (size_t i = 0; i < l.size(); ++i) {
        double want = (l.indices[i] == j0) ? 1.0 : 0.0;
        CHECK(l.coeffs[i] == Catch::Approx(want).margin(1e-10));
    }
}

TEST_CASE("projection reproduces polynomials up to the spline degree") {
    auto xsq = [](const std::vector<double>& x) { return x[0] * x[0]; };
    SplineExpansion e = project(xsq, 2, 3, 1);
    double worst = 0.0;
    for (int g = 0; g <= 2000; ++g) {
        double x = g / 2000.0;
        worst = std::max(worst, std::abs(e.eval({x}) - x * x));
    }
    CHECK(worst < 1e-9);

    // all monomials of total degree <= m in d = 2
    for (int a = 0; a <= 2; ++a)
        for (int b = 0; a + b <= 2; ++b) {
            auto mono = [&](const std::vector<double>& x) {
                return std::pow(x[0], a) * std::pow(x[1], b);
            };
            SplineExpansion me = project(mono, 2, 3, 2);
            double w = 0.0;
            for (int i = 0; i < 40; ++i)
                for (int jj = 0; jj < 40; ++jj) {
                    std::vector<double> x = {(i + 0.5) / 40.0, (jj + 0.5) / 40.0};
                    w = std::max(w, std::abs(me.eval(x) - mono(x)));
                }
            INFO("monomial x^" << a << " y^" << b);
            CHECK(w < 1e-8);
        }
}

TEST_CASE("projection flags the degenerate fitting box") {
    auto one = [](const std::vector<double>&) { return 1.0; };
    Box degenerate({0.25, 0.5}, {0.25, 0.75});
    CHECK_THROWS_AS(project(one, 2, 3, 2, &degenerate), precondition_error);
}

TEST_CASE("two-scale refinement preserves the function") {
    Rng rng(99);
    for (int m = 1; m <= 3; ++m) {
        SplineLayer coarse;
        coarse.k = 2;
        for (const auto& j : active_indices(m, 2, Box::unit_cube(2))) {
            coarse.indices.push_back(j);
            coarse.coeffs.push_back(rng.uniform(-1.0, 1.0));
        }
        SplineLayer fine = refine_layer(coarse, m, 2);
        SplineExpansion ec, ef;
        ec.m = ef.m = m;
        ec.dim = ef.dim = 2;
        ec.layers.push_back(coarse);
        ef.layers.push_back(fine);
        ec.finalize();
        ef.finalize();
        for (int t = 0; t < 100; ++t) {
            std::vector<double> x = {rng.uniform(), rng.uniform()};
            CHECK(ef.eval(x) == Catch::Approx(ec.eval(x)).margin(1e-12));
        }
    }
}

TEST_CASE("detail layer vanishes when nothing new appears at the finer level") {
    // f lives in the coarse space, so Q_k f - Q_{k-1} f = 0.
    auto f = [](const std::vector<double>& x) { return bspline_tensor(2, 2, {1}, x); };
    SplineExpansion q3 = project(f, 2, 3, 1), q2 = project(f, 2, 2, 1);
    SplineLayer d3 = detail_layer(q3, q2);
    for (double c : d3.coeffs) CHECK(std::abs(c) < 1e-9);
}

TEST_CASE("detail layers telescope back to the finest projection") {
    SplineExpansion q0 = project(smooth_bump, 2, 0, 1);
    SplineExpansion prev = q0;
    SplineExpansion sum;  // Q_0 + sum of details, all expressed as layers
    sum.m = 2;
    sum.dim = 1;
    sum.layers.push_back(q0.layers[0]);
    for (int k = 1; k <= 4; ++k) {
        SplineExpansion qk = project(smooth_bump, 2, k, 1);
        sum.layers.push_back(detail_layer(qk, prev));
        prev = qk;
    }
    sum.finalize();
    Rng rng(5);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> x = {rng.uniform()};
        CHECK(sum.eval(x) == Catch::Approx(prev.eval(x)).margin(1e-10));
    }
}

TEST_CASE("detail-layer norm agrees with direct quadrature of Q_k - Q_{k-1}") {
    SplineExpansion q4 = project(smooth_bump, 2, 4, 1);
    SplineExpansion q3 = project(smooth_bump, 2, 3, 1);
    SplineLayer d4 = detail_layer(q4, q3);
    SplineExpansion ed;
    ed.m = 2;
    ed.dim = 1;
    ed.layers.push_back(d4);
    ed.finalize();
    double cell = std::ldexp(1.0, -7);
    auto diff = [&](const std::vector<double>& x) { return q4.eval(x) - q3.eval(x); };
    auto de = [&](const std::vector<double>& x) { return ed.eval(x); };
    double n1 = lr_norm_box(diff, Box::unit_cube(1), 2.0, cell);
    double n2 = lr_norm_box(de, Box::unit_cube(1), 2.0, cell);
    CHECK(n1 == Catch::Approx(n2).margin(1e-8));
}

TEST_CASE("region-restricted projection reproduces local fine structure") {
    // A fine basis supported inside the region must be reproduced exactly on it.
    int m = 2, k = 6;
    DyadicIndex jc = {30, 30};
    auto f = [&](const std::vector<double>& x) {
        return 0.5 + bspline_tensor(m, k, jc, x);
    };
    Box inner({0.44, 0.44}, {0.54, 0.54});
    double pad = (m + 1) * std::ldexp(1.0, -k);
    Box fitbox({inner.lo[0] - pad, inner.lo[1] - pad}, {inner.hi[0] + pad, inner.hi[1] + pad});
    fitbox = fitbox.intersect(Box::unit_cube(2));
    SplineExpansion e = project(f, m, k, 2, &fitbox);
    Rng rng(31);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> x = {rng.uniform(inner.lo[0], inner.hi[0]),
                                 rng.uniform(inner.lo[1], inner.hi[1])};
        CHECK(e.eval(x) == Catch::Approx(f(x)).margin(1e-9));
    }
}

TEST_CASE("projection reports grid size and condition information") {
    ProjectInfo info;
    auto one = [](const std::vector<double>&) { return 1.0; };
    project(one, 2, 3, 1, nullptr, 4.0, &info);
    CHECK(info.grid_points == 4 * (8 + 2));
    CHECK(info.condition_estimate >= 1.0);
    CHECK_FALSE(info.ridge_applied);
}

TEST_CASE("quadrature helpers: exactness and box subtraction") {
    // order-4 Gauss-Legendre integrates degree-7 polynomials exactly
    auto poly = [](const std::vector<double>& x) { return std::pow(x[0], 7) - 2.0 * std::pow(x[0], 4); };
    double v = integrate_box(poly, Box::unit_cube(1), 0.25);
    CHECK(v == Catch::Approx(1.0 / 8.0 - 2.0 / 5.0).margin(1e-14));

    std::vector<Box> parts = {Box::unit_cube(2)};
    Box cut({0.25, 0.4}, {0.5, 0.6});
    auto rest = subtract_box(parts, cut);
    double vol = 0.0;
    for (const auto& b : rest) vol += b.volume();
    CHECK(vol == Catch::Approx(1.0 - 0.25 * 0.2).margin(1e-14));
    // pieces are disjoint: total indicator integral equals the union volume
    for (size_t i = 0; i < rest.size(); ++i)
        for (size_t jj = i + 1; jj < rest.size(); ++jj)
            CHECK(rest[i].intersect(rest[jj]).volume() == Catch::Approx(0.0).margin(1e-15));
}
