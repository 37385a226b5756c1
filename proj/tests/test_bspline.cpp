#include <catch2/catch_amalgamated.hpp>

#include "varbesov/bspline.hpp"
#include "varbesov/expansion.hpp"

using namespace varbesov;

namespace {

// Reference evaluation via the truncated-power formula in extended precision;
// independent of the production switch between formula and recursion.
long double tp_reference(int m, long double x) {
    if (x <= 0.0L || x >= m + 1.0L) return 0.0L;
    long double fact = 1.0L;
    for (int i = 2; i <= m; ++i) fact *= i;
    long double acc = 0.0L, c = 1.0L;  // C(m+1, j), updated incrementally
    for (int j = 0; j <= m + 1; ++j) {
        long double t = x - j;
        if (t > 0.0L) {
            long double p = 1.0L;
            for (int e = 0; e < m; ++e) p *= t;
            acc += (j % 2 == 0 ? c : -c) * p;
        }
        c = c * (m + 1 - j) / (j + 1);
    }
    return acc / fact;
}

}  // namespace

TEST_CASE("univariate cardinal B-spline: pinned values") {
    CHECK(bspline_univariate(1, 1.0) == Catch::Approx(1.0).margin(1e-15));
    CHECK(bspline_univariate(2, 1.5) == Catch::Approx(0.75).margin(1e-15));
    CHECK(bspline_univariate(3, -0.5) == 0.0);
    CHECK(bspline_univariate(2, 0.0) == 0.0);
    CHECK(bspline_univariate(2, 3.0) == 0.0);
    CHECK(bspline_univariate(2, 5.7) == 0.0);
    CHECK_THROWS_AS(bspline_univariate(0, 0.5), std::invalid_argument);
}

TEST_CASE("univariate agrees with extended-precision reference") {
    for (int m = 1; m <= 6; ++m) {
        double worst = 0.0;
        for (int i = 0; i <= 10000; ++i) {
            double x = -0.5 + (m + 2.0) * i / 10000.0;
            double v = bspline_univariate(m, x);
            double ref = static_cast<double>(tp_reference(m, x));
            worst = std::max(worst, std::abs(v - ref));
        }
        INFO("m = " << m);
        CHECK(worst < 1e-13);
    }
}

TEST_CASE("univariate symmetry and normalization") {
    for (int m = 1; m <= 4; ++m) {
        for (int i = 0; i <= 500; ++i) {
            double x = (m + 1.0) * i / 500.0;
            CHECK(bspline_univariate(m, x) == Catch::Approx(bspline_univariate(m, m + 1.0 - x)).margin(1e-13));
        }
        // integer-shift partition of unity on a point well inside the line
        double s = 0.0;
        for (int j = -m - 2; j <= m + 2; ++j) s += bspline_univariate(m, 0.37 + m * 0.41 - j);
        CHECK(s == Catch::Approx(1.0).margin(1e-13));
    }
}

TEST_CASE("tensor evaluation: pinned values and separability") {
    CHECK(bspline_tensor(1, 0, {0, 0}, {1.0, 1.0}) == Catch::Approx(1.0).margin(1e-15));
    CHECK(bspline_tensor(1, 1, {0, 0}, {0.5, 0.5}) == Catch::Approx(1.0).margin(1e-15));
    CHECK(bspline_tensor(2, 5, {0, 0}, {0.9, 0.9}) == 0.0);

    Rng rng(12345);
    for (int trial = 0; trial < 200; ++trial) {
        int m = 1 + rng.uniform_int(3);
        int k = rng.uniform_int(6);
        int d = 1 + rng.uniform_int(3);
        DyadicIndex j(d);
        std::vector<double> x(d);
        for (int i = 0; i < d; ++i) {
            j[i] = -m + rng.uniform_int((1 << k) + m);
            x[i] = rng.uniform();
        }
        double direct = 1.0;
        for (int i = 0; i < d; ++i) direct *= bspline_univariate(m, std::ldexp(x[i], k) - j[i]);
        CHECK(bspline_tensor(m, k, j, x) == Catch::Approx(direct).margin(1e-14));
    }
}

TEST_CASE("support box matches dilation convention") {
    Box s = bspline_support(2, 3, {-1, 4});
    CHECK(s.lo[0] == Catch::Approx(-0.125));
    CHECK(s.hi[0] == Catch::Approx(0.25));
    CHECK(s.lo[1] == Catch::Approx(0.5));
    CHECK(s.hi[1] == Catch::Approx(0.875));
}

TEST_CASE("active index set on the unit cube") {
    auto idx = active_indices(2, 3, Box::unit_cube(1));
    REQUIRE(idx.size() == 10);
    CHECK(idx.front() == DyadicIndex{-2});
    CHECK(idx.back() == DyadicIndex{7});

    for (int m = 1; m <= 3; ++m)
        for (int k = 0; k <= 4; ++k)
            for (int d = 1; d <= 3; ++d) {
                auto v = active_indices(m, k, Box::unit_cube(d));
                CHECK(static_cast<long long>(v.size()) == ipow((1 << k) + m, d));
                CHECK(std::is_sorted(v.begin(), v.end()));
            }
}

TEST_CASE("active index set of a narrow region") {
    // A = [0.5, 0.5 + 2^-4], m = 1, k = 4. Brute force below enumerates the
    // indices whose basis does not vanish identically on A; this pins {7, 8}.
    Box a({0.5}, {0.5 + 0.0625});
    auto idx = active_indices(1, 4, a);

    std::vector<int> brute;
    for (int j = -4; j <= 20; ++j) {
        bool nonzero = false;
        for (int g = 0; g <= 2000; ++g) {
            double x = a.lo[0] + (a.hi[0] - a.lo[0]) * g / 2000.0;
            if (bspline_univariate(1, 16.0 * x - j) != 0.0) { nonzero = true; break; }
        }
        if (nonzero) brute.push_back(j);
    }
    REQUIRE(brute == std::vector<int>{7, 8});
    REQUIRE(idx.size() == 2);
    CHECK(idx[0] == DyadicIndex{7});
    CHECK(idx[1] == DyadicIndex{8});

    Box empty({0.7}, {0.2});
    CHECK(active_indices(2, 3, empty).empty());
}

TEST_CASE("partition of unity at random interior points") {
    Rng rng(777);
    for (int m = 1; m <= 3; ++m)
        for (int d = 1; d <= 3; ++d)
            for (int k = 0; k <= 6; k += 2)
                for (int t = 0; t < 50; ++t) {
                    std::vector<double> x(d);
                    for (auto& xi : x) xi = rng.uniform();
                    CHECK(std::abs(partition_of_unity_sum(m, k, x) - 1.0) < 1e-12);
                }
}

TEST_CASE("expansion evaluation matches direct summation") {
    Rng rng(4242);
    SplineExpansion e;
    e.m = 2;
    e.dim = 2;
    for (int k : {0, 2, 3}) {
        auto idx = active_indices(2, k, Box::unit_cube(2));
        for (const auto& j : idx)
            if (rng.uniform() < 0.3) e.add_term(k, j, rng.uniform(-1.0, 1.0));
    }
    e.finalize();
    for (int t = 0; t < 100; ++t) {
        std::vector<double> x = {rng.uniform(), rng.uniform()};
        double direct = 0.0;
        for (const auto& layer : e.layers)
            for (size_t i = 0; i < layer.size(); ++i)
                direct += layer.coeffs[i] * bspline_tensor(2, layer.k, layer.indices[i], x);
        CHECK(e.eval(x) == Catch::Approx(direct).margin(1e-12));
    }
}

TEST_CASE("coefficient-space Besov norm") {
    SplineExpansion e;
    e.m = 2;
    e.dim = 1;
    e.add_term(3, {1}, std::pow(2.0, -3.0 * (1.5 - 0.5)));
    e.finalize();
    // single coefficient 2^{-k(s - d/p)} at level k has norm exactly 1
    CHECK(coeff_besov_norm(e, 1.5, 2.0, 2.0) == Catch::Approx(1.0).margin(1e-14));

    SplineExpansion u;
    u.m = 2;
    u.dim = 1;
    u.add_term(0, {0}, 0.5);
    u.add_term(0, {1}, -0.25);
    u.add_term(1, {0}, 0.125);
    u.finalize();
    double inf_norm = coeff_besov_norm(u, 1.0, INFINITY, INFINITY);
    // max over levels of 2^{ks} max_j |a|: level 0 -> 0.5, level 1 -> 2*0.125
    CHECK(inf_norm == Catch::Approx(0.5).margin(1e-14));

    double p2q1 = coeff_besov_norm(u, 1.0, 2.0, 1.0);
    double l0 = std::pow(2.0, 0.0 * 0.5) * std::sqrt(0.25 + 0.0625);
    double l1 = std::pow(2.0, 1.0 * 0.5) * 0.125;
    CHECK(p2q1 == Catch::Approx(l0 + l1).margin(1e-14));

    CHECK_THROWS_AS(coeff_besov_norm(u, 1.0, -2.0, 2.0), std::invalid_argument);
    CHECK_THROWS_AS(coeff_besov_norm(u, 1.0, 2.0, 0.0), std::invalid_argument);
}
