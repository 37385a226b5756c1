// Acceptance gate: eleven end-to-end checks, one pass/fail line each.
//
// Each check exercises a full pipeline (evaluation, projection, budgeting,
// network synthesis, compilation, estimation, or the command-line tool) with
// every tolerance pinned in code.  The binary exits nonzero if any check
// fails; failures in one check never prevent the others from running.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "varbesov/estimators.hpp"
#include "varbesov/quadrature.hpp"
#include "varbesov/rates.hpp"
#include "varbesov/relu_compile.hpp"
#include "varbesov/synth.hpp"

#ifndef VARBESOV_CLI_PATH
#define VARBESOV_CLI_PATH ""
#endif

namespace {

using namespace varbesov;

struct Result {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. Tensor B-splines over the clamped index set sum to one on the unit cube.
Result c1_partition_of_unity() {
    double worst = 0.0;
    for (int d = 1; d <= 3; ++d)
        for (int m = 1; m <= 3; ++m)
            for (int k = 0; k <= 6; ++k) {
                Rng rng(derive_seed(101, static_cast<uint64_t>(d * 100 + m * 10 + k)));
                std::vector<double> x(d);
                for (int t = 0; t < 10000; ++t) {
                    for (auto& v : x) v = rng.uniform();
                    worst = std::max(worst, std::abs(partition_of_unity_sum(m, k, x) - 1.0));
                }
            }
    return {worst < 1e-12, fmt("max |sum-1| = %.2e over d<=3, m<=3, k<=6", worst)};
}

// ---------------------------------------------------------------------------
// 2. Least-squares projection reproduces every monomial of total degree <= m.
Result c2_polynomial_reproduction() {
    double worst = 0.0;
    for (int d = 1; d <= 2; ++d)
        for (int m = 1; m <= 3; ++m) {
            std::vector<std::vector<int>> powers;
            if (d == 1) {
                for (int a = 0; a <= m; ++a) powers.push_back({a});
            } else {
                for (int a = 0; a <= m; ++a)
                    for (int b = 0; a + b <= m; ++b) powers.push_back({a, b});
            }
            for (const auto& pw : powers) {
                RealFn f = [pw](const std::vector<double>& x) {
                    double r = 1.0;
                    for (size_t i = 0; i < pw.size(); ++i)
                        for (int t = 0; t < pw[i]; ++t) r *= x[i];
                    return r;
                };
                SplineExpansion e = project(f, m, 4, d);
                Rng rng(derive_seed(202, static_cast<uint64_t>(d * 10 + m)));
                std::vector<double> x(d);
                for (int t = 0; t < 2000; ++t) {
                    for (auto& v : x) v = rng.uniform();
                    worst = std::max(worst, std::abs(f(x) - e.eval(x)));
                }
                const int g = 33;  // include the boundary, where clamping bites
                if (d == 1) {
                    for (int i = 0; i < g; ++i) {
                        x[0] = i / double(g - 1);
                        worst = std::max(worst, std::abs(f(x) - e.eval(x)));
                    }
                } else {
                    for (int i = 0; i < g; ++i)
                        for (int j = 0; j < g; ++j) {
                            x[0] = i / double(g - 1);
                            x[1] = j / double(g - 1);
                            worst = std::max(worst, std::abs(f(x) - e.eval(x)));
                        }
                }
            }
        }
    return {worst < 1e-8, fmt("max residual = %.2e over d<=2, m<=3, k=4", worst)};
}

// ---------------------------------------------------------------------------
// 3. Projection error decays like 2^{-k min(s,m)} for a target of finite
//    smoothness: f(x) = |x - 1/2|^{3/2} has second-order modulus ~ t^2, so
//    with m = 2 the expected slope against 2^k is -2.
Result c3_projection_error_decay() {
    RealFn kink = [](const std::vector<double>& x) {
        return std::pow(std::abs(x[0] - 0.5), 1.5);
    };
    std::vector<double> xs, ys;
    for (int k = 2; k <= 7; ++k) {
        SplineExpansion e = project(kink, 2, k, 1);
        auto g = [&](const std::vector<double>& x) {
            const double r = kink(x) - e.eval(x);
            return r * r;
        };
        const double err = std::sqrt(integrate_box(g, Box::unit_cube(1), std::ldexp(1.0, -(k + 4)), 8));
        xs.push_back(std::ldexp(1.0, k));
        ys.push_back(err);
    }
    const double slope = fit_slope(xs, ys).slope;
    return {std::abs(slope - (-2.0)) < 0.3, fmt("L2 error slope = %.4f (want -2.0 +/- 0.3)", slope)};
}

// ---------------------------------------------------------------------------
// 4. Spatially adaptive approximation beats the uniform one at equal budget
//    on a target that is smooth away from a rough bump at the singular site.
Result c4_adaptive_vs_uniform() {
    const int m = 2, k_rough = 7;
    SmoothnessProfile prof{1.0, 3.0, 0.3, {0.4, 0.6}};
    BesovParams params;  // p = q = 2

    TargetFunction bg = random_besov(2, m, 3.0, 2.0, 2.0, 3, 42);
    DyadicIndex jc(2);
    for (int i = 0; i < 2; ++i)
        jc[i] = static_cast<int>(std::floor(std::ldexp(prof.c[i], k_rough) - (m + 1) / 2.0));
    TargetFunction rough = scaled_bspline_target(prof, 2.0, m, k_rough, jc);
    auto e = std::make_shared<SplineExpansion>(*bg.expansion);
    for (const auto& layer : rough.expansion->layers)
        for (size_t i = 0; i < layer.coeffs.size(); ++i)
            e->add_term(layer.k, layer.indices[i], layer.coeffs[i]);
    e->finalize();
    RealFn f = [e](const std::vector<double>& x) { return e->eval(x); };

    ErrorQuadSpec quad;
    quad.extra_levels = 2;
    quad.max_cell_level = 11;

    double worst_ratio = 0.0;
    for (long long N : {256LL, 512LL, 1024LL, 2048LL, 4096LL}) {
        AdaptiveBudget b = plan_budget(N, prof, params, m);
        const double eu = error_report(f, approximate(f, prof, params, b, ApproxMode::uniform), 2.0, quad);
        const double ea = error_report(f, approximate(f, prof, params, b, ApproxMode::adaptive_i), 2.0, quad);
        worst_ratio = std::max(worst_ratio, ea / eu);
    }
    return {worst_ratio <= 0.9,
            fmt("max adaptive/uniform L2 ratio = %.4f over N in {256..4096} (want <= 0.9)", worst_ratio)};
}

// ---------------------------------------------------------------------------
// 5. The synthesized B-spline network meets its accuracy target, vanishes
//    exactly (bitwise +0.0) off the support, and fits the size budget.
Result c5_bspline_network() {
    const int d = 2, m = 2;
    const double eps = 1e-2;
    ReluNetwork net = build_bspline(m, d, eps);
    NetworkStats st = stats(net);

    const double cdm = compile_constant(d, m);
    const int base = std::max(d + 1, m);
    const int L0 = 4 + 3 * static_cast<int>(std::ceil(std::log2(std::pow(3.0, base) / (eps * cdm)) + 5)) *
                           static_cast<int>(std::ceil(std::log2(static_cast<double>(base))));
    const int W1 = 6 * d * m * (m + 2) + 4 * d + 2;
    const long long S0 = static_cast<long long>(L0 - 1) * W1 * W1 + 1;
    const double B0 = 2.0 * std::pow(m + 1.0, m);

    double sup = 0.0;
    const int ng = 317;  // 317^2 ~ 1e5 grid points on the support
    for (int i = 0; i < ng; ++i)
        for (int j = 0; j < ng; ++j) {
            std::vector<double> x{(m + 1.0) * i / (ng - 1), (m + 1.0) * j / (ng - 1)};
            const double ref = bspline_univariate(m, x[0]) * bspline_univariate(m, x[1]);
            sup = std::max(sup, std::abs(eval(net, x) - ref));
        }

    int leaks = 0;
    Rng rng(99);
    for (int t = 0; t < 2000; ++t) {
        std::vector<double> x{rng.uniform(-2.0, 5.0), rng.uniform(-2.0, 5.0)};
        if (x[0] >= 0.0 && x[0] <= m + 1.0 && x[1] >= 0.0 && x[1] <= m + 1.0) continue;
        const double v = eval(net, x);
        if (v != 0.0 || std::signbit(v)) ++leaks;
    }

    const bool size_ok = st.L <= L0 && st.W <= W1 && st.S <= S0 && st.B <= B0;
    return {sup <= eps && leaks == 0 && size_ok,
            fmt("sup err = %.2e (<= %.0e), outside leaks = %d, L=%d<=%d W=%d<=%d S=%lld<=%lld B=%.1f<=%.0f",
                sup, eps, leaks, st.L, L0, st.W, W1, static_cast<long long>(st.S), S0, st.B, B0)};
}

// ---------------------------------------------------------------------------
// 6. The product network annihilates bitwise when any factor is zero and is
//    eps-accurate on the unit cube for 2, 3, and 4 factors.
Result c6_product_network() {
    const double eps = 1e-2;
    double worst_sup = 0.0;
    int leaks = 0;
    for (int D = 2; D <= 4; ++D) {
        ReluNetwork net = build_mult(D, eps);
        Rng rng(derive_seed(606, static_cast<uint64_t>(D)));
        std::vector<double> x(D);
        for (int t = 0; t < 1000; ++t) {
            for (auto& v : x) v = rng.uniform();
            x[rng.uniform_int(D)] = 0.0;
            const double v = eval(net, x);
            if (v != 0.0 || std::signbit(v)) ++leaks;
        }
        const int g = D == 2 ? 101 : (D == 3 ? 21 : 11);
        std::vector<int> idx(D, 0);
        for (;;) {
            double prod = 1.0;
            for (int i = 0; i < D; ++i) {
                x[i] = idx[i] / double(g - 1);
                prod *= x[i];
            }
            worst_sup = std::max(worst_sup, std::abs(eval(net, x) - prod));
            int i = 0;
            while (i < D && ++idx[i] == g) idx[i++] = 0;
            if (i == D) break;
        }
    }
    return {leaks == 0 && worst_sup <= eps,
            fmt("zero-factor leaks = %d, max sup err = %.2e (<= %.0e) over D in {2,3,4}", leaks, worst_sup, eps)};
}

// ---------------------------------------------------------------------------
// 7. Compiling a 64-term spline approximant yields a network within the
//    certified fidelity eps * sum|coeff| and inside every size budget.
Result c7_compile_fidelity() {
    RealFn f = [](const std::vector<double>& x) {
        return std::sin(3.0 * x[0]) * std::cos(2.0 * x[1]) + 0.5 * x[0] * x[1];
    };
    SplineExpansion proj = project(f, 2, 3, 2);
    std::vector<std::pair<double, size_t>> mag;
    const SplineLayer& lay = proj.layers[0];
    for (size_t i = 0; i < lay.coeffs.size(); ++i) mag.push_back({std::abs(lay.coeffs[i]), i});
    std::sort(mag.rbegin(), mag.rend());

    PiecewiseSplineApprox fn;
    fn.outer.dim = 2;
    fn.outer.m = 2;
    double coeff_sum = 0.0;
    for (int i = 0; i < 64; ++i) {
        fn.outer.add_term(lay.k, lay.indices[mag[i].second], lay.coeffs[mag[i].second]);
        coeff_sum += mag[i].first;
    }
    fn.outer.finalize();

    const double eps = 1e-3;
    auto [net, rep] = compile(fn, eps, 0.0, CompileOptions{});
    double disc = 0.0;
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j) {
            std::vector<double> x{(i + 0.5) / 100.0, (j + 0.5) / 100.0};
            disc = std::max(disc, std::abs(eval(net, x) - fn.eval(x)));
        }
    NetworkStats st = rep.net_stats;
    const bool size_ok = st.L <= rep.L_bound && st.W <= rep.W_bound && st.S <= rep.S_bound &&
                         st.B <= rep.B_formula;
    return {disc <= eps * coeff_sum && size_ok,
            fmt("sup |net-f| = %.3e (<= %.3e), L=%d<=%d W=%d<=%d S=%lld<=%lld B=%.1f<=%.1f",
                disc, eps * coeff_sum, st.L, rep.L_bound, st.W, rep.W_bound,
                static_cast<long long>(st.S), static_cast<long long>(rep.S_bound), st.B, rep.B_formula)};
}

// ---------------------------------------------------------------------------
// 8. The metric-entropy bound matches an independently computed 50-digit
//    oracle on 100 random tuples and is monotone in every argument.
#include "covering_oracle.inc"

Result c8_covering_bound_oracle() {
    double worst_rel = 0.0;
    for (const auto& row : kCoverOracle) {
        NetworkStats st;
        st.S = row.S;
        st.L = row.L;
        st.W = row.W;
        st.B = row.B;
        const double v = covering_bound(st, row.delta);
        worst_rel = std::max(worst_rel, std::abs(v - row.value) / row.value);
    }

    NetworkStats base;
    base.S = 1000;
    base.L = 8;
    base.W = 64;
    base.B = 2.0;
    const double delta = 0.1;
    const double v0 = covering_bound(base, delta);
    bool mono = true;
    {
        NetworkStats t = base;
        t.S = 1001;
        mono = mono && covering_bound(t, delta) > v0;
    }
    {
        NetworkStats t = base;
        t.L = 9;
        mono = mono && covering_bound(t, delta) > v0;
    }
    {
        NetworkStats t = base;
        t.W = 65;
        mono = mono && covering_bound(t, delta) > v0;
    }
    {
        NetworkStats t = base;
        t.B = 4.0;
        mono = mono && covering_bound(t, delta) > v0;
        t.B = 0.25;  // weights below one clamp: bound must not increase
        const double lo = covering_bound(t, delta);
        t.B = 1.0;
        mono = mono && lo == covering_bound(t, delta);
    }
    mono = mono && covering_bound(base, delta / 2.0) > v0;

    return {worst_rel <= 1e-10 && mono,
            fmt("max rel err vs oracle = %.2e over 100 tuples (<= 1e-10), monotone = %s",
                worst_rel, mono ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 9. The adaptive least-squares estimator attains the expected risk decay
//    n^{-2s/(2s+d)} = n^{-0.75} for s = 3/2, d = 1 random targets.
Result c9_estimation_rate() {
    SmoothnessProfile prof{1.5, 0.0, 1.0, {0.5}};
    BesovParams params;  // p = q = 2
    const int m = 2, reps = 20;
    const double sigma = 0.3;
    const long long risk_points = 4096;
    const uint64_t seed = 2024;

    std::vector<double> xs, ys;
    int ci = 0;
    for (int e = 7; e <= 13; ++e) {
        const long long n = 1LL << e;
        const int kbar = std::max(1, static_cast<int>(std::ceil(std::log2(static_cast<double>(n)) / 4.0)));
        double acc = 0.0;
        for (int r = 0; r < reps; ++r, ++ci) {
            const uint64_t cs = derive_seed(seed, static_cast<uint64_t>(ci) + 1000);
            TargetFunction tf = random_besov(1, m, 1.5, 2.0, 2.0, 4, derive_seed(cs, 0xbe50));
            RegressionSample sample = sample_regression(tf, n, sigma, derive_seed(cs, 2));
            AdaptiveBudget b = plan_budget(std::max(2LL, 1LL << kbar), prof, params, m);
            FittedEstimator est = fit_adaptive_ls(sample, prof, params, b, 2.0);
            acc += empirical_risk(est, tf, risk_points, derive_seed(cs, 3)).risk;
        }
        xs.push_back(static_cast<double>(n));
        ys.push_back(acc / reps);
    }
    const double slope = fit_slope(xs, ys).slope;
    return {std::abs(slope - (-0.75)) < 0.15,
            fmt("mean-risk slope = %.4f over n in {2^7..2^13} (want -0.75 +/- 0.15)", slope)};
}

// ---------------------------------------------------------------------------
// 10. On a sparse rough family the adaptive estimator beats kernel ridge in
//     at least 80%% of cells at the two largest n and decays strictly faster.
Result c10_deep_vs_kernel() {
    SmoothnessProfile prof{1.0, 0.0, 1.0, {0.5}};
    BesovParams params;  // estimator exponents; the family itself uses p = 1 scaling
    const int m = 2, reps = 20;
    const double sigma = 0.2;
    const long long risk_points = 4096;
    const uint64_t seed = 2024;

    std::vector<double> xs, yd, yk, winfrac;
    int ci = 0;
    for (int e = 9; e <= 13; ++e) {
        const long long n = 1LL << e;
        const int kbar = std::max(1, static_cast<int>(std::ceil(std::log2(static_cast<double>(n)) / 3.0)));
        double ad = 0.0, kr = 0.0;
        int wins = 0;
        for (int r = 0; r < reps; ++r, ++ci) {
            const uint64_t cs = derive_seed(seed, static_cast<uint64_t>(ci) + 1000);
            TargetFunction tf = one_hot_family(prof, 1.0, m, kbar, derive_seed(cs, 0x0e07));
            RegressionSample sample = sample_regression(tf, n, sigma, derive_seed(cs, 2));
            AdaptiveBudget b = plan_budget(std::max(2LL, 1LL << kbar), prof, params, m);
            FittedEstimator deep = fit_adaptive_ls(sample, prof, params, b, 1.0);
            const double rd = empirical_risk(deep, tf, risk_points, derive_seed(cs, 3)).risk;
            FittedEstimator lin = fit_kernel_ridge(sample);
            const double rl = empirical_risk(lin, tf, risk_points, derive_seed(cs, 3)).risk;
            ad += rd;
            kr += rl;
            if (rd < rl) ++wins;
        }
        xs.push_back(static_cast<double>(n));
        yd.push_back(ad / reps);
        yk.push_back(kr / reps);
        winfrac.push_back(wins / static_cast<double>(reps));
    }
    const double sd = fit_slope(xs, yd).slope;
    const double sk = fit_slope(xs, yk).slope;
    const size_t nw = winfrac.size();
    const bool wins_ok = winfrac[nw - 1] >= 0.8 && winfrac[nw - 2] >= 0.8;
    return {wins_ok && sd < sk,
            fmt("win fraction at two largest n = %.2f/%.2f (>= 0.80), slopes deep %.3f < kernel %.3f",
                winfrac[nw - 2], winfrac[nw - 1], sd, sk)};
}

// ---------------------------------------------------------------------------
// 11. The command-line rate tables are byte-identical across runs, put the
//     variable-exponent curve below the fixed one everywhere, and decay
//     strictly faster than the fixed-exponent rate -2s/(2s+d).
Result c11_cli_rate_curves() {
    namespace fs = std::filesystem;
    const std::string cli = VARBESOV_CLI_PATH;
    if (cli.empty()) return {false, "command-line binary path not configured"};
    const fs::path dir_a = "acceptance-c11-a", dir_b = "acceptance-c11-b";
    std::error_code ec;
    fs::remove_all(dir_a, ec);
    fs::remove_all(dir_b, ec);
    for (const fs::path& dir : {dir_a, dir_b}) {
        const std::string cmd = cli + " rates --out " + dir.string() + " >/dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) return {false, "rates command failed: " + cmd};
    }

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string csv_a = slurp(dir_a / "rates.csv");
    const std::string csv_b = slurp(dir_b / "rates.csv");
    if (csv_a.empty()) return {false, "rates.csv missing or empty"};
    if (csv_a != csv_b) return {false, "rates.csv differs between two identical runs"};

    std::vector<std::pair<double, double>> deep, fixed;
    std::istringstream in(csv_a);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line == "n,curve,value") continue;
        const size_t p1 = line.find(','), p2 = line.find(',', p1 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos) continue;
        const double n = std::stod(line.substr(0, p1));
        const std::string curve = line.substr(p1 + 1, p2 - p1 - 1);
        const double v = std::stod(line.substr(p2 + 1));
        if (curve == "deep_variable") deep.push_back({n, v});
        if (curve == "besov_fixed") fixed.push_back({n, v});
    }
    if (deep.size() != fixed.size() || deep.size() < 3)
        return {false, fmt("unexpected curve sizes: %zu vs %zu", deep.size(), fixed.size())};

    int above = 0;
    std::vector<double> xs, ys;
    for (size_t i = 0; i < deep.size(); ++i) {
        if (deep[i].first != fixed[i].first) return {false, "curve grids disagree"};
        if (!(deep[i].second < fixed[i].second)) ++above;
        xs.push_back(deep[i].first);
        ys.push_back(deep[i].second);
    }
    const double slope = fit_slope(xs, ys).slope;
    const double s = 1.0, d = 15.0;
    const double fixed_rate = -2.0 * s / (2.0 * s + d);
    fs::remove_all(dir_a, ec);
    fs::remove_all(dir_b, ec);
    return {above == 0 && slope < fixed_rate,
            fmt("byte-identical runs, variable curve below fixed at %zu/%zu points, slope %.4f < %.4f",
                deep.size() - above, deep.size(), slope, fixed_rate)};
}

}  // namespace

int main() {
    struct Entry {
        const char* name;
        Result (*fn)();
    };
    const Entry entries[] = {
        {"partition-of-unity", c1_partition_of_unity},
        {"polynomial-reproduction", c2_polynomial_reproduction},
        {"projection-error-decay", c3_projection_error_decay},
        {"adaptive-vs-uniform", c4_adaptive_vs_uniform},
        {"bspline-network", c5_bspline_network},
        {"product-network", c6_product_network},
        {"compile-fidelity", c7_compile_fidelity},
        {"covering-bound-oracle", c8_covering_bound_oracle},
        {"estimation-rate", c9_estimation_rate},
        {"deep-vs-kernel", c10_deep_vs_kernel},
        {"cli-rate-curves", c11_cli_rate_curves},
    };
    const int total = static_cast<int>(sizeof(entries) / sizeof(entries[0]));
    int passed = 0;
    for (int i = 0; i < total; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Result r;
        try {
            r = entries[i].fn();
        } catch (const std::exception& ex) {
            r = {false, std::string("exception: ") + ex.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%2d/%d] %s %s (%s) [%.1fs]\n", i + 1, total, r.pass ? "PASS" : "FAIL",
                    entries[i].name, r.detail.c_str(), secs);
        std::fflush(stdout);
        if (r.pass) ++passed;
    }
    std::printf("acceptance: %d/%d passed\n", passed, total);
    return passed == total ? 0 : 1;
}
