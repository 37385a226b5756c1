#pragma once

#include <memory>

#include "varbesov/adaptive.hpp"

namespace varbesov {

/// Synthetic regression target with a recorded class tag, a sup-norm bound,
/// and a membership diagnostic; expansion-backed targets keep their
/// coefficients for exact-norm checks.
struct TargetFunction {
    std::string tag;
    int dim = 1;
    RealFn fn;
    double sup_norm = 0.0;     // recorded bound on |f| over Omega
    double certificate = 1.0;  // class-membership diagnostic constant
    std::shared_ptr<SplineExpansion> expansion;  // set for expansion-backed targets

    double operator()(const std::vector<double>& x) const { return fn(x); }
};

/// Random element of the unit coefficient-norm ball: i.i.d. symmetric draws
/// on levels 0..K_levels, each level rescaled so its weighted contribution is
/// a fixed share of the norm; the total weighted coefficient norm is 1 and
/// the per-level coefficient mass decays by the factor 2^{-(s - d/p)}.
inline TargetFunction random_besov(int d, int m, double s, double p, double q, int K_levels,
                                   std::uint64_t seed) {
    if (d < 1 || m < 1) throw precondition_error("random_besov: need d, m >= 1");
    if (!(s > 0.0)) throw precondition_error("random_besov: need s > 0");
    if (!(p > 0.0) || !(q > 0.0)) throw precondition_error("random_besov: need p, q > 0");
    if (K_levels < 0 || K_levels > 8)
        throw precondition_error("random_besov: K_levels in [0, 8] (memory)");
    long long total = 0;
    for (int k = 0; k <= K_levels; ++k) total += ipow((1LL << k) + m, d);
    if (total > (1LL << 22)) throw precondition_error("random_besov: level grid too large");

    const double dp = std::isinf(p) ? 0.0 : d / p;
    const double level_share =
        std::isinf(q) ? 1.0 : std::pow(static_cast<double>(K_levels + 1), -1.0 / q);

    Rng rng(derive_seed(seed, 0x5e5d));
    auto e = std::make_shared<SplineExpansion>();
    e->m = m;
    e->dim = d;
    for (int k = 0; k <= K_levels; ++k) {
        SplineLayer layer;
        layer.k = k;
        const int lo = -m, hi = (1 << k) - 1;
        DyadicIndex j(static_cast<size_t>(d), lo);
        const long long count = ipow(static_cast<long long>(hi - lo + 1), d);
        for (long long c = 0; c < count; ++c) {
            layer.indices.push_back(j);
            layer.coeffs.push_back(rng.uniform(-1.0, 1.0));
            for (int i = d - 1; i >= 0; --i) {
                if (++j[static_cast<size_t>(i)] <= hi) break;
                j[static_cast<size_t>(i)] = lo;
            }
        }
        double lp = 0.0;
        if (std::isinf(p)) {
            for (double a : layer.coeffs) lp = std::max(lp, std::abs(a));
        } else {
            for (double a : layer.coeffs) lp += std::pow(std::abs(a), p);
            lp = std::pow(lp, 1.0 / p);
        }
        // i.i.d. uniform draws are nonzero with probability 1; guard anyway
        if (!(lp > 0.0)) lp = 1.0;
        const double scale = level_share * std::pow(2.0, -k * (s - dp)) / lp;
        for (auto& a : layer.coeffs) a *= scale;
        e->layers.push_back(std::move(layer));
    }
    e->finalize();

    TargetFunction t;
    t.tag = "random_besov";
    t.dim = d;
    t.expansion = e;
    t.fn = [e](const std::vector<double>& x) { return e->eval(x); };
    // partition of unity per level: |f| <= sum_k max_j |a_{k,j}|
    for (const auto& layer : e->layers) {
        double mx = 0.0;
        for (double a : layer.coeffs) mx = std::max(mx, std::abs(a));
        t.sup_norm += mx;
    }
    t.certificate = 1.0;  // unit coefficient-norm ball by construction
    return t;
}

/// Single dictionary element placed at the rough point: 2^{-k(s - d/p)} M_{k,j},
/// the canonical worst-case member of the smoothness-s ball at level k.
inline TargetFunction scaled_bspline_target(const SmoothnessProfile& prof, double p, int m,
                                            int k, const DyadicIndex& j) {
    prof.validate();
    const int d = prof.dim();
    if (m < 1) throw precondition_error("scaled_bspline_target: need m >= 1");
    if (k < 0) throw precondition_error("scaled_bspline_target: need k >= 0");
    if (static_cast<int>(j.size()) != d)
        throw std::invalid_argument("scaled_bspline_target: index dimension mismatch");
    const double h = std::ldexp(1.0, -k);
    for (int i = 0; i < d; ++i) {
        const double lo = h * j[static_cast<size_t>(i)];
        const double hi = h * (j[static_cast<size_t>(i)] + m + 1);
        if (!(lo < prof.c[static_cast<size_t>(i)] && prof.c[static_cast<size_t>(i)] < hi))
            throw std::invalid_argument(
                "scaled_bspline_target: support must contain the rough point c");
    }
    const double delta_coeff = std::pow(2.0, -k * (prof.s - d / p));

    auto e = std::make_shared<SplineExpansion>();
    e->m = m;
    e->dim = d;
    e->add_term(k, j, delta_coeff);
    e->finalize();

    TargetFunction t;
    t.tag = "scaled_bspline";
    t.dim = d;
    t.expansion = e;
    t.fn = [e](const std::vector<double>& x) { return e->eval(x); };
    const double peak = bspline_univariate(m, (m + 1) / 2.0);
    t.sup_norm = delta_coeff * std::pow(peak, d);
    t.certificate = 1.0;  // coefficient scaled to unit ball level mass
    return t;
}

/// One-bump member with a uniformly random active index: the family whose
/// random location defeats any fixed linear smoother.
inline TargetFunction one_hot_family(const SmoothnessProfile& prof, double p, int m, int k,
                                     std::uint64_t seed) {
    prof.validate();
    const int d = prof.dim();
    if (m < 1 || k < 0) throw precondition_error("one_hot_family: need m >= 1, k >= 0");
    Rng rng(derive_seed(seed, 0x01e0));
    DyadicIndex j(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i)
        j[static_cast<size_t>(i)] = -m + rng.uniform_int((1 << k) + m);
    const double delta_coeff = std::pow(2.0, -k * (prof.s - d / p));

    auto e = std::make_shared<SplineExpansion>();
    e->m = m;
    e->dim = d;
    e->add_term(k, j, delta_coeff);
    e->finalize();

    TargetFunction t;
    t.tag = "one_hot";
    t.dim = d;
    t.expansion = e;
    t.fn = [e](const std::vector<double>& x) { return e->eval(x); };
    const double peak = bspline_univariate(m, (m + 1) / 2.0);
    t.sup_norm = delta_coeff * std::pow(peak, d);
    t.certificate = 1.0;
    return t;
}

/// Observations Y_i = f(X_i) + noise_i with X_i i.i.d. uniform on the unit
/// cube and centered Gaussian noise of standard deviation sigma.
struct RegressionSample {
    std::vector<std::vector<double>> X;
    std::vector<double> Y;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::string design = "uniform";

    int dim() const { return X.empty() ? 0 : static_cast<int>(X.front().size()); }
    long long n() const { return static_cast<long long>(X.size()); }
};

inline RegressionSample sample_regression(const TargetFunction& f, long long n, double sigma,
                                          std::uint64_t seed) {
    if (n < 1) throw precondition_error("sample_regression: need n >= 1");
    if (!(sigma >= 0.0)) throw precondition_error("sample_regression: need sigma >= 0");
    RegressionSample s;
    s.sigma = sigma;
    s.seed = seed;
    Rng xr(derive_seed(seed, 0xA001));
    Rng er(derive_seed(seed, 0xA002));
    s.X.resize(static_cast<size_t>(n));
    s.Y.resize(static_cast<size_t>(n));
    for (long long i = 0; i < n; ++i) {
        std::vector<double> x(static_cast<size_t>(f.dim));
        for (auto& v : x) v = xr.uniform();
        double y = f.fn(x);
        if (sigma > 0.0) y += sigma * er.normal();
        s.X[static_cast<size_t>(i)] = std::move(x);
        s.Y[static_cast<size_t>(i)] = y;
    }
    return s;
}

}  // namespace varbesov
