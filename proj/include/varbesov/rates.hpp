#pragma once

#include "varbesov/common.hpp"

namespace varbesov {

/// nu = d (1/p - 1/2)_+ : the spatial-inhomogeneity penalty appearing in
/// every estimation-rate formula. (The compiler's admissibility constant is
/// an unrelated quantity that happens to share the letter.)
inline double nu_exponent(double p, int d) {
    if (!(p > 0.0)) throw std::invalid_argument("nu_exponent: need p > 0");
    if (d < 1) throw std::invalid_argument("nu_exponent: need d >= 1");
    const double invp = std::isinf(p) ? 0.0 : 1.0 / p;
    return d * std::max(invp - 0.5, 0.0);
}

/// Estimation rate of the deep estimator on the variable-exponent ball:
///   n^{-2s/(2s+d)} (ln n)^{-2(sd - nu d - 3 alpha s)/((2s+d) alpha)}
///                  (ln ln n)^{2d(s - nu)/((2s+d) alpha)},
/// natural logarithms; needs n >= 16 so ln ln n is positive.
inline double estimation_rate_variable(double n, double s, int d, double alpha, double nu) {
    if (!(n >= 16.0)) throw std::invalid_argument("estimation_rate_variable: need n >= 16");
    if (!(s > 0.0) || d < 1 || !(alpha > 0.0) || !(nu >= 0.0))
        throw std::invalid_argument("estimation_rate_variable: need s > 0, d >= 1, alpha > 0, nu >= 0");
    const double dd = static_cast<double>(d);
    const double ln_n = std::log(n);
    const double lnln_n = std::log(ln_n);
    const double denom = 2.0 * s + dd;
    const double base = -2.0 * s / denom;
    const double lexp = -2.0 * (s * dd - nu * dd - 3.0 * alpha * s) / (denom * alpha);
    const double llexp = 2.0 * dd * (s - nu) / (denom * alpha);
    return std::pow(n, base) * std::pow(ln_n, lexp) * std::pow(lnln_n, llexp);
}

/// Estimation rate over a fixed-exponent ball of smoothness s': n^{-2s'/(2s'+d)}.
inline double estimation_rate_fixed(double n, double s_prime, int d) {
    if (!(n >= 1.0)) throw std::invalid_argument("estimation_rate_fixed: need n >= 1");
    if (!(s_prime > 0.0) || d < 1)
        throw std::invalid_argument("estimation_rate_fixed: need s' > 0, d >= 1");
    return std::pow(n, -2.0 * s_prime / (2.0 * s_prime + static_cast<double>(d)));
}

/// Nonlinear N-term approximation rate on the variable-exponent ball:
///   N^{-s/d} (ln N / ln ln N)^{-(s - delta)/alpha}.
/// alpha = infinity or delta = s reduce it to the pure power N^{-s/d}.
inline double approx_rate_variable(double N, double s, int d, double alpha, double delta) {
    if (!(N >= 16.0)) throw std::invalid_argument("approx_rate_variable: need N >= 16");
    if (!(s > 0.0) || d < 1 || !(alpha > 0.0) || !(delta >= 0.0) || !(delta <= s))
        throw std::invalid_argument(
            "approx_rate_variable: need s > 0, d >= 1, alpha > 0, 0 <= delta <= s");
    const double power = std::pow(N, -s / static_cast<double>(d));
    if (std::isinf(alpha) || delta == s) return power;
    const double ln_n = std::log(N);
    return power * std::pow(ln_n / std::log(ln_n), -(s - delta) / alpha);
}

/// Minimax lower-rate shape for any fixed linear smoother: n^{-2(s-nu)/(2(s-nu)+d)}.
inline double linear_lower_rate(double n, double s, double nu, int d) {
    if (!(n >= 1.0)) throw std::invalid_argument("linear_lower_rate: need n >= 1");
    if (d < 1 || !(nu >= 0.0)) throw std::invalid_argument("linear_lower_rate: need d >= 1, nu >= 0");
    if (!(s > nu)) throw std::invalid_argument("linear_lower_rate: need s > nu");
    const double g = s - nu;
    return std::pow(n, -2.0 * g / (2.0 * g + static_cast<double>(d)));
}

enum class CurveKind { deep_variable, besov_fixed, linear_lower, approx_variable };

inline const char* curve_kind_name(CurveKind k) {
    switch (k) {
        case CurveKind::deep_variable: return "deep_variable";
        case CurveKind::besov_fixed: return "besov_fixed";
        case CurveKind::linear_lower: return "linear_lower";
        case CurveKind::approx_variable: return "approx_variable";
    }
    return "unknown";
}

/// One theoretical curve over a log-spaced grid of sample sizes (or term
/// budgets, for approx_variable). nu is derived from p.
struct RateSpec {
    CurveKind kind = CurveKind::deep_variable;
    double s = 1.0;
    int d = 1;
    double alpha = 1.0;
    double p = 2.0;
    double delta = 0.0;
    double s_fixed = 1.0;  // s' for besov_fixed
    std::vector<double> grid;

    void validate() const {
        if (grid.size() < 1) throw std::invalid_argument("RateSpec: empty grid");
        for (size_t i = 0; i + 1 < grid.size(); ++i)
            if (!(grid[i] < grid[i + 1]))
                throw std::invalid_argument("RateSpec: grid must be strictly increasing");
        if (!std::isfinite(s) || !std::isfinite(delta))
            throw std::invalid_argument("RateSpec: exponents must be finite");
    }
};

inline std::vector<double> rate_curve(const RateSpec& spec) {
    spec.validate();
    std::vector<double> out;
    out.reserve(spec.grid.size());
    const double nu = nu_exponent(spec.p, spec.d);
    for (double n : spec.grid) {
        switch (spec.kind) {
            case CurveKind::deep_variable:
                out.push_back(estimation_rate_variable(n, spec.s, spec.d, spec.alpha, nu));
                break;
            case CurveKind::besov_fixed:
                out.push_back(estimation_rate_fixed(n, spec.s_fixed, spec.d));
                break;
            case CurveKind::linear_lower:
                out.push_back(linear_lower_rate(n, spec.s, nu, spec.d));
                break;
            case CurveKind::approx_variable:
                out.push_back(approx_rate_variable(n, spec.s, spec.d, spec.alpha, spec.delta));
                break;
        }
    }
    return out;
}

/// count geometrically spaced values from lo to hi inclusive.
inline std::vector<double> log_spaced_grid(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("log_spaced_grid: need 0 < lo < hi");
    if (count < 2) throw std::invalid_argument("log_spaced_grid: need count >= 2");
    std::vector<double> g(static_cast<size_t>(count));
    const double l0 = std::log(lo), l1 = std::log(hi);
    for (int i = 0; i < count; ++i)
        g[static_cast<size_t>(i)] = std::exp(l0 + (l1 - l0) * i / (count - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 1.0;
};

/// Ordinary least squares of ln y on ln x: the empirical rate exponent.
inline SlopeFit fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("fit_slope: size mismatch");
    if (xs.size() < 3) throw std::invalid_argument("fit_slope: need at least 3 points");
    const size_t n = xs.size();
    for (size_t i = 0; i < n; ++i) {
        if (!(xs[i] > 0.0)) throw std::invalid_argument("fit_slope: xs must be positive");
        if (!(ys[i] > 0.0)) throw std::invalid_argument("fit_slope: ys must be positive");
        for (size_t j = i + 1; j < n; ++j)
            if (xs[i] == xs[j]) throw std::invalid_argument("fit_slope: xs must be distinct");
    }
    std::vector<double> lx(n), ly(n);
    for (size_t i = 0; i < n; ++i) {
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxx += sqr(lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += sqr(ly[i] - my);
    }
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (syy > 0.0) {
        double sse = 0.0;
        for (size_t i = 0; i < n; ++i) sse += sqr(ly[i] - (f.intercept + f.slope * lx[i]));
        f.r2 = 1.0 - sse / syy;
    }
    return f;
}

}  // namespace varbesov
