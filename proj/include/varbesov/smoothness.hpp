#pragma once

#include <functional>

#include "varbesov/common.hpp"

namespace varbesov {

using RealFn = std::function<double(const std::vector<double>&)>;

/// Radial smoothness exponent s(x) = s + beta * ||x - c||_2^alpha.
/// The minimum s is attained at x = c; over a box the maximum sits at the
/// corner farthest from c.
struct SmoothnessProfile {
    double s = 1.0;
    double beta = 0.0;
    double alpha = 1.0;
    std::vector<double> c;

    int dim() const { return static_cast<int>(c.size()); }

    void validate() const {
        if (s <= 0.0) throw precondition_error("SmoothnessProfile: base smoothness must be positive");
        if (beta < 0.0) throw precondition_error("SmoothnessProfile: beta must be nonnegative");
        if (alpha <= 0.0) throw precondition_error("SmoothnessProfile: alpha must be positive");
        if (c.empty()) throw precondition_error("SmoothnessProfile: center point required");
    }

    double operator()(const std::vector<double>& x) const {
        if (beta == 0.0) return s;
        double d2 = 0.0;
        for (size_t i = 0; i < c.size(); ++i) d2 += sqr(x[i] - c[i]);
        return s + beta * std::pow(std::sqrt(d2), alpha);
    }

    double s_min() const { return s; }

    double s_max(const Box& omega) const {
        if (beta == 0.0) return s;
        double d2 = 0.0;
        for (int i = 0; i < omega.dim(); ++i) {
            double far = std::max(std::abs(omega.lo[i] - c[i]), std::abs(omega.hi[i] - c[i]));
            d2 += sqr(far);
        }
        return s + beta * std::pow(std::sqrt(d2), alpha);
    }
};

/// Difference order used by the modulus of smoothness: floor(s_max) + 1,
/// the smallest integer strictly above the largest smoothness exponent.
inline int difference_order(double s_max) {
    return static_cast<int>(std::floor(s_max)) + 1;
}

/// Integrability exponents of the function class and of the error norm.
/// Any of p, q, r may be infinity.
struct BesovParams {
    double p = 2.0;
    double q = 2.0;
    double r = 2.0;  // exponent of the norm the error is measured in
    int r_diff = 2;  // difference order; keep > sup s(x)

    static double inv(double e) { return std::isinf(e) ? 0.0 : 1.0 / e; }

    /// delta = d(1/p - 1/r)_+ : the price of measuring error in a stronger norm.
    double delta(int d) const { return d * std::max(inv(p) - inv(r), 0.0); }

    /// nu = d(1/p - 1/2)_+ : the spatial-inhomogeneity penalty in L2 risk.
    double nu(int d) const { return d * std::max(inv(p) - 0.5, 0.0); }

    void validate() const {
        if (!(p > 0.0) || !(q > 0.0) || !(r > 0.0))
            throw precondition_error("BesovParams: p, q, r must be positive");
        if (r_diff < 1) throw precondition_error("BesovParams: difference order must be >= 1");
    }
};

struct LogHolderReport {
    bool pass = true;
    double c_log = 0.0;     // threshold the check ran against
    double worst = 0.0;     // max |s(x)-s(y)| * log(e + 1/||x-y||)
    std::vector<double> x;  // maximizing pair
    std::vector<double> y;
};

/// Verify |s(x)-s(y)| * log(e + 1/||x-y||_2) <= c_log over all pairs of a
/// tensor grid with `grid_res` points per axis (endpoints included).
inline LogHolderReport check_log_holder(const RealFn& sfun, int d, int grid_res, double c_log) {
    if (c_log <= 0.0) throw std::invalid_argument("check_log_holder: c_log must be positive");
    if (grid_res < 2 || d < 1) throw std::invalid_argument("check_log_holder: need grid_res >= 2, d >= 1");
    long long npts = ipow(grid_res, d);
    if (npts > (1LL << 13))
        throw precondition_error("check_log_holder: grid too large; lower the resolution");

    std::vector<std::vector<double>> pts;
    pts.reserve(static_cast<size_t>(npts));
    std::vector<int> gi(d, 0);
    while (true) {
        std::vector<double> x(d);
        for (int i = 0; i < d; ++i) x[i] = static_cast<double>(gi[i]) / (grid_res - 1);
        pts.push_back(std::move(x));
        int axis = d - 1;
        while (axis >= 0 && ++gi[axis] == grid_res) gi[axis--] = 0;
        if (axis < 0) break;
    }
    std::vector<double> sv(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) sv[i] = sfun(pts[i]);

    LogHolderReport rep;
    rep.c_log = c_log;
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j) {
            double d2 = 0.0;
            for (int a = 0; a < d; ++a) d2 += sqr(pts[i][a] - pts[j][a]);
            double dist = std::sqrt(d2);
            double v = std::abs(sv[i] - sv[j]) * std::log(std::exp(1.0) + 1.0 / dist);
            if (v > rep.worst) {
                rep.worst = v;
                rep.x = pts[i];
                rep.y = pts[j];
            }
        }
    rep.pass = rep.worst <= c_log;
    return rep;
}

inline LogHolderReport check_log_holder(const SmoothnessProfile& prof, int grid_res, double c_log) {
    return check_log_holder([&](const std::vector<double>& x) { return prof(x); },
                            prof.dim(), grid_res, c_log);
}

/// Sampling effort for the Monte-Carlo modulus of smoothness.
struct ModulusBudget {
    int directions = 256;   // random unit directions; the 2d signed axis directions are always added
    int radii = 8;          // step lengths tried per direction: t*g/radii, g = 1..radii
    int quad_points = 2048; // Monte-Carlo points for the L_p integral over the domain
    uint64_t seed = 7771;

    void validate() const {
        if (directions <= 0 || radii <= 0 || quad_points <= 0)
            throw std::invalid_argument("ModulusBudget: all budget fields must be positive");
    }
};

namespace detail {

/// r-th forward difference with the boundary convention: zero unless both
/// x and x + r h lie in the box.
inline double forward_difference(const RealFn& f, const std::vector<double>& x,
                                 const std::vector<double>& h, int r, const Box& omega,
                                 std::vector<double>& xbuf) {
    int d = omega.dim();
    for (int i = 0; i < d; ++i) {
        double e = x[i] + r * h[i];
        if (e < omega.lo[i] || e > omega.hi[i]) return 0.0;
        if (x[i] < omega.lo[i] || x[i] > omega.hi[i]) return 0.0;
    }
    double acc = 0.0;
    double sign = (r % 2 == 0) ? 1.0 : -1.0;  // (-1)^{r-i} starting at i = 0
    for (int i = 0; i <= r; ++i) {
        for (int a = 0; a < d; ++a) xbuf[a] = x[a] + i * h[a];
        acc += sign * binom(r, i) * f(xbuf);
        sign = -sign;
    }
    return acc;
}

/// Shared core of modulus / variable_modulus. `weights` (optional) holds a
/// per-quadrature-point factor applied to the difference before taking norms.
inline double modulus_core(const RealFn& f, int r, double p, double t, const Box& omega,
                           const ModulusBudget& budget, const std::vector<double>* weights,
                           const std::vector<std::vector<double>>& pts) {
    int d = omega.dim();
    double vol = omega.volume();
    int npts = static_cast<int>(pts.size());

    // direction pool: signed axis directions first, then seeded random ones
    std::vector<std::vector<double>> dirs;
    for (int a = 0; a < d; ++a)
        for (int sgn : {+1, -1}) {
            std::vector<double> u(d, 0.0);
            u[a] = sgn;
            dirs.push_back(std::move(u));
        }
    Rng drng(derive_seed(budget.seed, 1));
    for (int b = 0; b < budget.directions; ++b) {
        std::vector<double> u(d);
        double n2 = 0.0;
        do {
            n2 = 0.0;
            for (int a = 0; a < d; ++a) {
                u[a] = drng.normal();
                n2 += sqr(u[a]);
            }
        } while (n2 == 0.0);
        double inv = 1.0 / std::sqrt(n2);
        for (int a = 0; a < d; ++a) u[a] *= inv;
        dirs.push_back(u);
    }

    double best = 0.0;
    std::vector<double> h(d), xbuf(d);
    const bool pinf = std::isinf(p);
    for (const auto& u : dirs) {
        for (int g = 1; g <= budget.radii; ++g) {
            double rho = t * g / budget.radii;
            for (int a = 0; a < d; ++a) h[a] = rho * u[a];
            double acc = 0.0;
            for (int i = 0; i < npts; ++i) {
                double delta = forward_difference(f, pts[i], h, r, omega, xbuf);
                if (weights) delta *= (*weights)[i];
                double ad = std::abs(delta);
                if (pinf)
                    acc = std::max(acc, ad);
                else if (p == 2.0)
                    acc += ad * ad;
                else
                    acc += std::pow(ad, p);
            }
            double norm;
            if (pinf)
                norm = acc;
            else if (p == 2.0)
                norm = std::sqrt(acc / npts * vol);
            else
                norm = std::pow(acc / npts * vol, 1.0 / p);
            best = std::max(best, norm);
        }
    }
    return best;
}

inline std::vector<std::vector<double>> modulus_points(const Box& omega, const ModulusBudget& budget) {
    int d = omega.dim();
    Rng prng(derive_seed(budget.seed, 0));
    std::vector<std::vector<double>> pts(budget.quad_points, std::vector<double>(d));
    for (auto& x : pts)
        for (int a = 0; a < d; ++a) x[a] = prng.uniform(omega.lo[a], omega.hi[a]);
    return pts;
}

}  // namespace detail

/// Monte-Carlo estimate of the r-th modulus of smoothness
///   omega_{r,p}(f, t) = sup_{||h|| <= t} ||Delta_h^r f||_{L_p(Omega)},
/// maximized over a fixed seeded direction pool and a ladder of step lengths.
inline double modulus(const RealFn& f, int r, double p, double t, const Box& omega,
                      const ModulusBudget& budget = {}) {
    budget.validate();
    if (r < 1) throw std::invalid_argument("modulus: difference order must be >= 1");
    if (!(p > 0.0)) throw std::invalid_argument("modulus: p must be positive");
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("modulus: t must lie in [0, 1]");
    if (t == 0.0) return 0.0;
    auto pts = detail::modulus_points(omega, budget);
    return detail::modulus_core(f, r, p, t, omega, budget, nullptr, pts);
}

/// Variable-exponent modulus: the difference is weighted pointwise by
/// t^{-s(x)} before the L_p norm is taken.
inline double variable_modulus(const RealFn& f, const SmoothnessProfile& prof,
                               const BesovParams& params, double t, const Box& omega,
                               const ModulusBudget& budget = {}) {
    budget.validate();
    params.validate();
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("variable_modulus: t must lie in [0, 1]");
    if (t == 0.0) return 0.0;
    auto pts = detail::modulus_points(omega, budget);
    std::vector<double> w(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) w[i] = std::pow(t, -prof(pts[i]));
    return detail::modulus_core(f, params.r_diff, params.p, t, omega, budget, &w, pts);
}

/// Quadrature plan for the seminorm's integral over step sizes t.
struct SeminormSpec {
    int t_nodes = 64;                       // log-spaced nodes on [t_min, t_max]
    double t_min = 0x1.0p-16;
    double t_max = 1.0;
    ModulusBudget budget{64, 4, 512, 7771};  // lighter default: runs once per node

    void validate() const {
        if (t_nodes < 2) throw std::invalid_argument("SeminormSpec: need at least 2 t-nodes");
        if (!(t_min > 0.0) || !(t_max > t_min) || t_max > 1.0)
            throw std::invalid_argument("SeminormSpec: need 0 < t_min < t_max <= 1");
        budget.validate();
    }
};

struct SeminormResult {
    double value = 0.0;
    std::vector<double> t_grid;
    std::vector<double> omega_star;  // variable modulus at each node
};

/// Numerical variable-exponent Besov seminorm
///   [ int_0^1 (omega*_{r,p}(f,t))^q dt/t ]^{1/q},
/// by the trapezoid rule in log t; q = infinity takes the max over nodes.
inline SeminormResult seminorm(const RealFn& f, const SmoothnessProfile& prof,
                               const BesovParams& params, const Box& omega,
                               const SeminormSpec& spec = {}) {
    spec.validate();
    params.validate();
    SeminormResult res;
    int n = spec.t_nodes;
    double u0 = std::log(spec.t_min), u1 = std::log(spec.t_max);
    double du = (u1 - u0) / (n - 1);
    res.t_grid.resize(n);
    res.omega_star.resize(n);
    for (int i = 0; i < n; ++i) {
        double t = std::exp(u0 + i * du);
        res.t_grid[i] = t;
        res.omega_star[i] = variable_modulus(f, prof, params, t, omega, spec.budget);
    }
    if (std::isinf(params.q)) {
        for (double w : res.omega_star) res.value = std::max(res.value, w);
    } else {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            double wgt = (i == 0 || i == n - 1) ? du / 2.0 : du;
            acc += wgt * std::pow(res.omega_star[i], params.q);
        }
        res.value = std::pow(acc, 1.0 / params.q);
    }
    return res;
}

}  // namespace varbesov
