#pragma once

#include <limits>
#include <sstream>

#include "varbesov/adaptive.hpp"
#include "varbesov/relu_gadgets.hpp"

namespace varbesov {

/// Per-term size constant of the compiled dictionary element:
/// c_{(d,m)} = 2 + 2 d e (2e)^m / sqrt(m).
inline double compile_constant(int d, int m) {
    if (d < 1 || m < 1) throw precondition_error("compile_constant: need d, m >= 1");
    const double e1 = std::exp(1.0);
    return 2.0 + 2.0 * d * e1 * std::pow(2.0 * e1, m) / std::sqrt(static_cast<double>(m));
}

/// Largest accuracy the certified compilation supports for an N-term plan:
///   N^{-[(1/nu_c + 1/d)(d/p - s)_+ + s/d]}
///     * (ln N)^{-(1/alpha)(d/p - s)_+ - 1 - (s - delta)/alpha}
///     * (ln ln N)^{(s - delta)/alpha},
/// nu_c = (1/2) min{ d (s - delta)/delta, 1 } (delta = 0 gives 1/2).
/// Below N = 16 the asymptotic expression is vacuous and +infinity is
/// returned (no constraint).
inline double admissible_epsilon(long long N, int d, double p, double s, double delta,
                                 double alpha) {
    if (d < 1) throw precondition_error("admissible_epsilon: need d >= 1");
    if (!(s > delta)) throw precondition_error("admissible_epsilon: need s > delta");
    if (!(alpha > 0.0)) throw precondition_error("admissible_epsilon: need alpha > 0");
    if (N < 16) return std::numeric_limits<double>::infinity();
    const double ratio = delta > 0.0 ? d * (s - delta) / delta
                                     : std::numeric_limits<double>::infinity();
    const double nu_c = 0.5 * std::min(ratio, 1.0);
    const double gap = std::max(0.0, d / p - s);
    const double ln_n = std::log(static_cast<double>(N));
    const double lnln_n = std::log(ln_n);
    const double npow = -((1.0 / nu_c + 1.0 / d) * gap + s / d);
    const double lpow = -gap / alpha - 1.0 - (s - delta) / alpha;
    const double llpow = (s - delta) / alpha;
    return std::pow(static_cast<double>(N), npow) * std::pow(ln_n, lpow) *
           std::pow(lnln_n, llpow);
}

/// Largest collar width so the ramp region cannot spoil the L_r fidelity:
///   min{ eps^r / (F^r t^{d-1} (d+1)),  t / 2^d }.
inline double xi_limit(double eps, double F, double t, int d, double r) {
    if (!(eps > 0.0)) throw precondition_error("xi_limit: need eps > 0");
    if (!(F > 0.0)) throw precondition_error("xi_limit: need F > 0");
    if (!(t > 0.0)) throw precondition_error("xi_limit: need t > 0");
    if (d < 1) throw precondition_error("xi_limit: need d >= 1");
    if (!(r > 0.0) || std::isinf(r))
        throw precondition_error("xi_limit: need finite r > 0 (volume argument)");
    const double vol = std::pow(eps, r) /
                       (std::pow(F, r) * std::pow(t, d - 1) * (d + 1));
    const double cap = t / std::ldexp(1.0, d);
    return std::min(vol, cap);
}

struct CompileOptions {
    int audit_points_per_axis = 0;  // 0: automatic (2049 / 129 / 33 by dimension)
};

struct CompileReport {
    double target_eps = 0.0;
    double xi = 0.0;
    double eps_admissible = std::numeric_limits<double>::infinity();
    double xi_admissible = std::numeric_limits<double>::infinity();
    double F_used = 1.0;
    double t_low = 0.0, t_high = 0.0;
    long long n_terms = 0, n_inner = 0, n_outer = 0;
    int k_max = 0;
    NetworkStats net_stats;
    long long L_bound = 0;
    long long W_bound = 0;
    long long S_bound = 0;
    double w1 = 0.0;            // per-term width constant 6dm(m+2) + 4d + 2
    double size_constant = 0.0; // compile_constant(d, m)
    double B_formula = 0.0;     // reported alongside, never asserted
    double b_ratio = 0.0;       // measured B / B_formula
    double measured_sup_error = 0.0;
    std::vector<double> worst_point;
    double fidelity_slack = 0.0;       // max over grid of |net-f| - eps * active_sum
    double max_active_coeff_sum = 0.0;
    long long audit_points = 0, collar_skipped = 0;
};

namespace detail {

struct CompiledTerm {
    int k = 0;
    DyadicIndex j;
    double a = 0.0;
    int side = 0;  // 0 whole-domain, 1 refinement box, 2 complement
    std::vector<double> lo, hi;
};

inline void gather_terms(const SplineExpansion& e, int side, std::vector<CompiledTerm>& out) {
    for (const auto& layer : e.layers) {
        const double h = std::ldexp(1.0, -layer.k);
        for (size_t i = 0; i < layer.size(); ++i) {
            CompiledTerm t;
            t.k = layer.k;
            t.j = layer.indices[i];
            t.a = layer.coeffs[i];
            t.side = side;
            t.lo.resize(t.j.size());
            t.hi.resize(t.j.size());
            for (size_t q = 0; q < t.j.size(); ++q) {
                t.lo[q] = h * t.j[q];
                t.hi[q] = h * (t.j[q] + e.m + 1);
            }
            out.push_back(std::move(t));
        }
    }
}

inline ReluNetwork dyadic_rescale(int d, int k, const DyadicIndex& j) {
    SparseLayer l;
    l.rows = d;
    l.cols = d;
    const double scale = std::ldexp(1.0, k);
    for (int i = 0; i < d; ++i) {
        l.add(i, i, scale);
        if (j[static_cast<size_t>(i)] != 0)
            l.add_bias(i, -static_cast<double>(j[static_cast<size_t>(i)]));
    }
    return single_layer_net(l, d);
}

inline std::string format_point(const std::vector<double>& x) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

}  // namespace detail

/// Compile a piecewise spline approximant into one sparse network whose
/// value differs from the approximant by at most eps times the sum of |a|
/// over the terms active at the point (audited on a tensor grid, the
/// indicator collar excluded). Terms tied to the refinement box are gated
/// by ramp indicators of collar width xi; terms outside are complemented so
/// the two sides sum to an exact partition of unity.
inline std::pair<ReluNetwork, CompileReport> compile(const PiecewiseSplineApprox& fn,
                                                     double eps, double xi,
                                                     const CompileOptions& opts = {}) {
    if (!(eps > 0.0 && eps < 1.0)) throw precondition_error("compile: eps in (0,1)");
    const int d = fn.outer.dim;
    const int m = fn.outer.m;
    const bool has_region = !fn.region.empty();
    if (has_region && (fn.inner.dim != d || fn.inner.m != m))
        throw precondition_error("compile: inner/outer expansions disagree in (m, d)");

    std::vector<detail::CompiledTerm> terms;
    detail::gather_terms(fn.outer, has_region ? 2 : 0, terms);
    if (has_region) detail::gather_terms(fn.inner, 1, terms);
    if (terms.empty()) throw precondition_error("compile: empty approximant");

    CompileReport rep;
    rep.target_eps = eps;
    rep.xi = xi;
    rep.n_terms = static_cast<long long>(terms.size());
    double max_abs_a = 0.0;
    for (const auto& t : terms) {
        rep.k_max = std::max(rep.k_max, t.k);
        max_abs_a = std::max(max_abs_a, std::abs(t.a));
        if (t.side == 1) ++rep.n_inner;
        if (t.side == 2) ++rep.n_outer;
    }

    // ---- certified-accuracy gate (only for planned approximants)
    long long n_for_bounds = rep.n_terms;
    if (fn.has_plan) {
        n_for_bounds = std::max(n_for_bounds, fn.budget.N);
        rep.eps_admissible = admissible_epsilon(fn.budget.N, d, fn.params.p, fn.prof.s,
                                                fn.params.delta(d), fn.prof.alpha);
        if (eps > rep.eps_admissible) {
            std::ostringstream os;
            os << "compile: eps = " << eps << " exceeds the admissible accuracy "
               << rep.eps_admissible << " certified for the N = " << fn.budget.N
               << " term plan; lower eps or enlarge the budget";
            throw precondition_error(os.str());
        }
    }

    // ---- region geometry
    std::vector<double> center(static_cast<size_t>(d), 0.0),
        halfw(static_cast<size_t>(d), 0.0);
    if (has_region) {
        if (fn.region.dim() != d) throw precondition_error("compile: region dimension mismatch");
        rep.t_low = std::numeric_limits<double>::infinity();
        for (int i = 0; i < d; ++i) {
            center[static_cast<size_t>(i)] = 0.5 * (fn.region.lo[static_cast<size_t>(i)] +
                                                    fn.region.hi[static_cast<size_t>(i)]);
            halfw[static_cast<size_t>(i)] = 0.5 * (fn.region.hi[static_cast<size_t>(i)] -
                                                   fn.region.lo[static_cast<size_t>(i)]);
            if (!(halfw[static_cast<size_t>(i)] > 0.0))
                throw precondition_error("compile: refinement region has an empty side");
            rep.t_low = std::min(rep.t_low, halfw[static_cast<size_t>(i)]);
            rep.t_high = std::max(rep.t_high, halfw[static_cast<size_t>(i)]);
        }
    }

    // ---- audit grid and the approximant values on it (first pass, also F)
    int npa = opts.audit_points_per_axis > 0 ? opts.audit_points_per_axis
                                             : (d == 1 ? 2049 : d == 2 ? 129 : 33);
    if (npa < 2) npa = 2;
    while (std::pow(static_cast<double>(npa), d) > 4.2e6 && npa > 5) npa = npa / 2 + 1;
    long long total = 1;
    for (int i = 0; i < d; ++i) total *= npa;

    std::vector<double> fvals(static_cast<size_t>(total));
    {
        std::vector<int> idx(static_cast<size_t>(d), 0);
        std::vector<double> x(static_cast<size_t>(d));
        for (long long p = 0; p < total; ++p) {
            for (int i = 0; i < d; ++i)
                x[static_cast<size_t>(i)] =
                    static_cast<double>(idx[static_cast<size_t>(i)]) / (npa - 1);
            fvals[static_cast<size_t>(p)] = fn.eval(x);
            rep.F_used = std::max(rep.F_used, std::abs(fvals[static_cast<size_t>(p)]));
            for (int i = d - 1; i >= 0; --i) {
                if (++idx[static_cast<size_t>(i)] < npa) break;
                idx[static_cast<size_t>(i)] = 0;
            }
        }
    }

    // ---- collar width gate
    if (has_region) {
        const double r_exp = fn.params.r;
        rep.xi_admissible = std::min(xi_limit(eps, rep.F_used, rep.t_high, d, r_exp),
                                     xi_limit(eps, rep.F_used, rep.t_low, d, r_exp));
        if (!(xi > 0.0)) throw precondition_error("compile: need xi > 0 with a refinement region");
        if (xi > rep.xi_admissible) {
            std::ostringstream os;
            os << "compile: xi = " << xi << " exceeds the admissible collar width "
               << rep.xi_admissible << " (eps = " << eps << ", F = " << rep.F_used
               << ", t = " << rep.t_high << ", r = " << r_exp << ")";
            throw precondition_error(os.str());
        }
    }

    // ---- accuracy split and shared templates
    const double eps_m = has_region ? 0.25 * eps : eps;
    const ReluNetwork mbar = build_bspline(m, d, eps_m);
    const int depth_m = mbar.depth();

    ReluNetwork tree_plain, tree_comp;
    std::vector<ReluNetwork> gates;  // per-axis ramps, padded to the dictionary depth
    if (has_region) {
        const double eps_mult = 0.25 * eps;
        const int fac = d + 1;
        const int tlev = detail::ceil_log2_int(fac);
        const double node_eps = eps_mult / std::pow(3.0, tlev);
        const int ktree = detail::sharp_square_stages(node_eps / 6.0);
        tree_plain = detail::mult_tree_stages(fac, ktree, false);
        tree_comp = detail::mult_tree_stages(fac, ktree, true);
        if (tree_plain.depth() != tree_comp.depth())
            throw audit_error("compile: complement tree depth diverged");
        gates.reserve(static_cast<size_t>(d));
        for (int i = 0; i < d; ++i)
            gates.push_back(pad_depth(
                detail::indicator_coord_net(d, i, center[static_cast<size_t>(i)],
                                            halfw[static_cast<size_t>(i)], xi),
                depth_m));
    }

    // ---- assemble the network: equal-depth term subnets, one combining row
    std::vector<ReluNetwork> term_nets;
    term_nets.reserve(terms.size());
    for (const auto& t : terms) {
        ReluNetwork scaled = compose(detail::dyadic_rescale(d, t.k, t.j), mbar);
        if (t.side == 0) {
            term_nets.push_back(std::move(scaled));
            continue;
        }
        std::vector<ReluNetwork> parts;
        parts.reserve(static_cast<size_t>(d) + 1);
        parts.push_back(std::move(scaled));
        for (const auto& g : gates) parts.push_back(g);
        term_nets.push_back(compose(parallel(parts), t.side == 1 ? tree_plain : tree_comp));
    }
    ReluNetwork net = parallel(term_nets);
    term_nets.clear();
    SparseLayer top;
    top.rows = 1;
    top.cols = static_cast<int>(terms.size());
    for (size_t i = 0; i < terms.size(); ++i)
        top.add(0, static_cast<int>(i), terms[i].a);
    net = compose(net, single_layer_net(top, top.cols));

    // ---- size accounting against the certified budget
    rep.net_stats = stats(net);
    rep.w1 = 6.0 * d * m * (m + 2) + 4.0 * d + 2.0;
    rep.size_constant = compile_constant(d, m);
    const int big = std::max(d + 1, m);
    const long long inner_ceil = static_cast<long long>(
        std::ceil(std::log2(std::pow(3.0, big) / (eps * rep.size_constant)) + 5.0));
    rep.L_bound = 4 + 3 * inner_ceil * detail::ceil_log2_int(big);
    rep.W_bound = static_cast<long long>(rep.w1) * n_for_bounds;
    rep.S_bound = (rep.L_bound - 1) * static_cast<long long>(rep.w1 * rep.w1) * n_for_bounds +
                  n_for_bounds;
    if (rep.net_stats.L > rep.L_bound || rep.net_stats.W > rep.W_bound ||
        rep.net_stats.S > rep.S_bound) {
        std::ostringstream os;
        os << "compile: size audit failed: L " << rep.net_stats.L << "/" << rep.L_bound
           << ", W " << rep.net_stats.W << "/" << rep.W_bound << ", S " << rep.net_stats.S
           << "/" << rep.S_bound;
        throw audit_error(os.str());
    }
    rep.B_formula = std::max({2.0 * std::pow(m + 1.0, m), std::ldexp(1.0, rep.k_max + 1),
                              max_abs_a, 4.0, has_region ? 1.0 / xi : 0.0});
    rep.b_ratio = rep.net_stats.B / rep.B_formula;

    // ---- fidelity audit (second pass over the same grid)
    rep.fidelity_slack = -std::numeric_limits<double>::infinity();
    {
        std::vector<int> idx(static_cast<size_t>(d), 0);
        std::vector<double> x(static_cast<size_t>(d));
        for (long long p = 0; p < total; ++p) {
            for (int i = 0; i < d; ++i)
                x[static_cast<size_t>(i)] =
                    static_cast<double>(idx[static_cast<size_t>(i)]) / (npa - 1);
            bool collar = false;
            if (has_region)
                for (int i = 0; i < d && !collar; ++i) {
                    const double dist = std::abs(x[static_cast<size_t>(i)] -
                                                 center[static_cast<size_t>(i)]);
                    collar = dist > halfw[static_cast<size_t>(i)] &&
                             dist < halfw[static_cast<size_t>(i)] + xi;
                }
            if (collar) {
                ++rep.collar_skipped;
            } else {
                ++rep.audit_points;
                const double err = std::abs(eval(net, x) - fvals[static_cast<size_t>(p)]);
                double asum = 0.0;
                for (const auto& t : terms) {
                    bool active = true;
                    for (int i = 0; i < d && active; ++i)
                        active = x[static_cast<size_t>(i)] > t.lo[static_cast<size_t>(i)] &&
                                 x[static_cast<size_t>(i)] < t.hi[static_cast<size_t>(i)];
                    if (active) asum += std::abs(t.a);
                }
                rep.max_active_coeff_sum = std::max(rep.max_active_coeff_sum, asum);
                if (rep.worst_point.empty() || err > rep.measured_sup_error) {
                    rep.measured_sup_error = err;
                    rep.worst_point = x;
                }
                rep.fidelity_slack = std::max(rep.fidelity_slack, err - eps * asum);
            }
            for (int i = d - 1; i >= 0; --i) {
                if (++idx[static_cast<size_t>(i)] < npa) break;
                idx[static_cast<size_t>(i)] = 0;
            }
        }
    }
    const double fp_slack = 1e-8 * (1.0 + rep.max_active_coeff_sum);
    if (rep.fidelity_slack > fp_slack) {
        std::ostringstream os;
        os << "compile: fidelity audit failed at x = " << detail::format_point(rep.worst_point)
           << ": |net - approximant| = " << rep.measured_sup_error
           << " against allowance eps * active coefficient mass (slack "
           << rep.fidelity_slack << ")";
        throw audit_error(os.str());
    }
    return {std::move(net), rep};
}

}  // namespace varbesov
