#pragma once

#include "varbesov/quadrature.hpp"
#include "varbesov/quasi_interp.hpp"
#include "varbesov/smoothness.hpp"

namespace varbesov {

enum class ApproxMode { uniform, adaptive_i, adaptive_ii };

/// Everything the adaptive scheme derives from (N, profile, exponents):
/// base level, refinement box geometry, extra inner levels, and the greedy
/// per-level term counts for the p < r regime.
///
/// Level arithmetic uses base-2 logarithms (so thresholds align with dyadic
/// levels); the one exception is the inner log in N_k, where the natural log
/// of a_k reproduces the intended worked values.
struct AdaptiveBudget {
    long long N = 0;   // term budget driving the plan
    int d = 1;
    int m = 2;         // spline degree of the dictionary
    int kbar = 0;      // base level, N ~ 2^{kbar d}
    double a_k = 1.0;  // refinement threshold
    double t = 0.0;    // half side of the refinement box A
    int N_k = 0;       // extra levels inside A
    double eps_sched = 1.0;
    double lambda = 1.0;
    int k_star = 0;    // theoretical outer greedy cutoff (regime ii)
    int kNk_star = 0;  // theoretical inner greedy cutoff
    int max_level = 14;            // hard cap on realized levels
    bool greedy = false;           // p < r: greedy tails planned
    bool degenerate = false;       // beta = 0, tiny kbar, or A swallows Omega
    bool levels_truncated = false; // greedy cutoffs clipped at max_level
    std::vector<long long> n_k;    // outer counts, k = kbar+1 .. realized k*
    std::vector<long long> m_k;    // inner counts, k = kbar+N_k+1 .. realized cutoff
    long long audit_limit = 0;     // hard cap on stored terms
    double audit_constant = 0.0;   // audit_limit / N

    int inner_level() const { return kbar + N_k; }
    int realized_k_star() const { return kbar + static_cast<int>(n_k.size()); }
    int realized_kNk_star() const { return kbar + N_k + static_cast<int>(m_k.size()); }
};

inline AdaptiveBudget plan_budget(long long N, const SmoothnessProfile& prof,
                                  const BesovParams& params, int m = 2, double lambda = 1.0,
                                  double eps_sched = 0.0, int max_level = 14) {
    prof.validate();
    params.validate();
    if (m < 1) throw precondition_error("plan_budget: spline degree must be >= 1");
    if (lambda <= 0.0) throw precondition_error("plan_budget: lambda must be positive");
    int d = prof.dim();
    if (N < (1LL << d)) throw precondition_error("plan_budget: need N >= 2^d");
    double s = prof.s;
    double delta = params.delta(d);
    if (!(s > delta))
        throw precondition_error("plan_budget: require s > delta = d(1/p - 1/r)_+");

    AdaptiveBudget b;
    b.N = N;
    b.d = d;
    b.m = m;
    b.lambda = lambda;
    b.max_level = max_level;
    b.kbar = static_cast<int>(std::llround(std::log2(static_cast<double>(N)) / d));
    b.greedy = delta > 0.0;

    if (prof.beta == 0.0 || b.kbar < 2) {
        b.degenerate = true;  // flat profile (or no room for levels): no refinement box
    } else {
        double kb = static_cast<double>(b.kbar);
        b.a_k = std::pow(kb / std::log2(kb), (s - delta) / prof.alpha);
        b.t = std::pow(std::log2(b.a_k) / (prof.beta * kb), 1.0 / prof.alpha);
        double nk = std::ceil(std::log2(kb / std::log(b.a_k)) / prof.alpha);
        b.N_k = std::max(0, static_cast<int>(nk));
        if (b.t >= std::sqrt(static_cast<double>(d))) {
            // refinement box swallows Omega: degenerate budget, no inner levels
            b.degenerate = true;
            b.N_k = 0;
        }
        if (b.kbar + b.N_k > max_level) {
            b.N_k = std::max(0, max_level - b.kbar);
            b.levels_truncated = true;
        }
    }

    if (eps_sched > 0.0) {
        b.eps_sched = eps_sched;
    } else if (delta > 0.0) {
        b.eps_sched = std::clamp(d * (s - delta) / (2.0 * delta), 0.05, 10.0);
    } else {
        b.eps_sched = 1.0;
    }

    if (b.greedy) {
        double base = lambda * std::ldexp(1.0, b.kbar * d);
        b.k_star = static_cast<int>(std::ceil(std::log2(base) / b.eps_sched)) + b.kbar;
        b.kNk_star = b.k_star + b.N_k;
        int out_hi = std::min(b.k_star, max_level);
        int in_hi = std::min(b.kNk_star, max_level);
        if (out_hi < b.k_star || in_hi < b.kNk_star) b.levels_truncated = true;
        for (int k = b.kbar + 1; k <= out_hi; ++k)
            b.n_k.push_back(static_cast<long long>(
                std::ceil(base * std::pow(2.0, -b.eps_sched * (k - b.kbar)))));
        if (!b.degenerate)
            for (int k = b.kbar + b.N_k + 1; k <= in_hi; ++k)
                b.m_k.push_back(static_cast<long long>(
                    std::ceil(base * std::pow(2.0, -b.eps_sched * (k - b.kbar - b.N_k)))));
    }

    // Stored-term cap: outer base + inner base bound + planned tails.
    long long limit = ipow((1LL << b.kbar) + m, d);
    if (!b.degenerate && b.N_k >= 0 && b.t > 0.0) {
        double side = 2.0 * b.t * std::ldexp(1.0, b.kbar + b.N_k);
        limit += ipow(static_cast<long long>(std::ceil(side)) + m + 2, d);
    }
    for (long long c : b.n_k) limit += c;
    for (long long c : b.m_k) limit += c;
    b.audit_limit = limit;
    b.audit_constant = static_cast<double>(limit) / static_cast<double>(N);
    return b;
}

/// The refinement box A = [c - t, c + t]^d clipped to Omega.
inline Box refinement_region(const AdaptiveBudget& budget, const SmoothnessProfile& prof) {
    int d = budget.d;
    std::vector<double> lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
        lo[i] = prof.c[i] - budget.t;
        hi[i] = prof.c[i] + budget.t;
    }
    return Box(lo, hi).intersect(Box::unit_cube(d));
}

namespace detail {

inline SplineExpansion greedy_core(const SplineExpansion& qk, long long count,
                                   const std::function<bool(const DyadicIndex&)>& keep,
                                   const std::optional<Box>& region_tag) {
    if (qk.layers.size() != 1)
        throw std::invalid_argument("greedy_select: expects a single-level expansion");
    const SplineLayer& layer = qk.layers[0];
    std::vector<size_t> cand;
    for (size_t i = 0; i < layer.size(); ++i)
        if (keep(layer.indices[i])) cand.push_back(i);
    std::sort(cand.begin(), cand.end(), [&](size_t a, size_t b) {
        double va = std::abs(layer.coeffs[a]), vb = std::abs(layer.coeffs[b]);
        if (va != vb) return va > vb;
        return layer.indices[a] < layer.indices[b];
    });
    if (count < static_cast<long long>(cand.size())) cand.resize(static_cast<size_t>(count));

    SplineExpansion out;
    out.m = qk.m;
    out.dim = qk.dim;
    SplineLayer sel;
    sel.k = layer.k;
    sel.region = region_tag;
    for (size_t i : cand) {
        sel.indices.push_back(layer.indices[i]);
        sel.coeffs.push_back(layer.coeffs[i]);
    }
    out.layers.push_back(std::move(sel));
    out.finalize();
    return out;
}

}  // namespace detail

/// The `count` largest-magnitude terms among indices active on A
/// (ties broken lexicographically in j).
inline SplineExpansion greedy_select(const SplineExpansion& qk, long long count, const Box& A) {
    if (count < 0) throw std::invalid_argument("greedy_select: count must be >= 0");
    int m = qk.m, k = qk.layers.empty() ? 0 : qk.layers[0].k;
    std::vector<std::pair<int, int>> rng(qk.dim);
    bool empty = A.empty();
    if (!empty)
        for (int i = 0; i < qk.dim; ++i) {
            rng[i] = active_range_1d(m, k, A.lo[i], A.hi[i]);
            if (rng[i].second < rng[i].first) empty = true;
        }
    auto keep = [&](const DyadicIndex& j) {
        if (empty) return false;
        for (size_t i = 0; i < j.size(); ++i)
            if (j[i] < rng[i].first || j[i] > rng[i].second) return false;
        return true;
    };
    return detail::greedy_core(qk, count, keep, A);
}

/// The `count` largest-magnitude terms whose support is NOT contained in A,
/// i.e. the terms that matter on the complement of the refinement box.
inline SplineExpansion greedy_select_outside(const SplineExpansion& qk, long long count,
                                             const Box& A) {
    if (count < 0) throw std::invalid_argument("greedy_select_outside: count must be >= 0");
    int m = qk.m, k = qk.layers.empty() ? 0 : qk.layers[0].k;
    double h = std::ldexp(1.0, -k);
    auto keep = [&](const DyadicIndex& j) {
        if (A.empty()) return true;
        for (size_t i = 0; i < j.size(); ++i) {
            double lo = h * j[i], hi = h * (j[i] + m + 1);
            if (lo < A.lo[i] || hi > A.hi[i]) return true;  // pokes out of A
        }
        return false;
    };
    return detail::greedy_core(qk, count, keep, std::nullopt);
}

/// Two-piece spline approximant: `inner` on the refinement box, `outer`
/// elsewhere. An empty region means `outer` everywhere.
struct PiecewiseSplineApprox {
    Box region;
    SplineExpansion outer;
    SplineExpansion inner;

    // Plan metadata, filled by approximate(); hand-assembled approximants
    // leave has_plan false (no certified budget attached).
    SmoothnessProfile prof;
    BesovParams params;
    AdaptiveBudget budget;
    bool has_plan = false;

    double eval(const std::vector<double>& x) const {
        if (!region.empty() && region.contains(x)) return inner.eval(x);
        return outer.eval(x);
    }

    size_t term_count() const { return outer.term_count() + inner.term_count(); }
};

/// Build the approximant for the planned budget.
///   uniform     : Q_kbar globally (region ignored)
///   adaptive_i  : Q_kbar outside A, Q_{kbar+N_k} on A        (needs p >= r)
///   adaptive_ii : adaptive_i plus greedy detail tails         (needs p < r)
inline PiecewiseSplineApprox approximate(const RealFn& f, const SmoothnessProfile& prof,
                                         const BesovParams& params, const AdaptiveBudget& budget,
                                         ApproxMode mode) {
    int d = budget.d, m = budget.m;
    if (prof.dim() != d) throw precondition_error("approximate: profile/budget dimension mismatch");
    double delta = params.delta(d);
    if (mode == ApproxMode::adaptive_i && delta > 0.0)
        throw precondition_error("approximate: adaptive_i requires p >= r (delta = 0)");
    if (mode == ApproxMode::adaptive_ii && delta == 0.0)
        throw precondition_error("approximate: adaptive_ii requires p < r (delta > 0)");

    PiecewiseSplineApprox fn;
    fn.prof = prof;
    fn.params = params;
    fn.budget = budget;
    fn.has_plan = true;
    fn.outer = project(f, m, budget.kbar, d);
    if (mode == ApproxMode::uniform) return fn;

    bool refine = !budget.degenerate && budget.t > 0.0;
    Box A = refine ? refinement_region(budget, prof) : Box();
    SplineExpansion inner_fit;  // unpruned fit on the padded box, reused for tails
    Box pad;
    if (refine && !A.empty()) {
        fn.region = A;
        double margin = (m + 1) * std::ldexp(1.0, -budget.inner_level());
        std::vector<double> lo(d), hi(d);
        for (int i = 0; i < d; ++i) {
            lo[i] = A.lo[i] - margin;
            hi[i] = A.hi[i] + margin;
        }
        pad = Box(lo, hi).intersect(Box::unit_cube(d));
        inner_fit = project(f, m, budget.inner_level(), d, &pad);
        fn.inner = greedy_select(inner_fit, static_cast<long long>(inner_fit.term_count()), A);
        fn.inner.layers[0].region = A;
    }

    if (mode == ApproxMode::adaptive_ii) {
        // outer tails: globally computed details, restricted away from A
        SplineExpansion prev = fn.outer;
        for (size_t i = 0; i < budget.n_k.size(); ++i) {
            int k = budget.kbar + 1 + static_cast<int>(i);
            SplineExpansion qk = project(f, m, k, d);
            SplineExpansion det;
            det.m = m;
            det.dim = d;
            det.layers.push_back(detail_layer(qk, prev));
            SplineExpansion sel = greedy_select_outside(det, budget.n_k[i], A);
            if (!sel.layers[0].coeffs.empty()) fn.outer.layers.push_back(sel.layers[0]);
            prev = std::move(qk);
        }
        fn.outer.finalize();

        // inner tails: details of padded-box fits, restricted to A
        if (!A.empty()) {
            SplineExpansion prev_in = inner_fit;
            for (size_t i = 0; i < budget.m_k.size(); ++i) {
                int k = budget.inner_level() + 1 + static_cast<int>(i);
                SplineExpansion qk = project(f, m, k, d, &pad);
                SplineExpansion det;
                det.m = m;
                det.dim = d;
                det.layers.push_back(detail_layer(qk, prev_in));
                SplineExpansion sel = greedy_select(det, budget.m_k[i], A);
                if (!sel.layers[0].coeffs.empty()) fn.inner.layers.push_back(sel.layers[0]);
                prev_in = std::move(qk);
            }
            fn.inner.finalize();
        }
    }

    if (budget.audit_limit > 0 &&
        static_cast<long long>(fn.term_count()) > budget.audit_limit)
        throw audit_error("approximate: stored terms exceed the planned budget cap");
    return fn;
}

/// Quadrature plan for error reports: cells of side 2^{-(finest level + extra)}
/// per piece, capped at 2^{-max_cell_level}.
struct ErrorQuadSpec {
    int extra_levels = 3;
    int max_cell_level = 12;
    int gl_order = 4;
};

/// L_r distance between f and the piecewise approximant, by region-split
/// composite Gauss-Legendre quadrature (r = infinity: max over all nodes).
inline double error_report(const RealFn& f, const PiecewiseSplineApprox& fn, double r,
                           const ErrorQuadSpec& spec = {}) {
    if (!(r > 0.0)) throw std::invalid_argument("error_report: r must be positive");
    int d = fn.outer.dim;
    Box omega = Box::unit_cube(d);
    bool rinf = std::isinf(r);

    auto cell_for = [&](const SplineExpansion& e) {
        int lvl = std::min(e.finest_level() + spec.extra_levels, spec.max_cell_level);
        return std::ldexp(1.0, -lvl);
    };
    auto piece_norm = [&](const SplineExpansion& e, const Box& box) {
        auto g = [&](const std::vector<double>& x) { return f(x) - e.eval(x); };
        if (rinf) {
            double mx = 0.0;
            integrate_box([&](const std::vector<double>& x) {
                mx = std::max(mx, std::abs(g(x)));
                return 0.0;
            }, box, cell_for(e), spec.gl_order);
            return mx;
        }
        if (r == 2.0)
            return integrate_box([&](const std::vector<double>& x) { return sqr(g(x)); },
                                 box, cell_for(e), spec.gl_order);
        return integrate_box([&](const std::vector<double>& x) {
            return std::pow(std::abs(g(x)), r);
        }, box, cell_for(e), spec.gl_order);
    };

    double acc = 0.0;
    if (fn.region.empty()) {
        acc = piece_norm(fn.outer, omega);
    } else {
        for (const Box& piece : subtract_box({omega}, fn.region))
            if (rinf)
                acc = std::max(acc, piece_norm(fn.outer, piece));
            else
                acc += piece_norm(fn.outer, piece);
        Box a = fn.region.intersect(omega);
        if (rinf)
            acc = std::max(acc, piece_norm(fn.inner, a));
        else
            acc += piece_norm(fn.inner, a);
    }
    if (rinf) return acc;
    if (r == 2.0) return std::sqrt(std::max(acc, 0.0));
    return std::pow(std::max(acc, 0.0), 1.0 / r);
}

/// Size of the exponent gain the adaptive schedule is equivalent to:
///   eps = log( (log N / log log N)^{(s-delta) d / alpha} ) / log N,
/// natural logarithms throughout.
inline double epsilon_equivalent(long long N, double s, double delta, int d, double alpha) {
    if (N < 16) throw std::invalid_argument("epsilon_equivalent: need N >= 16");
    double ln_n = std::log(static_cast<double>(N));
    return (s - delta) * d / alpha * std::log(ln_n / std::log(ln_n)) / ln_n;
}

}  // namespace varbesov
