#pragma once

#include <map>

#include "varbesov/adaptive.hpp"
#include "varbesov/relunet.hpp"
#include "varbesov/synth.hpp"

#ifdef VARBESOV_HAVE_LAPACKE
#include <lapacke.h>
#endif

namespace varbesov {

namespace detail {

/// Solve A X = B for symmetric positive-definite A (column-major n x n, B
/// n x nrhs, overwritten by the solution). Returns 0 on success, or the
/// 1-based index of the first non-positive pivot. On success `diag_ratio`
/// receives (max diag L / min diag L)^2, a cheap condition-number hint.
inline int spd_solve(std::vector<double>& A, int n, std::vector<double>& B, int nrhs,
                     double* diag_ratio = nullptr) {
#ifdef VARBESOV_HAVE_LAPACKE
    int info = LAPACKE_dposv(LAPACK_COL_MAJOR, 'L', n, nrhs, A.data(), n, B.data(),
                             std::max(n, 1));
    if (info != 0) return info;
#else
    // unblocked lower Cholesky, then two triangular solves
    for (int j = 0; j < n; ++j) {
        double s = A[static_cast<size_t>(j) * n + j];
        for (int k = 0; k < j; ++k) s -= sqr(A[static_cast<size_t>(k) * n + j]);
        if (!(s > 0.0)) return j + 1;
        double l = std::sqrt(s);
        A[static_cast<size_t>(j) * n + j] = l;
        for (int i = j + 1; i < n; ++i) {
            double v = A[static_cast<size_t>(j) * n + i];
            for (int k = 0; k < j; ++k)
                v -= A[static_cast<size_t>(k) * n + i] * A[static_cast<size_t>(k) * n + j];
            A[static_cast<size_t>(j) * n + i] = v / l;
        }
    }
    for (int r = 0; r < nrhs; ++r) {
        double* b = B.data() + static_cast<size_t>(r) * n;
        for (int i = 0; i < n; ++i) {
            double v = b[i];
            for (int k = 0; k < i; ++k) v -= A[static_cast<size_t>(k) * n + i] * b[k];
            b[i] = v / A[static_cast<size_t>(i) * n + i];
        }
        for (int i = n - 1; i >= 0; --i) {
            double v = b[i];
            for (int k = i + 1; k < n; ++k) v -= A[static_cast<size_t>(i) * n + k] * b[k];
            b[i] = v / A[static_cast<size_t>(i) * n + i];
        }
    }
#endif
    if (diag_ratio != nullptr) {
        double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
        for (int j = 0; j < n; ++j) {
            double l = A[static_cast<size_t>(j) * n + j];
            dmin = std::min(dmin, l);
            dmax = std::max(dmax, l);
        }
        *diag_ratio = n > 0 ? sqr(dmax / dmin) : 1.0;
    }
    return 0;
}

/// One dictionary element: a level-k tensor B-spline restricted to one side
/// of the refinement region (gate 0: everywhere, 1: inside only, 2: outside
/// only). Gating matches PiecewiseSplineApprox::eval exactly. The design
/// uses the L2-normalized basis 2^{kd/2} M_{k,j} so the ridge penalty acts
/// uniformly across levels; `scale` converts back to raw coefficients.
struct GatedFeature {
    int k = 0;
    DyadicIndex j;
    int gate = 0;
    double scale = 1.0;
};

inline double feature_value(const GatedFeature& g, const Box& region, int m,
                            const std::vector<double>& x) {
    if (g.gate != 0 && !region.empty()) {
        const bool in = region.contains(x);
        if (g.gate == 1 && !in) return 0.0;
        if (g.gate == 2 && in) return 0.0;
    }
    return g.scale * bspline_tensor(m, g.k, g.j, x);
}

}  // namespace detail

enum class EstimatorKind { adaptive_ls, kernel_ridge };

/// A fitted regression function: either a clipped piecewise-spline least
/// squares fit or a kernel-ridge dual expansion. predict() is the estimator.
struct FittedEstimator {
    EstimatorKind kind = EstimatorKind::adaptive_ls;

    // adaptive_ls payload
    PiecewiseSplineApprox spline;
    double F = 1.0;  // clip level

    // kernel_ridge payload
    std::vector<std::vector<double>> centers;
    std::vector<double> dual;
    double bandwidth = 0.0;
    double lambda = 0.0;

    // fit diagnostics
    double ridge_used = 0.0;
    double condition_hint = 1.0;  // squared Cholesky diagonal ratio
    double fit_cost = 0.0;        // deterministic arithmetic cost, GFLOP units

    double predict(const std::vector<double>& x) const {
        if (kind == EstimatorKind::adaptive_ls)
            return std::clamp(spline.eval(x), -F, F);
        double acc = 0.0;
        const double inv2h2 = 1.0 / (2.0 * sqr(bandwidth));
        for (size_t i = 0; i < centers.size(); ++i) {
            double d2 = 0.0;
            for (size_t q = 0; q < x.size(); ++q) d2 += sqr(x[q] - centers[i][q]);
            acc += dual[i] * std::exp(-d2 * inv2h2);
        }
        return acc;
    }
};

/// Least squares over the adaptive spline dictionary the budget plans (base
/// level outside the refinement box, refined level inside, plus stagewise
/// greedy detail levels in the p < r regime), solved by ridge-regularized
/// normal equations and clipped at F.
inline FittedEstimator fit_adaptive_ls(const RegressionSample& sample,
                                       const SmoothnessProfile& prof, const BesovParams& params,
                                       const AdaptiveBudget& budget, double F = 1.0,
                                       double ridge = 0.0) {
    const long long n = sample.n();
    if (n < 1) throw precondition_error("fit_adaptive_ls: need n >= 1");
    if (!(F >= 1.0)) throw precondition_error("fit_adaptive_ls: need clip level F >= 1");
    const int d = budget.d, m = budget.m;
    if (prof.dim() != d || sample.dim() != d)
        throw precondition_error("fit_adaptive_ls: dimension mismatch");
    if (ridge <= 0.0) ridge = 1e-8 * static_cast<double>(n);

    const bool refine = !budget.degenerate && budget.t > 0.0;
    Box region = refine ? refinement_region(budget, prof) : Box();
    if (!region.empty()) {
        bool ok = true;
        for (int i = 0; i < d; ++i)
            if (!(region.lo[i] < region.hi[i])) ok = false;
        if (!ok) region = Box();
    }
    const bool has_region = !region.empty();

    const auto level_scale = [d](int k) { return std::exp2(0.5 * k * d); };
    std::vector<detail::GatedFeature> feats;
    {  // base dictionary at the planned level
        const int lo = -m, hi = (1 << budget.kbar) - 1;
        DyadicIndex j(static_cast<size_t>(d), lo);
        const long long count = ipow(static_cast<long long>(hi - lo + 1), d);
        for (long long c = 0; c < count; ++c) {
            feats.push_back({budget.kbar, j, has_region ? 2 : 0, level_scale(budget.kbar)});
            for (int i = d - 1; i >= 0; --i) {
                if (++j[static_cast<size_t>(i)] <= hi) break;
                j[static_cast<size_t>(i)] = lo;
            }
        }
    }
    size_t n_base = feats.size();
    if (has_region) {  // refined dictionary on the region
        const int ki = budget.inner_level();
        std::vector<std::pair<int, int>> rng(static_cast<size_t>(d));
        for (int i = 0; i < d; ++i)
            rng[static_cast<size_t>(i)] = active_range_1d(m, ki, region.lo[i], region.hi[i]);
        DyadicIndex j(static_cast<size_t>(d));
        for (int i = 0; i < d; ++i) j[static_cast<size_t>(i)] = rng[static_cast<size_t>(i)].first;
        bool any = true;
        for (int i = 0; i < d; ++i)
            if (rng[static_cast<size_t>(i)].second < rng[static_cast<size_t>(i)].first) any = false;
        while (any) {
            feats.push_back({ki, j, 1, level_scale(ki)});
            int axis = d - 1;
            while (axis >= 0 && ++j[static_cast<size_t>(axis)] > rng[static_cast<size_t>(axis)].second) {
                j[static_cast<size_t>(axis)] = rng[static_cast<size_t>(axis)].first;
                --axis;
            }
            if (axis < 0) break;
        }
    }
    if (feats.empty()) throw precondition_error("fit_adaptive_ls: empty dictionary");

    double flops = 0.0;
    auto design_column = [&](const detail::GatedFeature& g, std::vector<double>& col) {
        col.resize(static_cast<size_t>(n));
        for (long long i = 0; i < n; ++i)
            col[static_cast<size_t>(i)] =
                detail::feature_value(g, region, m, sample.X[static_cast<size_t>(i)]);
    };

    double diag_ratio = 1.0;
    double ridge_used = ridge;
    // ridge-LS over the current feature list; returns coefficients and the
    // in-sample predictions. Retries with a stiffer ridge if the Gram matrix
    // loses positive definiteness to rounding.
    auto ridge_fit = [&](const std::vector<detail::GatedFeature>& fs,
                         const std::vector<double>& y, std::vector<double>& coef,
                         std::vector<double>& pred) {
        const int P = static_cast<int>(fs.size());
        std::vector<std::vector<double>> cols(static_cast<size_t>(P));
        for (int c = 0; c < P; ++c) design_column(fs[static_cast<size_t>(c)], cols[static_cast<size_t>(c)]);
        std::vector<double> G(static_cast<size_t>(P) * P, 0.0), rhs(static_cast<size_t>(P), 0.0);
        for (int a = 0; a < P; ++a) {
            for (int b = a; b < P; ++b) {
                double s = 0.0;
                for (long long i = 0; i < n; ++i)
                    s += cols[static_cast<size_t>(a)][static_cast<size_t>(i)] *
                         cols[static_cast<size_t>(b)][static_cast<size_t>(i)];
                G[static_cast<size_t>(a) * P + b] = s;
                G[static_cast<size_t>(b) * P + a] = s;
            }
            double s = 0.0;
            for (long long i = 0; i < n; ++i)
                s += cols[static_cast<size_t>(a)][static_cast<size_t>(i)] * y[static_cast<size_t>(i)];
            rhs[static_cast<size_t>(a)] = s;
        }
        flops += static_cast<double>(n) * P * P + static_cast<double>(P) * P * P / 3.0;
        double r = ridge_used;
        for (int attempt = 0; attempt < 4; ++attempt) {
            std::vector<double> Gr = G;
            for (int a = 0; a < P; ++a) Gr[static_cast<size_t>(a) * P + a] += r;
            coef = rhs;
            if (detail::spd_solve(Gr, P, coef, 1, &diag_ratio) == 0) {
                ridge_used = r;
                pred.assign(static_cast<size_t>(n), 0.0);
                for (int c = 0; c < P; ++c)
                    for (long long i = 0; i < n; ++i)
                        pred[static_cast<size_t>(i)] +=
                            coef[static_cast<size_t>(c)] * cols[static_cast<size_t>(c)][static_cast<size_t>(i)];
                return;
            }
            r *= 100.0;
        }
        throw audit_error("fit_adaptive_ls: normal equations not positive definite after ridge escalation");
    };

    std::vector<double> coef, pred;
    ridge_fit(feats, sample.Y, coef, pred);

    if (budget.greedy && (!budget.n_k.empty() || !budget.m_k.empty())) {
        std::vector<double> resid(static_cast<size_t>(n));
        for (long long i = 0; i < n; ++i)
            resid[static_cast<size_t>(i)] = sample.Y[static_cast<size_t>(i)] - pred[static_cast<size_t>(i)];

        // one stagewise pass: pick the `count` best-scoring level-k details
        // against the current residual, refit just those, update the residual
        auto greedy_level = [&](int k, long long count, int gate) {
            if (count <= 0) return;
            std::map<DyadicIndex, std::pair<double, double>> acc;  // j -> (cross, sq)
            const double ls = level_scale(k);
            const double scale = std::ldexp(1.0, k);
            DyadicIndex j(static_cast<size_t>(d));
            for (long long i = 0; i < n; ++i) {
                const auto& x = sample.X[static_cast<size_t>(i)];
                if (has_region) {
                    const bool in = region.contains(x);
                    if (gate == 1 && !in) continue;
                    if (gate == 2 && in) continue;
                }
                std::vector<int> base(static_cast<size_t>(d));
                for (int q = 0; q < d; ++q)
                    base[static_cast<size_t>(q)] =
                        static_cast<int>(std::floor(scale * x[static_cast<size_t>(q)])) - m;
                std::vector<int> off(static_cast<size_t>(d), 0);
                while (true) {
                    for (int q = 0; q < d; ++q)
                        j[static_cast<size_t>(q)] = base[static_cast<size_t>(q)] + off[static_cast<size_t>(q)];
                    const double v = ls * bspline_tensor(m, k, j, x);
                    if (v != 0.0) {
                        auto& slot = acc[j];
                        slot.first += resid[static_cast<size_t>(i)] * v;
                        slot.second += v * v;
                    }
                    int axis = d - 1;
                    while (axis >= 0 && ++off[static_cast<size_t>(axis)] == m + 1) {
                        off[static_cast<size_t>(axis)] = 0;
                        --axis;
                    }
                    if (axis < 0) break;
                }
                flops += std::pow(m + 1.0, d);
            }
            struct Scored {
                double score;
                DyadicIndex j;
            };
            std::vector<Scored> scored;
            for (const auto& [jj, cs] : acc) {
                if (!(cs.second > 0.0)) continue;
                scored.push_back({sqr(cs.first) / (cs.second + ridge_used), jj});
            }
            std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.j < b.j;
            });
            if (count < static_cast<long long>(scored.size()))
                scored.resize(static_cast<size_t>(count));
            if (scored.empty()) return;

            std::vector<detail::GatedFeature> sel;
            for (const auto& sc : scored) sel.push_back({k, sc.j, gate, ls});
            std::vector<double> c2, p2;
            ridge_fit(sel, resid, c2, p2);
            for (long long i = 0; i < n; ++i) resid[static_cast<size_t>(i)] -= p2[static_cast<size_t>(i)];
            for (auto& g : sel) feats.push_back(std::move(g));
        };

        for (size_t i = 0; i < budget.n_k.size(); ++i)
            greedy_level(budget.kbar + 1 + static_cast<int>(i), budget.n_k[i], has_region ? 2 : 0);
        if (has_region)
            for (size_t i = 0; i < budget.m_k.size(); ++i)
                greedy_level(budget.inner_level() + 1 + static_cast<int>(i), budget.m_k[i], 1);

        if (feats.size() > n_base) ridge_fit(feats, sample.Y, coef, pred);  // joint refit
    }

    FittedEstimator est;
    est.kind = EstimatorKind::adaptive_ls;
    est.F = F;
    est.ridge_used = ridge_used;
    est.condition_hint = diag_ratio;
    est.fit_cost = flops / 1e9;
    est.spline.region = region;
    est.spline.outer.m = m;
    est.spline.outer.dim = d;
    est.spline.inner.m = m;
    est.spline.inner.dim = d;
    for (size_t c = 0; c < feats.size(); ++c) {
        SplineExpansion& dst = feats[c].gate == 1 ? est.spline.inner : est.spline.outer;
        dst.add_term(feats[c].k, feats[c].j, coef[c] * feats[c].scale);
    }
    if (has_region)
        for (auto& layer : est.spline.inner.layers) layer.region = region;
    est.spline.outer.finalize();
    est.spline.inner.finalize();
    est.spline.prof = prof;
    est.spline.params = params;
    est.spline.budget = budget;
    est.spline.has_plan = true;
    return est;
}

/// Gaussian kernel-ridge regression: the representative fixed linear-in-Y
/// smoother. Bandwidth defaults to the median pairwise distance; lambda
/// defaults to the best of a small validation grid. The dual weights solve
/// (K + lambda I) alpha = Y by one positive-definite factorization.
inline FittedEstimator fit_kernel_ridge(const RegressionSample& sample, double bandwidth = 0.0,
                                        double lambda = 0.0) {
    const long long n = sample.n();
    if (n < 1) throw precondition_error("fit_kernel_ridge: need n >= 1");
    const int d = sample.dim();
    double flops = 0.0;

    if (bandwidth <= 0.0) {
        const long long ns = std::min<long long>(n, 512);
        std::vector<double> dists;
        dists.reserve(static_cast<size_t>(ns * (ns - 1) / 2));
        for (long long a = 0; a < ns; ++a)
            for (long long b = a + 1; b < ns; ++b) {
                double d2 = 0.0;
                for (int q = 0; q < d; ++q)
                    d2 += sqr(sample.X[static_cast<size_t>(a)][static_cast<size_t>(q)] -
                              sample.X[static_cast<size_t>(b)][static_cast<size_t>(q)]);
                dists.push_back(std::sqrt(d2));
            }
        flops += static_cast<double>(ns) * ns * d / 2.0;
        if (dists.empty()) {
            bandwidth = 1.0;
        } else {
            std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
            bandwidth = dists[dists.size() / 2];
            if (!(bandwidth > 0.0)) bandwidth = 1.0;
        }
    }

    auto kernel_matrix = [&](const std::vector<std::vector<double>>& pts) {
        const size_t np = pts.size();
        std::vector<double> K(np * np);
        const double inv2h2 = 1.0 / (2.0 * sqr(bandwidth));
        for (size_t a = 0; a < np; ++a) {
            K[a * np + a] = 1.0;
            for (size_t b = a + 1; b < np; ++b) {
                double d2 = 0.0;
                for (int q = 0; q < d; ++q)
                    d2 += sqr(pts[a][static_cast<size_t>(q)] - pts[b][static_cast<size_t>(q)]);
                const double v = std::exp(-d2 * inv2h2);
                K[a * np + b] = v;
                K[b * np + a] = v;
            }
        }
        flops += static_cast<double>(np) * np * (d + 2.0);
        return K;
    };
    auto solve_with = [&](std::vector<double> K, size_t np, std::vector<double> y, double lam,
                          double* ratio) {
        for (size_t a = 0; a < np; ++a) K[a * np + a] += lam;
        double jitter = 1e-12 * static_cast<double>(np);
        for (int attempt = 0;; ++attempt) {
            std::vector<double> Kt = K;
            std::vector<double> al = y;
            flops += std::pow(static_cast<double>(np), 3) / 3.0;
            if (detail::spd_solve(Kt, static_cast<int>(np), al, 1, ratio) == 0) return al;
            if (attempt >= 3)
                throw audit_error(
                    "fit_kernel_ridge: kernel matrix not positive definite after jitter "
                    "(n = " + std::to_string(np) + ", lambda = " + std::to_string(lam) + ")");
            for (size_t a = 0; a < np; ++a) K[a * np + a] += jitter;
            jitter *= 100.0;
        }
    };

    if (lambda <= 0.0) {
        // pick lambda on a deterministic train/validation split of a subsample
        const long long ns = std::min<long long>(n, 2048);
        const long long ntr = std::max<long long>(1, (ns * 4) / 5);
        const long long nva = ns - ntr;
        const double grid[] = {1e-8, 1e-6, 1e-4, 1e-2, 1.0};
        if (nva < 1) {
            lambda = 1e-6 * static_cast<double>(n);
        } else {
            std::vector<std::vector<double>> xtr(sample.X.begin(), sample.X.begin() + ntr);
            std::vector<double> ytr(sample.Y.begin(), sample.Y.begin() + ntr);
            std::vector<double> Ktr = kernel_matrix(xtr);
            const double inv2h2 = 1.0 / (2.0 * sqr(bandwidth));
            double best_err = std::numeric_limits<double>::infinity();
            for (double g : grid) {
                const double lam = g * static_cast<double>(ntr);
                double ratio = 1.0;
                std::vector<double> al = solve_with(Ktr, static_cast<size_t>(ntr), ytr, lam, &ratio);
                double err = 0.0;
                for (long long v = ntr; v < ns; ++v) {
                    double fx = 0.0;
                    for (long long a = 0; a < ntr; ++a) {
                        double d2 = 0.0;
                        for (int q = 0; q < d; ++q)
                            d2 += sqr(sample.X[static_cast<size_t>(v)][static_cast<size_t>(q)] -
                                      sample.X[static_cast<size_t>(a)][static_cast<size_t>(q)]);
                        fx += al[static_cast<size_t>(a)] * std::exp(-d2 * inv2h2);
                    }
                    err += sqr(sample.Y[static_cast<size_t>(v)] - fx);
                }
                flops += static_cast<double>(nva) * ntr * (d + 2.0);
                if (err < best_err) {
                    best_err = err;
                    lambda = lam;
                }
            }
            // rescale the per-sample regularization strength to the full fit
            lambda *= static_cast<double>(n) / static_cast<double>(ntr);
        }
    }

    FittedEstimator est;
    est.kind = EstimatorKind::kernel_ridge;
    est.centers = sample.X;
    est.bandwidth = bandwidth;
    est.lambda = lambda;
    std::vector<double> K = kernel_matrix(sample.X);
    double ratio = 1.0;
    est.dual = solve_with(std::move(K), static_cast<size_t>(n), sample.Y, lambda, &ratio);
    est.condition_hint = ratio;
    est.ridge_used = lambda;
    est.fit_cost = flops / 1e9;
    return est;
}

/// Monte-Carlo L2(P_X) risk of a fitted estimator against the target, with
/// the standard error of the mean.
struct RiskEstimate {
    double risk = 0.0;
    double std_error = 0.0;
    long long M = 0;
};

inline RiskEstimate empirical_risk(const FittedEstimator& est, const TargetFunction& target,
                                   long long M, std::uint64_t seed) {
    if (M < 1) throw precondition_error("empirical_risk: need M >= 1");
    if (target.dim < 1) throw precondition_error("empirical_risk: target dimension missing");
    Rng rng(derive_seed(seed, 0x715c));
    double mean = 0.0, m2 = 0.0;
    std::vector<double> x(static_cast<size_t>(target.dim));
    for (long long i = 0; i < M; ++i) {
        for (auto& v : x) v = rng.uniform();
        const double e = sqr(target.fn(x) - est.predict(x));
        const double delta = e - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (e - mean);
    }
    RiskEstimate r;
    r.risk = mean;
    r.M = M;
    if (M > 1) r.std_error = std::sqrt(m2 / (static_cast<double>(M - 1) * static_cast<double>(M)));
    return r;
}

/// Metric-entropy upper bound for the sparse network class:
///   2 S L ln((B v 1)(W + 1)) + S ln(L / delta),  natural logs;
/// zero stored weights mean a singleton class (bound 0).
inline double covering_bound(const NetworkStats& stats, double delta) {
    if (!(delta > 0.0)) throw precondition_error("covering_bound: need delta > 0");
    if (stats.S <= 0) return 0.0;
    const double S = static_cast<double>(stats.S);
    const double L = static_cast<double>(stats.L);
    const double W = static_cast<double>(stats.W);
    const double B = std::max(stats.B, 1.0);
    return 2.0 * S * L * std::log(B * (W + 1.0)) + S * std::log(L / delta);
}

/// Risk bound shape for a clipped least-squares estimator over a class with
/// the given log covering number:
///   approx_err^2 + (F^2 + sigma^2) cover_log / n + delta (F + sigma).
inline double oracle_risk_bound(double approx_err, double cover_log, long long n, double F,
                                double sigma, double delta) {
    if (n < 1) throw precondition_error("oracle_risk_bound: need n >= 1");
    if (approx_err < 0.0 || cover_log < 0.0 || F < 0.0 || sigma < 0.0 || delta < 0.0)
        throw precondition_error("oracle_risk_bound: arguments must be nonnegative");
    return sqr(approx_err) + (sqr(F) + sqr(sigma)) * cover_log / static_cast<double>(n) +
           delta * (F + sigma);
}

}  // namespace varbesov
