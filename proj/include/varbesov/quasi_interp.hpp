#pragma once

#include <functional>
#include <map>

#include "varbesov/expansion.hpp"

namespace varbesov {

/// Cholesky factorization of a symmetric positive-definite banded matrix,
/// lower band storage: band[i][b] = A(i, i-b), b = 0..bw.
class BandedCholesky {
  public:
    BandedCholesky(std::vector<std::vector<double>> band, int bw) : l_(std::move(band)), bw_(bw) {}

    /// Factor in place. Returns false on a non-positive pivot.
    bool factor() {
        int n = static_cast<int>(l_.size());
        min_pivot_ = 1e300;
        max_pivot_ = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int b = bw_; b >= 0; --b) {
                int j = i - b;
                if (j < 0) continue;
                double s = l_[i][b];
                for (int t = 1; t + b <= bw_ && j - t >= 0; ++t) s -= l_[i][b + t] * l_[j][t];
                if (b == 0) {
                    if (s <= 0.0) return false;
                    l_[i][0] = std::sqrt(s);
                    min_pivot_ = std::min(min_pivot_, l_[i][0]);
                    max_pivot_ = std::max(max_pivot_, l_[i][0]);
                } else {
                    l_[i][b] = s / l_[j][0];
                }
            }
        }
        return true;
    }

    /// Solve A x = rhs with the stored factor, in place.
    void solve(double* x, int stride) const {
        int n = static_cast<int>(l_.size());
        for (int i = 0; i < n; ++i) {
            double s = x[i * stride];
            for (int b = 1; b <= bw_ && i - b >= 0; ++b) s -= l_[i][b] * x[(i - b) * stride];
            x[i * stride] = s / l_[i][0];
        }
        for (int i = n - 1; i >= 0; --i) {
            double s = x[i * stride];
            for (int b = 1; b <= bw_ && i + b < n; ++b) s -= l_[i + b][b] * x[(i + b) * stride];
            x[i * stride] = s / l_[i][0];
        }
    }

    /// Squared-pivot ratio; a cheap stand-in for the condition number.
    double condition_estimate() const { return sqr(max_pivot_ / min_pivot_); }

  private:
    std::vector<std::vector<double>> l_;
    int bw_;
    double min_pivot_ = 0.0, max_pivot_ = 0.0;
};

struct ProjectInfo {
    double condition_estimate = 0.0;  // worst axis
    bool ridge_applied = false;
    long long grid_points = 0;
};

namespace detail {

struct Axis1D {
    int jmin, jmax;               // basis index range
    int npts;                     // grid size
    double a, b;                  // grid interval
    std::vector<int> first_basis; // per grid point: first touching basis
    std::vector<double> values;   // per grid point: m+1 basis values
};

inline Axis1D build_axis(int m, int k, double lo, double hi, double oversample) {
    Axis1D ax;
    auto rng = active_range_1d(m, k, lo, hi);
    ax.jmin = rng.first;
    ax.jmax = rng.second;
    if (ax.jmax < ax.jmin) throw precondition_error("project: empty basis range on an axis");
    int nb = ax.jmax - ax.jmin + 1;
    ax.npts = std::max(static_cast<int>(std::ceil(oversample * nb)), (m + 1) * nb);
    ax.a = lo;
    ax.b = hi;
    ax.first_basis.resize(ax.npts);
    ax.values.assign(static_cast<size_t>(ax.npts) * (m + 1), 0.0);
    double scale = std::ldexp(1.0, k);
    for (int g = 0; g < ax.npts; ++g) {
        double t = lo + (hi - lo) * (g + 0.5) / ax.npts;
        double u = scale * t;
        int fb = std::max(static_cast<int>(std::floor(u)) - m, ax.jmin);
        fb = std::min(fb, std::max(ax.jmax - m, ax.jmin));
        ax.first_basis[g] = fb;
        for (int o = 0; o <= m; ++o) {
            int j = fb + o;
            if (j > ax.jmax) break;
            ax.values[static_cast<size_t>(g) * (m + 1) + o] = bspline_univariate(m, u - j);
        }
    }
    return ax;
}

}  // namespace detail

/// Least-squares projection of f onto span{ M_{k,j} : j in Lambda_box(k) }
/// over a tensor sample grid (`oversample` points per basis per axis).
/// The separable grid makes the normal equations a Kronecker product of
/// per-axis banded Gram matrices, so the solve sweeps one axis at a time.
/// `box` defaults to Omega; a sub-box fits only on that box (pad first if
/// reproduction on the boundary of a region matters).
inline SplineExpansion project(const std::function<double(const std::vector<double>&)>& f,
                               int m, int k, int d,
                               const Box* box_in = nullptr, double oversample = 4.0,
                               ProjectInfo* info = nullptr) {
    if (m < 1 || k < 0 || d < 1) throw std::invalid_argument("project: bad m/k/d");
    Box box = box_in ? *box_in : Box::unit_cube(d);
    if (box.dim() != d || box.empty() || box.volume() <= 0.0)
        throw precondition_error("project: fitting box must be a nondegenerate d-box");

    std::vector<detail::Axis1D> axes;
    long long ngrid = 1, nbasis = 1;
    for (int i = 0; i < d; ++i) {
        axes.push_back(detail::build_axis(m, k, box.lo[i], box.hi[i], oversample));
        ngrid *= axes[i].npts;
        nbasis *= axes[i].jmax - axes[i].jmin + 1;
        if (ngrid > (1LL << 26) || nbasis > (1LL << 24))
            throw precondition_error("project: level exceeds the configured memory budget");
    }
    if (info) info->grid_points = ngrid;

    // Evaluate f over the tensor grid.
    std::vector<double> tens(static_cast<size_t>(ngrid));
    {
        std::vector<int> gi(d, 0);
        std::vector<double> x(d);
        for (long long p = 0;; ++p) {
            for (int i = 0; i < d; ++i)
                x[i] = axes[i].a + (axes[i].b - axes[i].a) * (gi[i] + 0.5) / axes[i].npts;
            tens[static_cast<size_t>(p)] = f(x);
            int axis = d - 1;
            while (axis >= 0 && ++gi[axis] == axes[axis].npts) gi[axis--] = 0;
            if (axis < 0) break;
        }
    }

    // Contract each axis: replace grid samples by basis inner products.
    std::vector<long long> dims(d);
    for (int i = 0; i < d; ++i) dims[i] = axes[i].npts;
    for (int a = 0; a < d; ++a) {
        long long outer = 1, inner = 1;
        for (int i = 0; i < a; ++i) outer *= dims[i];
        for (int i = a + 1; i < d; ++i) inner *= dims[i];
        long long na = dims[a];
        long long pa = axes[a].jmax - axes[a].jmin + 1;
        std::vector<double> next(static_cast<size_t>(outer * pa * inner), 0.0);
        for (long long o = 0; o < outer; ++o)
            for (long long g = 0; g < na; ++g) {
                const double* src = &tens[static_cast<size_t>((o * na + g) * inner)];
                int fb = axes[a].first_basis[static_cast<int>(g)];
                for (int off = 0; off <= m; ++off) {
                    int j = fb + off;
                    if (j > axes[a].jmax) break;
                    double w = axes[a].values[static_cast<size_t>(g) * (m + 1) + off];
                    if (w == 0.0) continue;
                    double* dst = &next[static_cast<size_t>((o * pa + (j - axes[a].jmin)) * inner)];
                    for (long long q = 0; q < inner; ++q) dst[q] += w * src[q];
                }
            }
        tens.swap(next);
        dims[a] = pa;
    }

    // Factor per-axis Gram matrices and sweep the inverse along each axis.
    double worst_cond = 0.0;
    bool any_ridge = false;
    for (int a = 0; a < d; ++a) {
        int pa = axes[a].jmax - axes[a].jmin + 1;
        std::vector<std::vector<double>> band(pa, std::vector<double>(m + 1, 0.0));
        for (int g = 0; g < axes[a].npts; ++g) {
            int fb = axes[a].first_basis[g];
            for (int o1 = 0; o1 <= m; ++o1) {
                int j1 = fb + o1;
                if (j1 > axes[a].jmax) break;
                double w1 = axes[a].values[static_cast<size_t>(g) * (m + 1) + o1];
                if (w1 == 0.0) continue;
                for (int o2 = 0; o2 <= o1; ++o2) {
                    double w2 = axes[a].values[static_cast<size_t>(g) * (m + 1) + o2];
                    if (w2 != 0.0) band[j1 - axes[a].jmin][o1 - o2] += w1 * w2;
                }
            }
        }
        double mean_diag = 0.0;
        for (int i = 0; i < pa; ++i) mean_diag += band[i][0];
        mean_diag /= pa;
        BandedCholesky chol(band, m);
        bool ok = chol.factor();
        if (!ok) {
            // Singular normal system: ridge fallback, reported via info.
            any_ridge = true;
            for (int i = 0; i < pa; ++i) band[i][0] += 1e-12 * mean_diag;
            chol = BandedCholesky(band, m);
            if (!chol.factor()) throw precondition_error("project: normal equations not positive definite");
        }
        worst_cond = std::max(worst_cond, chol.condition_estimate());

        long long outer = 1, inner = 1;
        for (int i = 0; i < a; ++i) outer *= dims[i];
        for (int i = a + 1; i < d; ++i) inner *= dims[i];
        for (long long o = 0; o < outer; ++o)
            for (long long q = 0; q < inner; ++q)
                chol.solve(&tens[static_cast<size_t>(o * pa * inner + q)], static_cast<int>(inner));
    }
    if (info) {
        info->condition_estimate = worst_cond;
        info->ridge_applied = any_ridge;
    }

    SplineExpansion e;
    e.m = m;
    e.dim = d;
    SplineLayer layer;
    layer.k = k;
    if (box_in) layer.region = box;
    layer.indices.reserve(static_cast<size_t>(nbasis));
    layer.coeffs.reserve(static_cast<size_t>(nbasis));
    {
        DyadicIndex j(d);
        std::vector<int> ji(d, 0);
        for (long long p = 0;; ++p) {
            for (int i = 0; i < d; ++i) j[i] = axes[i].jmin + ji[i];
            layer.indices.push_back(j);
            layer.coeffs.push_back(tens[static_cast<size_t>(p)]);
            int axis = d - 1;
            while (axis >= 0 && ++ji[axis] == dims[axis]) ji[axis--] = 0;
            if (axis < 0) break;
        }
    }
    e.layers.push_back(std::move(layer));
    e.finalize();
    return e;
}

/// Subdivision mask of the degree-m cardinal B-spline:
///   N(x) = sum_{i=0}^{m+1} 2^{-m} C(m+1,i) N(2x - i).
inline std::vector<double> twoscale_mask(int m) {
    std::vector<double> c(m + 2);
    for (int i = 0; i <= m + 1; ++i) c[i] = std::ldexp(binom(m + 1, i), -m);
    return c;
}

/// Re-express a level-(k-1) layer at level k via the subdivision mask.
/// Indices leaving Lambda(k) of Omega are dropped; those bases vanish
/// identically on Omega so the function is unchanged there.
inline SplineLayer refine_layer(const SplineLayer& coarse, int m, int d) {
    std::vector<double> mask = twoscale_mask(m);
    std::map<DyadicIndex, double> acc;
    int k = coarse.k + 1;
    int lo = -m, hi = (1 << k) - 1;
    std::vector<int> off(d, 0);
    DyadicIndex jf(d);
    for (size_t t = 0; t < coarse.size(); ++t) {
        const DyadicIndex& j = coarse.indices[t];
        double a = coarse.coeffs[t];
        std::fill(off.begin(), off.end(), 0);
        while (true) {
            double w = a;
            bool keep = true;
            for (int i = 0; i < d; ++i) {
                jf[i] = 2 * j[i] + off[i];
                if (jf[i] < lo || jf[i] > hi) { keep = false; break; }
                w *= mask[off[i]];
            }
            if (keep && w != 0.0) acc[jf] += w;
            int axis = d - 1;
            while (axis >= 0 && ++off[axis] == m + 2) off[axis--] = 0;
            if (axis < 0) break;
        }
    }
    SplineLayer fine;
    fine.k = k;
    fine.region = coarse.region;
    fine.indices.reserve(acc.size());
    fine.coeffs.reserve(acc.size());
    for (auto& [j, a] : acc) {
        fine.indices.push_back(j);
        fine.coeffs.push_back(a);
    }
    return fine;
}

/// Detail layer q_k = Q_k f - Q_{k-1} f, expressed at level k by refining the
/// coarse layer with the two-scale relation and subtracting coefficientwise.
inline SplineLayer detail_layer(const SplineExpansion& qk, const SplineExpansion& qk1) {
    if (qk.layers.size() != 1 || qk1.layers.size() != 1)
        throw std::invalid_argument("detail_layer: expects single-level expansions");
    if (qk.m != qk1.m || qk.dim != qk1.dim)
        throw std::invalid_argument("detail_layer: mismatched degree or dimension");
    if (qk.layers[0].k != qk1.layers[0].k + 1)
        throw std::invalid_argument("detail_layer: levels must differ by exactly one");
    SplineLayer refined = refine_layer(qk1.layers[0], qk.m, qk.dim);
    std::map<DyadicIndex, double> acc;
    const SplineLayer& fine = qk.layers[0];
    for (size_t t = 0; t < fine.size(); ++t) acc[fine.indices[t]] += fine.coeffs[t];
    for (size_t t = 0; t < refined.size(); ++t) acc[refined.indices[t]] -= refined.coeffs[t];
    SplineLayer out;
    out.k = fine.k;
    for (auto& [j, a] : acc) {
        out.indices.push_back(j);
        out.coeffs.push_back(a);
    }
    return out;
}

}  // namespace varbesov
