#pragma once

#include <vector>

#include "varbesov/common.hpp"

namespace varbesov {

/// Multi-index j of a dilated/shifted tensor B-spline M_{k,j}.
using DyadicIndex = std::vector<int>;

/// Degree-m cardinal B-spline N_m with support [0, m+1], evaluated by the
/// truncated-power expansion N_m(x) = (1/m!) * sum_j (-1)^j C(m+1,j) (x-j)_+^m.
/// Used directly for m <= 4; higher degrees go through the two-term
/// recursion to avoid the growing cancellation of the alternating sum.
inline double bspline_univariate(int m, double x) {
    if (m < 1) throw std::invalid_argument("bspline_univariate: m must be >= 1");
    if (x <= 0.0 || x >= m + 1.0) return 0.0;
    if (m <= 4) {
        double fact = 1.0;
        for (int i = 2; i <= m; ++i) fact *= i;
        double acc = 0.0, sign = 1.0;
        for (int j = 0; j <= m + 1; ++j, sign = -sign) {
            double t = x - j;
            if (t <= 0.0) break;  // later terms vanish
            double p = t;
            for (int e = 1; e < m; ++e) p *= t;
            acc += sign * binom(m + 1, j) * p;
        }
        return acc / fact;
    }
    // Cox-de Boor on integer knots: N_q(x) = (x N_{q-1}(x) + (q+1-x) N_{q-1}(x-1)) / q.
    std::vector<double> v(m + 2, 0.0);
    {
        int cell = static_cast<int>(std::floor(x));
        if (cell >= 0 && cell <= m) v[cell] = 1.0;  // N_0(x - cell) with half-open cells
    }
    for (int q = 1; q <= m; ++q)
        for (int i = 0; i <= m + 1 - q; ++i) {
            double t = x - i;
            v[i] = (t * v[i] + (q + 1 - t) * v[i + 1]) / q;
        }
    return v[0];
}

/// M_{k,j}(x) = prod_i N_m(2^k x_i - j_i). The dilation convention applies the
/// shift after scaling, so supp M_{k,j} = prod [j_i 2^-k, (j_i+m+1) 2^-k].
inline double bspline_tensor(int m, int k, const DyadicIndex& j, const std::vector<double>& x) {
    if (j.size() != x.size()) throw std::invalid_argument("bspline_tensor: index/point dimension mismatch");
    double scale = std::ldexp(1.0, k);
    double r = 1.0;
    for (size_t i = 0; i < x.size(); ++i) {
        r *= bspline_univariate(m, scale * x[i] - j[i]);
        if (r == 0.0) return 0.0;
    }
    return r;
}

inline Box bspline_support(int m, int k, const DyadicIndex& j) {
    double h = std::ldexp(1.0, -k);
    std::vector<double> lo(j.size()), hi(j.size());
    for (size_t i = 0; i < j.size(); ++i) {
        lo[i] = j[i] * h;
        hi[i] = (j[i] + m + 1) * h;
    }
    return Box(std::move(lo), std::move(hi));
}

/// Per-axis index range of basis functions not identically zero on [lo, hi]:
/// those whose open support (j 2^-k, (j+m+1) 2^-k) meets the interval.
/// Touching the region only at a support endpoint contributes nothing, so
/// both inequalities are strict. For [lo,hi] = [0,1]: j in {-m, ..., 2^k - 1}.
inline std::pair<int, int> active_range_1d(int m, int k, double lo, double hi) {
    if (hi < lo) return {0, -1};
    double s = std::ldexp(1.0, k);
    // j > lo*2^k - (m+1)  and  j < hi*2^k.
    int jmin = static_cast<int>(std::floor(lo * s - (m + 1))) + 1;
    int jmax = static_cast<int>(std::ceil(hi * s)) - 1;
    return {jmin, jmax};
}

/// Active index set Lambda_A(k): all j with M_{k,j} not identically zero on
/// the region A. Enumeration is lexicographic, which fixes tie-breaking
/// everywhere downstream. For A = Omega the count is (2^k + m)^d.
inline std::vector<DyadicIndex> active_indices(int m, int k, const Box& region) {
    std::vector<DyadicIndex> out;
    if (region.empty()) return out;
    int d = region.dim();
    std::vector<std::pair<int, int>> rng(d);
    long long total = 1;
    for (int i = 0; i < d; ++i) {
        rng[i] = active_range_1d(m, k, region.lo[i], region.hi[i]);
        long long cnt = static_cast<long long>(rng[i].second) - rng[i].first + 1;
        if (cnt <= 0) return out;
        total *= cnt;
        if (total > (1LL << 26)) throw precondition_error("active_indices: index set exceeds memory budget");
    }
    out.reserve(static_cast<size_t>(total));
    DyadicIndex j(d);
    for (int i = 0; i < d; ++i) j[i] = rng[i].first;
    while (true) {
        out.push_back(j);
        int axis = d - 1;
        while (axis >= 0) {
            if (++j[axis] <= rng[axis].second) break;
            j[axis] = rng[axis].first;
            --axis;
        }
        if (axis < 0) break;
    }
    return out;
}

/// Sum of all level-k basis functions at x; equals 1 on the interior of
/// [0,1]^d (partition of unity inherited from the integer-shift identity).
inline double partition_of_unity_sum(int m, int k, const std::vector<double>& x) {
    double scale = std::ldexp(1.0, k);
    double r = 1.0;
    for (double xi : x) {
        double t = scale * xi;
        int base = static_cast<int>(std::floor(t));
        double s = 0.0;
        for (int j = base - m; j <= base; ++j) {
            int lo = -m, hi = (1 << k) - 1;  // clamp to Lambda(k) on Omega
            if (j < lo || j > hi) continue;
            s += bspline_univariate(m, t - j);
        }
        r *= s;
    }
    return r;
}

}  // namespace varbesov
