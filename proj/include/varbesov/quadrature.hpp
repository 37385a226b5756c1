#pragma once

#include <functional>

#include "varbesov/common.hpp"

namespace varbesov {

/// Gauss-Legendre nodes/weights on [-1,1]. Tabulated for the orders used here.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    switch (n) {
        case 2:
            x = {-0.5773502691896257645091488, 0.5773502691896257645091488};
            w = {1.0, 1.0};
            return;
        case 4:
            x = {-0.8611363115940525752239465, -0.3399810435848562648026658,
                 0.3399810435848562648026658, 0.8611363115940525752239465};
            w = {0.3478548451374538573730639, 0.6521451548625461426269361,
                 0.6521451548625461426269361, 0.3478548451374538573730639};
            return;
        case 8:
            x = {-0.9602898564975362316835609, -0.7966664774136267395915539,
                 -0.5255324099163289858177390, -0.1834346424956498049394761,
                 0.1834346424956498049394761, 0.5255324099163289858177390,
                 0.7966664774136267395915539, 0.9602898564975362316835609};
            w = {0.1012285362903762591525314, 0.2223810344533744705443560,
                 0.3137066458778872873379622, 0.3626837833783619829651504,
                 0.3626837833783619829651504, 0.3137066458778872873379622,
                 0.2223810344533744705443560, 0.1012285362903762591525314};
            return;
        default:
            throw std::invalid_argument("gauss_legendre: supported orders are 2, 4, 8");
    }
}

/// Integrate f over a box by composite Gauss-Legendre with cells of size at
/// most `cell`, snapped so each axis is divided uniformly.
inline double integrate_box(const std::function<double(const std::vector<double>&)>& f,
                            const Box& box, double cell, int order = 4) {
    if (box.empty()) return 0.0;
    int d = box.dim();
    std::vector<double> gx, gw;
    gauss_legendre(order, gx, gw);
    std::vector<int> cells(d);
    long long total = 1;
    for (int i = 0; i < d; ++i) {
        cells[i] = std::max(1, static_cast<int>(std::ceil((box.hi[i] - box.lo[i]) / cell - 1e-12)));
        total *= cells[i];
        if (total > (1LL << 28)) throw precondition_error("integrate_box: cell count exceeds budget");
    }
    std::vector<double> h(d);
    for (int i = 0; i < d; ++i) h[i] = (box.hi[i] - box.lo[i]) / cells[i];

    std::vector<int> ci(d, 0);
    std::vector<int> ni(d, 0);
    std::vector<double> x(d);
    double sum = 0.0;
    long long npts = 1;
    for (int i = 0; i < d; ++i) npts *= order;
    while (true) {
        // loop over nodes inside the current cell
        std::fill(ni.begin(), ni.end(), 0);
        for (long long p = 0; p < npts; ++p) {
            double wt = 1.0;
            for (int i = 0; i < d; ++i) {
                double a = box.lo[i] + ci[i] * h[i];
                x[i] = a + 0.5 * h[i] * (1.0 + gx[ni[i]]);
                wt *= 0.5 * h[i] * gw[ni[i]];
            }
            sum += wt * f(x);
            int axis = d - 1;
            while (axis >= 0 && ++ni[axis] == order) ni[axis--] = 0;
        }
        int axis = d - 1;
        while (axis >= 0 && ++ci[axis] == cells[axis]) ci[axis--] = 0;
        if (axis < 0) break;
    }
    return sum;
}

/// Remove `cut` from every box in `parts`, splitting along axes; the result
/// is a disjoint cover of (union parts) \ cut.
inline std::vector<Box> subtract_box(const std::vector<Box>& parts, const Box& cut) {
    std::vector<Box> out;
    for (const Box& b : parts) {
        Box overlap = b.intersect(cut);
        if (overlap.empty()) {
            out.push_back(b);
            continue;
        }
        Box rem = b;
        for (int i = 0; i < b.dim(); ++i) {
            if (overlap.lo[i] > rem.lo[i]) {
                Box left = rem;
                left.hi[i] = overlap.lo[i];
                if (!left.empty() && left.volume() > 0.0) out.push_back(left);
                rem.lo[i] = overlap.lo[i];
            }
            if (overlap.hi[i] < rem.hi[i]) {
                Box right = rem;
                right.lo[i] = overlap.hi[i];
                if (!right.empty() && right.volume() > 0.0) out.push_back(right);
                rem.hi[i] = overlap.hi[i];
            }
        }
    }
    return out;
}

/// L_r norm of f over a single box; r = infinity maps to a dense-node max.
inline double lr_norm_box(const std::function<double(const std::vector<double>&)>& f,
                          const Box& box, double r, double cell, int order = 4) {
    if (box.empty()) return 0.0;
    if (std::isinf(r)) {
        double m = 0.0;
        integrate_box([&](const std::vector<double>& x) {
            m = std::max(m, std::abs(f(x)));
            return 0.0;
        }, box, cell, order);
        return m;
    }
    double v = integrate_box([&](const std::vector<double>& x) {
        return std::pow(std::abs(f(x)), r);
    }, box, cell, order);
    return std::pow(std::max(v, 0.0), 1.0 / r);
}

}  // namespace varbesov
