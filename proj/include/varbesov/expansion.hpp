#pragma once

#include <map>
#include <optional>

#include "varbesov/bspline.hpp"

namespace varbesov {

/// One dyadic level of a spline expansion: terms (j, a) sorted
/// lexicographically by j so evaluation can binary-search candidates.
struct SplineLayer {
    int k = 0;
    std::vector<DyadicIndex> indices;
    std::vector<double> coeffs;
    std::optional<Box> region;  // restriction tag; evaluation itself is global

    size_t size() const { return coeffs.size(); }

    void sort_terms() {
        std::vector<size_t> perm(indices.size());
        for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        std::sort(perm.begin(), perm.end(), [&](size_t a, size_t b) { return indices[a] < indices[b]; });
        std::vector<DyadicIndex> ni(indices.size());
        std::vector<double> nc(coeffs.size());
        for (size_t i = 0; i < perm.size(); ++i) {
            ni[i] = indices[perm[i]];
            nc[i] = coeffs[perm[i]];
        }
        indices.swap(ni);
        coeffs.swap(nc);
    }

    double coeff_at(const DyadicIndex& j) const {
        auto it = std::lower_bound(indices.begin(), indices.end(), j);
        if (it == indices.end() || *it != j) return 0.0;
        return coeffs[static_cast<size_t>(it - indices.begin())];
    }
};

/// f(x) = sum_layers sum_terms a_{k,j} M_{k,j}(x); degree m shared by layers.
struct SplineExpansion {
    int m = 2;
    int dim = 1;
    std::vector<SplineLayer> layers;

    size_t term_count() const {
        size_t n = 0;
        for (const auto& l : layers) n += l.size();
        return n;
    }

    int finest_level() const {
        int k = 0;
        for (const auto& l : layers)
            if (!l.coeffs.empty()) k = std::max(k, l.k);
        return k;
    }

    SplineLayer& level(int k) {
        for (auto& l : layers)
            if (l.k == k) return l;
        layers.push_back(SplineLayer{k, {}, {}, std::nullopt});
        return layers.back();
    }

    /// Only the (m+1)^d bases per layer whose support contains x can
    /// contribute; enumerate those and look each up.
    double eval(const std::vector<double>& x) const {
        double total = 0.0;
        DyadicIndex j(dim);
        for (const auto& layer : layers) {
            if (layer.coeffs.empty()) continue;
            double scale = std::ldexp(1.0, layer.k);
            double acc = 0.0;
            std::vector<int> base(dim);
            for (int i = 0; i < dim; ++i) base[i] = static_cast<int>(std::floor(scale * x[i])) - m;
            std::vector<int> off(dim, 0);
            while (true) {
                for (int i = 0; i < dim; ++i) j[i] = base[i] + off[i];
                double c = layer.coeff_at(j);
                if (c != 0.0) acc += c * bspline_tensor(m, layer.k, j, x);
                int axis = dim - 1;
                while (axis >= 0 && ++off[axis] == m + 1) off[axis--] = 0;
                if (axis < 0) break;
            }
            total += acc;
        }
        return total;
    }

    void add_term(int k, DyadicIndex j, double a) {
        SplineLayer& l = level(k);
        l.indices.push_back(std::move(j));
        l.coeffs.push_back(a);
    }

    void finalize() {
        std::sort(layers.begin(), layers.end(), [](const SplineLayer& a, const SplineLayer& b) { return a.k < b.k; });
        for (auto& l : layers) l.sort_terms();
    }
};

/// Sequence-space Besov norm of the coefficient array:
///   ( sum_k ( 2^{k(s - d/p)} ||a_{k,.}||_p )^q )^{1/q},
/// with the max convention when p or q is infinite.
inline double coeff_besov_norm(const SplineExpansion& e, double s, double p, double q) {
    if (p <= 0.0 || q <= 0.0) throw std::invalid_argument("coeff_besov_norm: p, q must be positive");
    double d = static_cast<double>(e.dim);
    double outer_sum = 0.0, outer_max = 0.0;
    for (const auto& layer : e.layers) {
        if (layer.coeffs.empty()) continue;
        double lp;
        if (std::isinf(p)) {
            lp = 0.0;
            for (double a : layer.coeffs) lp = std::max(lp, std::abs(a));
        } else {
            double acc = 0.0;
            for (double a : layer.coeffs) acc += std::pow(std::abs(a), p);
            lp = std::pow(acc, 1.0 / p);
        }
        double dp = std::isinf(p) ? 0.0 : d / p;
        double inner = std::pow(2.0, layer.k * (s - dp)) * lp;
        if (std::isinf(q))
            outer_max = std::max(outer_max, inner);
        else
            outer_sum += std::pow(inner, q);
    }
    return std::isinf(q) ? outer_max : std::pow(outer_sum, 1.0 / q);
}

}  // namespace varbesov
