#pragma once

#include "varbesov/common.hpp"

namespace varbesov {

/// One affine map y = A x + b with A and b stored as coordinate lists.
/// Canonical form: weight entries sorted by (row, col), duplicates merged,
/// exact zeros dropped; bias entries sorted by row, zeros dropped.
struct SparseLayer {
    struct Entry {
        int r = 0, c = 0;
        double w = 0.0;
    };

    int rows = 0;
    int cols = 0;
    std::vector<Entry> weights;
    std::vector<std::pair<int, double>> bias;

    void add(int r, int c, double w) { weights.push_back({r, c, w}); }
    void add_bias(int r, double v) { bias.emplace_back(r, v); }

    void canonicalize() {
        std::sort(weights.begin(), weights.end(), [](const Entry& a, const Entry& b) {
            return a.r != b.r ? a.r < b.r : a.c < b.c;
        });
        size_t out = 0;
        for (size_t i = 0; i < weights.size();) {
            size_t j = i;
            double w = 0.0;
            while (j < weights.size() && weights[j].r == weights[i].r &&
                   weights[j].c == weights[i].c)
                w += weights[j++].w;
            if (w != 0.0) weights[out++] = {weights[i].r, weights[i].c, w};
            i = j;
        }
        weights.resize(out);
        std::sort(bias.begin(), bias.end());
        out = 0;
        for (size_t i = 0; i < bias.size();) {
            size_t j = i;
            double v = 0.0;
            while (j < bias.size() && bias[j].first == bias[i].first) v += bias[j++].second;
            if (v != 0.0) bias[out++] = {bias[i].first, v};
            i = j;
        }
        bias.resize(out);
    }
};

/// Feed-forward ReLU network: layers.back() is the output map; the
/// activation eta(x) = max{x, 0} acts between affine layers, never after
/// the last one.
struct ReluNetwork {
    int input_dim = 0;
    std::vector<SparseLayer> layers;

    int depth() const { return static_cast<int>(layers.size()); }
    int output_dim() const { return layers.empty() ? input_dim : layers.back().rows; }
};

struct NetworkStats {
    int L = 0;        // number of affine layers
    int W = 0;        // max width over input and every layer output
    long long S = 0;  // count of stored nonzero weight and bias entries
    double B = 0.0;   // max absolute weight or bias entry
};

inline void check_dims(const ReluNetwork& net, const char* who) {
    int cur = net.input_dim;
    for (const auto& l : net.layers) {
        if (l.cols != cur)
            throw std::invalid_argument(std::string(who) + ": layer dimension chain broken");
        cur = l.rows;
    }
}

/// eta(x) = max{x, 0}; the select form also maps -0.0 to +0.0 so that
/// exact-zero guarantees are bitwise.
inline double relu(double x) { return x > 0.0 ? x : 0.0; }

/// Exact forward pass; all outputs are normalized by a final +0.0 so an
/// exactly-vanishing network returns +0.0, never -0.0.
inline std::vector<double> eval_all(const ReluNetwork& net, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != net.input_dim)
        throw std::invalid_argument("eval: input dimension mismatch");
    std::vector<double> cur = x, nxt;
    for (size_t l = 0; l < net.layers.size(); ++l) {
        const SparseLayer& lay = net.layers[l];
        if (lay.cols != static_cast<int>(cur.size()))
            throw std::invalid_argument("eval: layer dimension mismatch");
        nxt.assign(static_cast<size_t>(lay.rows), 0.0);
        for (const auto& e : lay.weights) nxt[static_cast<size_t>(e.r)] += e.w * cur[static_cast<size_t>(e.c)];
        for (const auto& b : lay.bias) nxt[static_cast<size_t>(b.first)] += b.second;
        if (l + 1 < net.layers.size())
            for (double& v : nxt) v = relu(v);
        cur.swap(nxt);
    }
    for (double& v : cur) v += 0.0;
    return cur;
}

inline double eval(const ReluNetwork& net, const std::vector<double>& x) {
    if (net.output_dim() != 1) throw std::invalid_argument("eval: scalar output expected");
    return eval_all(net, x)[0];
}

/// Recomputed from the stored entries on every call (S counts stored
/// nonzeros; builders keep layers canonical so nothing is double-counted).
inline NetworkStats stats(const ReluNetwork& net) {
    NetworkStats st;
    st.L = net.depth();
    st.W = net.input_dim;
    for (const auto& l : net.layers) {
        st.W = std::max(st.W, l.rows);
        for (const auto& e : l.weights)
            if (e.w != 0.0) {
                ++st.S;
                st.B = std::max(st.B, std::abs(e.w));
            }
        for (const auto& b : l.bias)
            if (b.second != 0.0) {
                ++st.S;
                st.B = std::max(st.B, std::abs(b.second));
            }
    }
    return st;
}

inline SparseLayer identity_layer(int w) {
    SparseLayer l;
    l.rows = l.cols = w;
    for (int i = 0; i < w; ++i) l.add(i, i, 1.0);
    return l;
}

inline ReluNetwork identity_net(int d) {
    ReluNetwork n;
    n.input_dim = d;
    n.layers.push_back(identity_layer(d));
    return n;
}

/// One-layer net picking the listed input coordinates (in order).
inline ReluNetwork selector(int cols, const std::vector<int>& picks) {
    ReluNetwork n;
    n.input_dim = cols;
    SparseLayer l;
    l.rows = static_cast<int>(picks.size());
    l.cols = cols;
    for (size_t i = 0; i < picks.size(); ++i) {
        if (picks[i] < 0 || picks[i] >= cols)
            throw std::invalid_argument("selector: pick out of range");
        l.add(static_cast<int>(i), picks[i], 1.0);
    }
    n.layers.push_back(l);
    return n;
}

inline ReluNetwork single_layer_net(SparseLayer l, int input_dim) {
    l.canonicalize();
    ReluNetwork n;
    n.input_dim = input_dim;
    n.layers.push_back(std::move(l));
    return n;
}

/// second after first as *function composition*: no activation at the seam,
/// the two boundary affine maps are merged exactly into one.
inline ReluNetwork compose(const ReluNetwork& first, const ReluNetwork& second) {
    if (first.layers.empty() || second.layers.empty())
        throw std::invalid_argument("compose: both networks need at least one layer");
    if (first.output_dim() != second.input_dim)
        throw std::invalid_argument("compose: dimension mismatch at the seam");
    ReluNetwork out;
    out.input_dim = first.input_dim;
    out.layers.assign(first.layers.begin(), first.layers.end() - 1);

    const SparseLayer& f = first.layers.back();
    const SparseLayer& g = second.layers.front();
    std::vector<std::vector<size_t>> frow(static_cast<size_t>(f.rows));
    for (size_t i = 0; i < f.weights.size(); ++i)
        frow[static_cast<size_t>(f.weights[i].r)].push_back(i);
    std::vector<double> fbias(static_cast<size_t>(f.rows), 0.0);
    for (const auto& b : f.bias) fbias[static_cast<size_t>(b.first)] = b.second;

    SparseLayer merged;
    merged.rows = g.rows;
    merged.cols = f.cols;
    std::vector<double> mbias(static_cast<size_t>(g.rows), 0.0);
    for (const auto& ge : g.weights) {
        for (size_t i : frow[static_cast<size_t>(ge.c)])
            merged.add(ge.r, f.weights[i].c, ge.w * f.weights[i].w);
        mbias[static_cast<size_t>(ge.r)] += ge.w * fbias[static_cast<size_t>(ge.c)];
    }
    for (const auto& gb : g.bias) mbias[static_cast<size_t>(gb.first)] += gb.second;
    for (int r = 0; r < g.rows; ++r)
        if (mbias[static_cast<size_t>(r)] != 0.0) merged.add_bias(r, mbias[static_cast<size_t>(r)]);
    merged.canonicalize();
    out.layers.push_back(std::move(merged));
    out.layers.insert(out.layers.end(), second.layers.begin() + 1, second.layers.end());
    return out;
}

/// second after first with an activation at the seam: the concatenation
/// second(eta(first(x))). Use when the downstream net expects rectified
/// channels rather than raw affine outputs.
inline ReluNetwork stack(const ReluNetwork& first, const ReluNetwork& second) {
    if (first.layers.empty() || second.layers.empty())
        throw std::invalid_argument("stack: both networks need at least one layer");
    if (first.output_dim() != second.input_dim)
        throw std::invalid_argument("stack: dimension mismatch at the seam");
    ReluNetwork out = first;
    out.layers.insert(out.layers.end(), second.layers.begin(), second.layers.end());
    return out;
}

/// Shared-input parallel composition: all nets read the same input vector;
/// outputs are concatenated in order. Requires equal input_dim and equal
/// depth (pad_depth shallower parts first).
inline ReluNetwork parallel(const std::vector<ReluNetwork>& nets) {
    if (nets.empty()) throw std::invalid_argument("parallel: no networks given");
    const int depth = nets[0].depth();
    const int din = nets[0].input_dim;
    for (const auto& n : nets) {
        if (n.depth() != depth) throw std::invalid_argument("parallel: depth mismatch");
        if (n.input_dim != din) throw std::invalid_argument("parallel: input dimension mismatch");
        if (n.layers.empty()) throw std::invalid_argument("parallel: empty network");
    }
    ReluNetwork out;
    out.input_dim = din;
    for (int l = 0; l < depth; ++l) {
        SparseLayer lay;
        int roff = 0, coff = 0;
        for (const auto& n : nets) {
            const SparseLayer& src = n.layers[static_cast<size_t>(l)];
            int cbase = (l == 0) ? 0 : coff;
            for (const auto& e : src.weights) lay.add(e.r + roff, e.c + cbase, e.w);
            for (const auto& b : src.bias) lay.add_bias(b.first + roff, b.second);
            roff += src.rows;
            coff += src.cols;
        }
        lay.rows = roff;
        lay.cols = (l == 0) ? din : coff;
        lay.canonicalize();
        out.layers.push_back(std::move(lay));
    }
    return out;
}

/// Deepen to `target_depth` without changing the function. Nonnegative
/// outputs ride identity layers through the activation; signed outputs are
/// split into an (eta(v), eta(-v)) pair and recombined at the end.
inline ReluNetwork pad_depth(ReluNetwork net, int target_depth, bool nonnegative = true) {
    if (net.layers.empty()) throw std::invalid_argument("pad_depth: empty network");
    if (target_depth < net.depth())
        throw std::invalid_argument("pad_depth: target shallower than the network");
    int extra = target_depth - net.depth();
    if (extra == 0) return net;
    int w = net.output_dim();
    if (nonnegative) {
        for (int i = 0; i < extra; ++i) net.layers.push_back(identity_layer(w));
        return net;
    }
    SparseLayer split;
    split.rows = 2 * w;
    split.cols = net.layers.back().cols;
    for (const auto& e : net.layers.back().weights) {
        split.add(e.r, e.c, e.w);
        split.add(e.r + w, e.c, -e.w);
    }
    for (const auto& b : net.layers.back().bias) {
        split.add_bias(b.first, b.second);
        split.add_bias(b.first + w, -b.second);
    }
    split.canonicalize();
    net.layers.back() = std::move(split);
    for (int i = 0; i < extra - 1; ++i) net.layers.push_back(identity_layer(2 * w));
    SparseLayer rec;
    rec.rows = w;
    rec.cols = 2 * w;
    for (int i = 0; i < w; ++i) {
        rec.add(i, i, 1.0);
        rec.add(i, i + w, -1.0);
    }
    net.layers.push_back(std::move(rec));
    return net;
}

/// Clamp a scalar-output network to [-F, F] exactly via
/// eta(x + F) - eta(x - F) - F; adds one hidden layer of width 2.
inline ReluNetwork clip(const ReluNetwork& net, double F) {
    if (!(F >= 1.0)) throw precondition_error("clip: require F >= 1");
    if (net.output_dim() != 1) throw std::invalid_argument("clip: scalar output expected");
    ReluNetwork gadget;
    gadget.input_dim = 1;
    SparseLayer h;
    h.rows = 2;
    h.cols = 1;
    h.add(0, 0, 1.0);
    h.add_bias(0, F);
    h.add(1, 0, 1.0);
    h.add_bias(1, -F);
    SparseLayer o;
    o.rows = 1;
    o.cols = 2;
    o.add(0, 0, 1.0);
    o.add(0, 1, -1.0);
    o.add_bias(0, -F);
    gadget.layers = {h, o};
    return compose(net, gadget);
}

}  // namespace varbesov
