#pragma once

#include "varbesov/relunet.hpp"

namespace varbesov {
namespace detail {

/// Smallest T with 2^T >= n (n >= 1).
inline int ceil_log2_int(int n) {
    int t = 0;
    while ((1 << t) < n) ++t;
    return t;
}

/// Stages K so the piecewise-linear interpolant of x^2 on the dyadic mesh
/// 2^{-K} has sup error 2^{-2K-2} <= eps on [0,1].
inline int sharp_square_stages(double eps) {
    int k = 1;
    while (std::ldexp(1.0, -2 * k - 2) > eps && k < 60) ++k;
    return k;
}

/// K-stage sawtooth refinement of x |-> x^2 on [0,1].
///
/// Channels per stage: g (current sawtooth), v = g - 1/2, acc (running
/// interpolant). Update: g' = 2g - 4 eta(v); acc' = acc - g'/4^k. All
/// factors are powers of two, so on dyadic break points the arithmetic is
/// exact; in particular the net vanishes bitwise at 0 and equals 1.0 at 1.
/// Depth K+1, width 3, entries bounded by 4.
inline ReluNetwork square_stages(int K) {
    if (K < 1) throw precondition_error("square_stages: need K >= 1");
    ReluNetwork net;
    net.input_dim = 1;
    SparseLayer entry;
    entry.rows = 3;
    entry.cols = 1;
    entry.add(0, 0, 1.0);
    entry.add(1, 0, 1.0);
    entry.add_bias(1, -0.5);
    entry.add(2, 0, 1.0);
    entry.canonicalize();
    net.layers.push_back(std::move(entry));
    for (int k = 1; k <= K; ++k) {
        const double p = std::ldexp(1.0, -2 * k);  // 4^{-k}
        SparseLayer st;
        st.cols = 3;
        if (k < K) {
            st.rows = 3;
            st.add(0, 0, 2.0);
            st.add(0, 1, -4.0);
            st.add(1, 0, 2.0);
            st.add(1, 1, -4.0);
            st.add_bias(1, -0.5);
            st.add(2, 0, -2.0 * p);
            st.add(2, 1, 4.0 * p);
            st.add(2, 2, 1.0);
        } else {
            st.rows = 1;
            st.add(0, 0, -2.0 * p);
            st.add(0, 1, 4.0 * p);
            st.add(0, 2, 1.0);
        }
        st.canonicalize();
        net.layers.push_back(std::move(st));
    }
    return net;
}

/// Two-factor product on [0,1]^2 via the polarization
/// ab = 2[s((a+b)/2) - s(a/2) - s(b/2)], s = square_stages(K), clamped to
/// [0,1]. Error <= 6 * 2^{-2K-2}. If either input is exactly 0 the three
/// square subnets receive bitwise-identical data and the combination
/// cancels exactly, so the output is +0.0. The square outputs pass through
/// an activation before the combination layer: merging the squares' final
/// affine stage into the combination would interleave the g/v/acc channels
/// of different branches in one rounded sum and destroy that exact
/// cancellation. Depth K+3.
inline ReluNetwork pair_mult_stages(int K) {
    ReluNetwork fan;
    fan.input_dim = 2;
    SparseLayer f;
    f.rows = 3;
    f.cols = 2;
    f.add(0, 0, 0.5);
    f.add(0, 1, 0.5);
    f.add(1, 0, 0.5);
    f.add(2, 1, 0.5);
    f.canonicalize();
    fan.layers.push_back(std::move(f));

    ReluNetwork sq = square_stages(K);
    ReluNetwork block = parallel({compose(selector(3, {0}), sq),
                                  compose(selector(3, {1}), sq),
                                  compose(selector(3, {2}), sq)});
    block = pad_depth(std::move(block), block.depth() + 1);  // materialize the squares

    ReluNetwork cc;
    cc.input_dim = 3;
    SparseLayer c1;
    c1.rows = 2;
    c1.cols = 3;
    c1.add(0, 0, 2.0);
    c1.add(0, 1, -2.0);
    c1.add(0, 2, -2.0);
    c1.add(1, 0, 2.0);
    c1.add(1, 1, -2.0);
    c1.add(1, 2, -2.0);
    c1.add_bias(1, -1.0);
    c1.canonicalize();
    SparseLayer c2;
    c2.rows = 1;
    c2.cols = 2;
    c2.add(0, 0, 1.0);
    c2.add(0, 1, -1.0);
    cc.layers = {c1, c2};

    return compose(compose(fan, block), cc);
}

/// Balanced binary product tree over D >= 2 factors in [0,1], each node a
/// pair_mult_stages(K). With `complement_of_first` the first factor v0 is
/// also carried to the top and the output becomes v0 - prod(v) -- the
/// complement form used for terms supported outside a refinement region --
/// at identical depth. Per-node error e: total error <= (2^T - 1) e,
/// T = ceil(log2 D). Any factor exactly 0 annihilates the product bitwise.
inline ReluNetwork mult_tree_stages(int D, int K, bool complement_of_first) {
    if (D < 2) throw precondition_error("mult_tree: need D >= 2");
    const ReluNetwork node = pair_mult_stages(K);
    const int node_depth = node.depth();
    ReluNetwork net;
    int nprod = D;
    bool first_level = true;
    while (nprod > 1) {
        const int in_w = nprod + (complement_of_first && !first_level ? 1 : 0);
        std::vector<ReluNetwork> parts;
        for (int i = 0; i + 1 < nprod; i += 2)
            parts.push_back(compose(selector(in_w, {i, i + 1}), node));
        if (nprod % 2 == 1)
            parts.push_back(compose(selector(in_w, {nprod - 1}),
                                    pad_depth(identity_net(1), node_depth)));
        if (complement_of_first) {
            const int c0 = first_level ? 0 : nprod;
            parts.push_back(compose(selector(in_w, {c0}),
                                    pad_depth(identity_net(1), node_depth)));
        }
        ReluNetwork level = parallel(parts);
        net = first_level ? std::move(level) : compose(net, level);
        first_level = false;
        nprod = (nprod + 1) / 2;
    }
    if (complement_of_first) {
        SparseLayer fin;
        fin.rows = 1;
        fin.cols = 2;
        fin.add(0, 0, -1.0);  // clamped root product
        fin.add(0, 1, 1.0);   // carried first factor
        net = compose(net, single_layer_net(fin, 2));
    }
    return net;
}

inline double factorial(int m) {
    double f = 1.0;
    for (int i = 2; i <= m; ++i) f *= i;
    return f;
}

/// Truncated-power coefficients after folding the reflection symmetry:
/// coef[j] = (-1)^j C(m+1, j) (m+1)^m / m! for j = 0..ceil((m+1)/2)-1.
inline std::vector<double> bspline_power_coeffs(int m) {
    const int r = (m + 2) / 2;
    std::vector<double> c(static_cast<size_t>(r));
    const double scale = std::pow(m + 1.0, m) / factorial(m);
    for (int j = 0; j < r; ++j)
        c[static_cast<size_t>(j)] = (j % 2 ? -1.0 : 1.0) * binom(m + 1, j) * scale;
    return c;
}

/// Univariate degree-m cardinal B-spline net on the support [0, m+1]:
/// reflect to y = min(x, m+1-x) (exact), form the scaled ramps
/// u_j = eta((y - j)/(m+1)), raise each to the m-th power with square /
/// product gadgets, combine with the truncated-power coefficients, and
/// clamp to [0,1]. Strictly outside the support every ramp is exactly 0, so
/// the output is bitwise +0.0.
inline ReluNetwork bspline_coord_net(int m, double eps_coord) {
    const int r = (m + 2) / 2;
    const auto coef = bspline_power_coeffs(m);
    double csum = 0.0;
    for (double v : coef) csum += std::abs(v);
    // error of the power gadget relative to one square-stage error:
    // m=2 uses the square net directly, m=3 a square + pair product (6e + e),
    // m=4 two nested squares (e + 2e)
    const double mult = (m == 2) ? 1.0 : (m == 3) ? 7.0 : 3.0;
    const int K = (m <= 1) ? 0 : sharp_square_stages(eps_coord / (csum * mult));

    ReluNetwork head;
    head.input_dim = 1;
    SparseLayer a1;
    a1.rows = 3;
    a1.cols = 1;
    a1.add(0, 0, 1.0);
    a1.add(1, 0, -1.0);
    a1.add(2, 0, 2.0);
    a1.add_bias(2, -(m + 1.0));
    a1.canonicalize();
    head.layers.push_back(std::move(a1));
    SparseLayer a2;
    a2.rows = r;
    a2.cols = 3;
    const double ia = 1.0 / (m + 1);
    for (int j = 0; j < r; ++j) {
        a2.add(j, 0, ia);
        a2.add(j, 1, -ia);
        a2.add(j, 2, -ia);
        if (j > 0) a2.add_bias(j, -j * ia);
    }
    a2.canonicalize();
    head.layers.push_back(std::move(a2));

    ReluNetwork powers;
    if (m >= 2) {
        ReluNetwork pw;
        if (m == 2) {
            pw = square_stages(K);
        } else if (m == 3) {
            ReluNetwork sq = square_stages(K);
            ReluNetwork carry = pad_depth(identity_net(1), sq.depth());
            pw = compose(parallel({sq, carry}), pair_mult_stages(K));
        } else if (m == 4) {
            pw = compose(square_stages(K), square_stages(K));
        } else {
            throw precondition_error("bspline_coord_net: power gadget limited to m <= 4");
        }
        std::vector<ReluNetwork> parts;
        for (int j = 0; j < r; ++j) parts.push_back(compose(selector(r, {j}), pw));
        powers = parallel(parts);
    }

    ReluNetwork cc;
    cc.input_dim = r;
    SparseLayer c1;
    c1.rows = 2;
    c1.cols = r;
    for (int j = 0; j < r; ++j) {
        c1.add(0, j, coef[static_cast<size_t>(j)]);
        c1.add(1, j, coef[static_cast<size_t>(j)]);
    }
    c1.add_bias(1, -1.0);
    c1.canonicalize();
    SparseLayer c2;
    c2.rows = 1;
    c2.cols = 2;
    c2.add(0, 0, 1.0);
    c2.add(0, 1, -1.0);
    cc.layers = {c1, c2};

    if (m <= 1) return stack(head, cc);
    return stack(head, compose(powers, cc));
}

}  // namespace detail

/// x |-> x^2 on [0,1] to accuracy eps, exact at dyadic break points
/// (bitwise 0 at 0, exactly 1.0 at 1).
inline ReluNetwork build_square(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw precondition_error("build_square: eps in (0,1)");
    const int K = std::max(1, static_cast<int>(std::ceil(std::log2(1.0 / eps))));
    return detail::square_stages(K);
}

/// Product of D >= 2 factors in [0,1] to accuracy eps; output clamped to
/// [0,1]; any factor exactly 0 gives output exactly +0.0.
inline ReluNetwork build_mult(int D, double eps) {
    if (D < 2) throw precondition_error("build_mult: need D >= 2");
    if (!(eps > 0.0 && eps < 1.0)) throw precondition_error("build_mult: eps in (0,1)");
    const int T = detail::ceil_log2_int(D);
    const double node_eps = eps / std::pow(3.0, T);
    const int K = detail::sharp_square_stages(node_eps / 6.0);
    return detail::mult_tree_stages(D, K, false);
}

/// Tensor-product degree-m cardinal B-spline on [0, m+1]^d to sup accuracy
/// eps, exactly +0.0 outside the support. Degrees 1..4 are supported by the
/// power gadgets.
inline ReluNetwork build_bspline(int m, int d, double eps) {
    if (m < 1 || m > 4)
        throw precondition_error("build_bspline: degree m must lie in {1,2,3,4}");
    if (d < 1) throw precondition_error("build_bspline: need d >= 1");
    if (!(eps > 0.0 && eps < 1.0)) throw precondition_error("build_bspline: eps in (0,1)");
    if (d == 1) return detail::bspline_coord_net(m, eps);

    const double eps_coord = 0.4 * eps / d;
    const int T = detail::ceil_log2_int(d);
    const double node_eps = 0.6 * eps / std::max(1, (1 << T) - 1);
    const int Kt = detail::sharp_square_stages(node_eps / 6.0);
    const ReluNetwork coord = detail::bspline_coord_net(m, eps_coord);
    std::vector<ReluNetwork> parts;
    parts.reserve(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) parts.push_back(compose(selector(d, {i}), coord));
    return compose(parallel(parts), detail::mult_tree_stages(d, Kt, false));
}

enum class IndicatorSide { inner, outer };

namespace detail {

/// Coordinate bump: 1 on |x_a - c| <= t, 0 on |x_a - c| >= t + xi, linear
/// ramp between. Assembled so both plateaus are attained bitwise: the ramp
/// value z is formed on a single channel, then clamped by the pair
/// eta(v) - eta(v - 1) reading one rectified copy v = eta(z); fl(v - 1) is
/// exact for any double v in [1, 2^52], so z >= 1 gives exactly 1.0 and
/// z <= 0 gives exactly +0.0. Depth 4, width 2.
inline ReluNetwork indicator_coord_net(int d_in, int axis, double c, double t, double xi) {
    ReluNetwork net;
    net.input_dim = d_in;
    SparseLayer l1;
    l1.rows = 2;
    l1.cols = d_in;
    l1.add(0, axis, 1.0);
    l1.add_bias(0, -c);
    l1.add(1, axis, -1.0);
    l1.add_bias(1, c);
    l1.canonicalize();
    SparseLayer l2;
    l2.rows = 1;
    l2.cols = 2;
    l2.add(0, 0, -1.0 / xi);
    l2.add(0, 1, -1.0 / xi);
    l2.add_bias(0, (t + xi) / xi);
    SparseLayer l3;
    l3.rows = 2;
    l3.cols = 1;
    l3.add(0, 0, 1.0);
    l3.add(1, 0, 1.0);
    l3.add_bias(1, -1.0);
    SparseLayer l4;
    l4.rows = 1;
    l4.cols = 2;
    l4.add(0, 0, 1.0);
    l4.add(0, 1, -1.0);
    net.layers = {l1, l2, l3, l4};
    return net;
}

/// Exact minimum tree over d inputs in [0,1]: min(a,b) = a - eta(a - b),
/// two layers per level, odd carries padded.
inline ReluNetwork min_tree(int d) {
    ReluNetwork node;
    node.input_dim = 2;
    SparseLayer n1;
    n1.rows = 2;
    n1.cols = 2;
    n1.add(0, 0, 1.0);
    n1.add(0, 1, -1.0);  // a - b
    n1.add(1, 0, 1.0);   // a (nonnegative, rides the activation)
    n1.canonicalize();
    SparseLayer n2;
    n2.rows = 1;
    n2.cols = 2;
    n2.add(0, 0, -1.0);
    n2.add(0, 1, 1.0);
    node.layers = {n1, n2};

    ReluNetwork net;
    int cur = d;
    bool first = true;
    while (cur > 1) {
        std::vector<ReluNetwork> parts;
        for (int i = 0; i + 1 < cur; i += 2)
            parts.push_back(compose(selector(cur, {i, i + 1}), node));
        if (cur % 2 == 1)
            parts.push_back(compose(selector(cur, {cur - 1}), pad_depth(identity_net(1), 2)));
        ReluNetwork level = parallel(parts);
        net = first ? std::move(level) : compose(net, level);
        first = false;
        cur = (cur + 1) / 2;
    }
    return net;
}

}  // namespace detail

/// Box indicator with collar: value 1 on the box {|x_i - c_i| <= t} (inner
/// side) resp. on its complement beyond the collar (outer side), 0 on the
/// other side, ramp across the collar of width xi. inner + outer == 1
/// pointwise, exactly, and both plateaus are bitwise exact.
inline ReluNetwork build_indicator(const std::vector<double>& c, double t, double xi,
                                   IndicatorSide side) {
    if (c.empty()) throw precondition_error("build_indicator: empty center");
    if (!(t > 0.0)) throw precondition_error("build_indicator: need t > 0");
    if (!(xi > 0.0)) throw precondition_error("build_indicator: need xi > 0");
    const int d = static_cast<int>(c.size());
    ReluNetwork g;
    if (d == 1) {
        g = detail::indicator_coord_net(1, 0, c[0], t, xi);
    } else {
        std::vector<ReluNetwork> parts;
        parts.reserve(static_cast<size_t>(d));
        for (int i = 0; i < d; ++i)
            parts.push_back(detail::indicator_coord_net(d, i, c[static_cast<size_t>(i)], t, xi));
        g = compose(parallel(parts), detail::min_tree(d));
    }
    if (side == IndicatorSide::outer) {
        SparseLayer neg;
        neg.rows = 1;
        neg.cols = 1;
        neg.add(0, 0, -1.0);
        neg.add_bias(0, 1.0);
        g = compose(g, single_layer_net(neg, 1));
    }
    return g;
}

}  // namespace varbesov
