#pragma once

#include <cstdio>
#include <string>
#include <string_view>

#include <json.hpp>

#include "varbesov/adaptive.hpp"
#include "varbesov/relu_compile.hpp"
#include "varbesov/synth.hpp"

namespace varbesov {

using json = nlohmann::json;

/// 64-bit FNV-1a; used to stamp outputs with the resolved config.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Shortest exact decimal for a double (%.17g round-trips bit-exactly).
inline std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Versioned CSV preamble: schema tag, config hash, column names.
inline std::string csv_header(const std::string& columns, std::uint64_t config_hash) {
    return "# varbesov-csv v1\n# config-hash " + hex64(config_hash) + "\n" + columns + "\n";
}

// ---- JSON encodings -------------------------------------------------------
// Exponents may be infinity; JSON numbers cannot, so they travel as the
// string "inf" (or "-inf").

inline json exponent_to_json(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    return json(v);
}

inline double exponent_from_json(const json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw config_error("expected a number or \"inf\", got \"" + s + "\"");
    }
    return j.get<double>();
}

inline json to_json(const Box& b) {
    if (b.empty() && b.lo.empty()) return json(nullptr);
    return json{{"lo", b.lo}, {"hi", b.hi}};
}

inline Box box_from_json(const json& j) {
    if (j.is_null()) return Box();
    return Box(j.at("lo").get<std::vector<double>>(), j.at("hi").get<std::vector<double>>());
}

inline json to_json(const SplineLayer& l) {
    json j{{"k", l.k}, {"indices", l.indices}, {"coeffs", l.coeffs}};
    if (l.region) j["region"] = to_json(*l.region);
    return j;
}

inline json to_json(const SplineExpansion& e) {
    json layers = json::array();
    for (const auto& l : e.layers) layers.push_back(to_json(l));
    return json{{"m", e.m}, {"dim", e.dim}, {"layers", layers}};
}

inline SplineExpansion expansion_from_json(const json& j) {
    SplineExpansion e;
    e.m = j.at("m").get<int>();
    e.dim = j.at("dim").get<int>();
    for (const auto& jl : j.at("layers")) {
        SplineLayer l;
        l.k = jl.at("k").get<int>();
        l.indices = jl.at("indices").get<std::vector<DyadicIndex>>();
        l.coeffs = jl.at("coeffs").get<std::vector<double>>();
        if (jl.contains("region")) l.region = box_from_json(jl.at("region"));
        e.layers.push_back(std::move(l));
    }
    e.finalize();
    return e;
}

inline json to_json(const SmoothnessProfile& p) {
    return json{{"s", p.s}, {"beta", p.beta}, {"alpha", p.alpha}, {"c", p.c}};
}

inline SmoothnessProfile profile_from_json(const json& j) {
    SmoothnessProfile p;
    p.s = j.at("s").get<double>();
    p.beta = j.at("beta").get<double>();
    p.alpha = j.at("alpha").get<double>();
    p.c = j.at("c").get<std::vector<double>>();
    return p;
}

inline json to_json(const BesovParams& p) {
    return json{{"p", exponent_to_json(p.p)},
                {"q", exponent_to_json(p.q)},
                {"r", exponent_to_json(p.r)},
                {"r_diff", p.r_diff}};
}

inline BesovParams params_from_json(const json& j) {
    BesovParams p;
    p.p = exponent_from_json(j.at("p"));
    p.q = exponent_from_json(j.at("q"));
    p.r = exponent_from_json(j.at("r"));
    if (j.contains("r_diff")) p.r_diff = j.at("r_diff").get<int>();
    return p;
}

inline json to_json(const AdaptiveBudget& b) {
    return json{{"N", b.N},
                {"d", b.d},
                {"m", b.m},
                {"kbar", b.kbar},
                {"a_k", b.a_k},
                {"t", b.t},
                {"N_k", b.N_k},
                {"eps_sched", b.eps_sched},
                {"lambda", b.lambda},
                {"k_star", b.k_star},
                {"kNk_star", b.kNk_star},
                {"max_level", b.max_level},
                {"greedy", b.greedy},
                {"degenerate", b.degenerate},
                {"levels_truncated", b.levels_truncated},
                {"n_k", b.n_k},
                {"m_k", b.m_k},
                {"audit_limit", b.audit_limit},
                {"audit_constant", b.audit_constant}};
}

inline json to_json(const PiecewiseSplineApprox& f) {
    json j{{"region", to_json(f.region)},
           {"outer", to_json(f.outer)},
           {"inner", to_json(f.inner)},
           {"has_plan", f.has_plan}};
    if (f.has_plan) {
        j["profile"] = to_json(f.prof);
        j["params"] = to_json(f.params);
        j["budget"] = to_json(f.budget);
    }
    return j;
}

inline PiecewiseSplineApprox piecewise_from_json(const json& j) {
    PiecewiseSplineApprox f;
    f.region = box_from_json(j.at("region"));
    f.outer = expansion_from_json(j.at("outer"));
    f.inner = expansion_from_json(j.at("inner"));
    return f;  // plan metadata is advisory; reloads are for evaluation
}

inline json to_json(const TargetFunction& t) {
    json j{{"tag", t.tag},
           {"dim", t.dim},
           {"sup_norm", t.sup_norm},
           {"certificate", t.certificate}};
    if (t.expansion) j["expansion"] = to_json(*t.expansion);
    return j;
}

inline TargetFunction target_from_json(const json& j) {
    TargetFunction t;
    t.tag = j.at("tag").get<std::string>();
    t.dim = j.at("dim").get<int>();
    t.sup_norm = j.at("sup_norm").get<double>();
    t.certificate = j.at("certificate").get<double>();
    if (!j.contains("expansion"))
        throw config_error("target_from_json: only expansion-backed targets can be reloaded");
    auto e = std::make_shared<SplineExpansion>(expansion_from_json(j.at("expansion")));
    t.expansion = e;
    t.fn = [e](const std::vector<double>& x) { return e->eval(x); };
    return t;
}

inline json to_json(const SparseLayer& l) {
    json w = json::array();
    for (const auto& e : l.weights) w.push_back(json::array({e.r, e.c, e.w}));
    json b = json::array();
    for (const auto& e : l.bias) b.push_back(json::array({e.first, e.second}));
    return json{{"rows", l.rows}, {"cols", l.cols}, {"w", w}, {"b", b}};
}

inline json to_json(const ReluNetwork& net) {
    json layers = json::array();
    for (const auto& l : net.layers) layers.push_back(to_json(l));
    return json{{"input_dim", net.input_dim}, {"layers", layers}};
}

inline ReluNetwork network_from_json(const json& j) {
    ReluNetwork net;
    net.input_dim = j.at("input_dim").get<int>();
    for (const auto& jl : j.at("layers")) {
        SparseLayer l;
        l.rows = jl.at("rows").get<int>();
        l.cols = jl.at("cols").get<int>();
        for (const auto& e : jl.at("w"))
            l.add(e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>());
        for (const auto& e : jl.at("b")) l.add_bias(e.at(0).get<int>(), e.at(1).get<double>());
        l.canonicalize();
        net.layers.push_back(std::move(l));
    }
    check_dims(net, "network_from_json");
    return net;
}

inline json to_json(const NetworkStats& s) {
    return json{{"L", s.L}, {"W", s.W}, {"S", s.S}, {"B", s.B}};
}

inline json to_json(const CompileReport& r) {
    return json{{"target_eps", r.target_eps},
                {"xi", r.xi},
                {"eps_admissible", exponent_to_json(r.eps_admissible)},
                {"xi_admissible", exponent_to_json(r.xi_admissible)},
                {"F_used", r.F_used},
                {"t_low", r.t_low},
                {"t_high", r.t_high},
                {"n_terms", r.n_terms},
                {"n_inner", r.n_inner},
                {"n_outer", r.n_outer},
                {"k_max", r.k_max},
                {"stats", to_json(r.net_stats)},
                {"L_bound", r.L_bound},
                {"W_bound", r.W_bound},
                {"S_bound", r.S_bound},
                {"w1", r.w1},
                {"size_constant", r.size_constant},
                {"B_formula", r.B_formula},
                {"b_ratio", r.b_ratio},
                {"measured_sup_error", r.measured_sup_error},
                {"worst_point", r.worst_point},
                {"fidelity_slack", r.fidelity_slack},
                {"max_active_coeff_sum", r.max_active_coeff_sum},
                {"audit_points", r.audit_points},
                {"collar_skipped", r.collar_skipped}};
}

}  // namespace varbesov
