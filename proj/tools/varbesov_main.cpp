// varbesov: adaptive spline approximation on variable-exponent smoothness
// classes, ReLU network compilation with certified budgets, and estimator
// rate experiments. Subcommands: approx, compile, estimate, compare-linear,
// rates, diagnose.
//
// Exit codes: 0 ok, 2 config error, 3 precondition violation, 4 audit failure.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "varbesov/estimators.hpp"
#include "varbesov/rates.hpp"
#include "varbesov/serialize.hpp"

namespace fs = std::filesystem;
using namespace varbesov;

namespace {

constexpr const char* kVersion = "1.0.0";

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string out_dir = "out";
    int threads = 1;
    bool json_out = false;
};

struct RunContext {
    json config;               // resolved (file + flag overrides)
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
    int threads = 1;
    bool json_out = false;
    fs::path out_dir;
    std::vector<std::pair<std::string, std::uint64_t>> outputs;  // file, fnv64
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    void write_output(const std::string& name, const std::string& content) {
        fs::path p = out_dir / name;
        std::ofstream f(p, std::ios::binary);
        if (!f) throw config_error("cannot open output file " + p.string());
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.close();
        outputs.emplace_back(name, fnv1a64(content));
    }

    void write_manifest(const std::string& subcommand) {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        json m{{"tool", "varbesov"},
               {"version", kVersion},
               {"subcommand", subcommand},
               {"config", config},
               {"config_hash", hex64(config_hash)},
               {"seed", seed},
               {"threads", threads},
               {"wall_seconds", wall}};
        json outs = json::array();
        for (const auto& [name, h] : outputs) outs.push_back({{"file", name}, {"fnv64", hex64(h)}});
        m["outputs"] = outs;
        fs::path p = out_dir / "manifest.json";
        std::ofstream f(p, std::ios::binary);
        f << m.dump(2) << "\n";
    }
};

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream f(path);
    if (!f) throw config_error("cannot read config file " + path);
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw config_error(std::string("config parse error in ") + path + ": " + e.what());
    }
}

RunContext make_context(const CommonOpts& opts, const json& defaults) {
    RunContext ctx;
    json cfg = defaults;
    const json file_cfg = load_config_file(opts.config_path);
    if (!file_cfg.is_object()) throw config_error("config root must be a JSON object");
    for (auto it = file_cfg.begin(); it != file_cfg.end(); ++it) cfg[it.key()] = it.value();
    // flags override file values; threads stay out of the hashed config so
    // the worker count never changes output bytes
    if (opts.seed_given) cfg["seed"] = opts.seed;
    ctx.config = cfg;
    ctx.config_hash = fnv1a64(cfg.dump());
    ctx.seed = cfg.value("seed", std::uint64_t{0});
    ctx.threads = std::max(1, opts.threads);
    ctx.json_out = opts.json_out;
    ctx.out_dir = fs::path(opts.out_dir);
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw config_error("cannot create output directory " + ctx.out_dir.string());
    return ctx;
}

template <typename T>
T require_field(const json& cfg, const std::string& key) {
    if (!cfg.contains(key)) throw config_error("missing config field: " + key);
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception& e) {
        throw config_error("bad config field " + key + ": " + e.what());
    }
}

SmoothnessProfile profile_from_cfg(const json& cfg) {
    if (!cfg.contains("profile")) throw config_error("missing config field: profile");
    try {
        SmoothnessProfile p = profile_from_json(cfg.at("profile"));
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw config_error(std::string("bad profile: ") + e.what());
    }
}

BesovParams params_from_cfg(const json& cfg) {
    if (!cfg.contains("params")) return BesovParams{};
    try {
        BesovParams p = params_from_json(cfg.at("params"));
        p.validate();
        return p;
    } catch (const json::exception& e) {
        throw config_error(std::string("bad params: ") + e.what());
    }
}

/// Default rough-bump index: the level-k cell block centered on c.
DyadicIndex centered_index(const SmoothnessProfile& prof, int m, int k) {
    DyadicIndex j(prof.c.size());
    for (size_t i = 0; i < prof.c.size(); ++i) {
        j[i] = static_cast<int>(std::floor(std::ldexp(prof.c[i], k) - (m + 1) / 2.0));
        j[i] = std::max(j[i], -m);
        j[i] = std::min(j[i], (1 << k) - 1);
    }
    return j;
}

/// Build the experiment target from config. Kinds:
///   random_besov     — fresh unit-ball element (per-replication when reseeded)
///   scaled_bspline   — single scaled bump at the rough point
///   one_hot          — single bump at a uniformly random index
///   composite        — smooth background plus scaled rough bump at c
TargetFunction target_from_cfg(const json& cfg, const SmoothnessProfile& prof,
                               const BesovParams& params, int m, std::uint64_t seed) {
    const json t = cfg.value("target", json{{"kind", "composite"}});
    const std::string kind = t.value("kind", std::string("composite"));
    const int d = prof.dim();
    const double p = t.value("p", params.p);
    if (kind == "random_besov") {
        const double s = t.value("s", prof.s);
        const double q = t.value("q", params.q);
        const int K = t.value("K_levels", 4);
        return random_besov(d, m, s, p, q, K, derive_seed(seed, 0xbe50));
    }
    if (kind == "scaled_bspline") {
        const int k = require_field<int>(t, "k");
        DyadicIndex j = t.contains("j") ? t.at("j").get<DyadicIndex>() : centered_index(prof, m, k);
        return scaled_bspline_target(prof, p, m, k, j);
    }
    if (kind == "one_hot") {
        const int k = require_field<int>(t, "k");
        return one_hot_family(prof, p, m, k, derive_seed(seed, 0x0e07));
    }
    if (kind == "composite") {
        const double s_bg = t.value("s_smooth", prof.s + 2.0);
        const int K_bg = t.value("K_smooth", 3);
        const int k_rough = t.value("k_rough", 8);
        const double w_bg = t.value("smooth_weight", 1.0);
        const double w_rough = t.value("rough_weight", 1.0);
        TargetFunction bg =
            random_besov(d, m, s_bg, params.p, params.q, K_bg, derive_seed(seed, 0xb6));
        TargetFunction rough =
            scaled_bspline_target(prof, p, m, k_rough, centered_index(prof, m, k_rough));
        TargetFunction out;
        out.tag = "composite";
        out.dim = d;
        auto e = std::make_shared<SplineExpansion>(*bg.expansion);
        for (const auto& layer : rough.expansion->layers)
            for (size_t i = 0; i < layer.coeffs.size(); ++i)
                e->add_term(layer.k, layer.indices[i], w_rough * layer.coeffs[i]);
        if (w_bg != 1.0)
            for (auto& layer : e->layers)
                for (auto& a : layer.coeffs)
                    if (layer.k <= K_bg) a *= w_bg;
        e->finalize();
        out.expansion = e;
        out.fn = [e](const std::vector<double>& x) { return e->eval(x); };
        out.sup_norm = w_bg * bg.sup_norm + w_rough * rough.sup_norm;
        out.certificate = std::max(bg.certificate, rough.certificate);
        return out;
    }
    throw config_error("unknown target kind: " + kind);
}

ApproxMode mode_from_name(const std::string& name) {
    if (name == "uniform") return ApproxMode::uniform;
    if (name == "adaptive_i") return ApproxMode::adaptive_i;
    if (name == "adaptive_ii") return ApproxMode::adaptive_ii;
    throw config_error("unknown approximation mode: " + name);
}

/// Run `n_cells` independent jobs with deterministic output slots. With
/// more than one thread the cells are claimed atomically; results land in
/// cell order regardless of completion order.
template <typename Fn>
void run_cells(int n_cells, int threads, Fn&& job) {
    if (threads <= 1 || n_cells <= 1) {
        for (int i = 0; i < n_cells; ++i) job(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
    const int nt = std::min(threads, n_cells);
    for (int t = 0; t < nt; ++t)
        pool.emplace_back([&, t] {
            try {
                for (int i = next.fetch_add(1); i < n_cells; i = next.fetch_add(1)) job(i);
            } catch (...) {
                errors[static_cast<size_t>(t)] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

void emit_summary(const RunContext& ctx, const json& human_fields) {
    if (ctx.json_out) {
        json j = human_fields;
        j["config_hash"] = hex64(ctx.config_hash);
        j["out_dir"] = ctx.out_dir.string();
        std::cout << j.dump(2) << "\n";
        return;
    }
    for (auto it = human_fields.begin(); it != human_fields.end(); ++it)
        std::cout << it.key() << ": "
                  << (it.value().is_string() ? it.value().get<std::string>() : it.value().dump())
                  << "\n";
    std::cout << "outputs in " << ctx.out_dir.string() << " (config "
              << hex64(ctx.config_hash) << ")\n";
}

// ---- approx ---------------------------------------------------------------

int cmd_approx(const CommonOpts& opts) {
    json defaults{
        {"profile", {{"s", 1.0}, {"beta", 3.0}, {"alpha", 0.3}, {"c", {0.5, 0.5}}}},
        {"params", {{"p", 2.0}, {"q", 2.0}, {"r", 2.0}, {"r_diff", 2}}},
        {"m", 2},
        {"modes", {"uniform", "adaptive_i"}},
        {"N_grid", {256, 512, 1024, 2048, 4096}},
        {"error_r", 2.0},
        {"seed", 2024},
    };
    RunContext ctx = make_context(opts, defaults);
    const SmoothnessProfile prof = profile_from_cfg(ctx.config);
    const BesovParams params = params_from_cfg(ctx.config);
    const int m = require_field<int>(ctx.config, "m");
    const auto N_grid = require_field<std::vector<long long>>(ctx.config, "N_grid");
    if (N_grid.empty()) throw config_error("N_grid must be nonempty");
    const auto mode_names = require_field<std::vector<std::string>>(ctx.config, "modes");
    if (mode_names.empty()) throw config_error("modes must be nonempty");
    const double error_r = ctx.config.value("error_r", 2.0);

    TargetFunction target = target_from_cfg(ctx.config, prof, params, m, ctx.seed);

    struct Row {
        long long N;
        std::string mode;
        double err;
    };
    const int n_cells = static_cast<int>(N_grid.size() * mode_names.size());
    std::vector<Row> rows(static_cast<size_t>(n_cells));
    run_cells(n_cells, ctx.threads, [&](int ci) {
        const size_t iN = static_cast<size_t>(ci) / mode_names.size();
        const size_t im = static_cast<size_t>(ci) % mode_names.size();
        AdaptiveBudget budget = plan_budget(N_grid[iN], prof, params, m);
        PiecewiseSplineApprox fn =
            approximate(target.fn, prof, params, budget, mode_from_name(mode_names[im]));
        rows[static_cast<size_t>(ci)] = {N_grid[iN], mode_names[im],
                                         error_report(target.fn, fn, error_r)};
    });

    std::string csv = csv_header("N,mode,error", ctx.config_hash);
    for (const auto& r : rows)
        csv += std::to_string(r.N) + "," + r.mode + "," + format_g17(r.err) + "\n";
    ctx.write_output("approx.csv", csv);
    ctx.write_output("target.json", to_json(target).dump(2) + "\n");
    ctx.write_manifest("approx");
    emit_summary(ctx, json{{"rows", n_cells}, {"target", target.tag}});
    return 0;
}

// ---- compile --------------------------------------------------------------

int cmd_compile(const CommonOpts& opts) {
    json defaults{
        {"profile", {{"s", 1.0}, {"beta", 0.0}, {"alpha", 1.0}, {"c", {0.5, 0.5}}}},
        {"params", {{"p", 2.0}, {"q", 2.0}, {"r", 2.0}, {"r_diff", 2}}},
        {"m", 2},
        {"N", 16},
        {"mode", "uniform"},
        {"eps", 1e-2},
        {"xi", 1e-6},
        {"audit_points_per_axis", 0},
        {"seed", 2024},
    };
    RunContext ctx = make_context(opts, defaults);
    const SmoothnessProfile prof = profile_from_cfg(ctx.config);
    const BesovParams params = params_from_cfg(ctx.config);
    const int m = require_field<int>(ctx.config, "m");
    const long long N = require_field<long long>(ctx.config, "N");
    const double eps = require_field<double>(ctx.config, "eps");
    const double xi = ctx.config.value("xi", 0.0);

    TargetFunction target = target_from_cfg(ctx.config, prof, params, m, ctx.seed);
    AdaptiveBudget budget = plan_budget(N, prof, params, m);
    PiecewiseSplineApprox fn = approximate(target.fn, prof, params, budget,
                                           mode_from_name(ctx.config.value("mode", "uniform")));

    CompileOptions copts;
    copts.audit_points_per_axis = ctx.config.value("audit_points_per_axis", 0);
    auto [net, report] = compile(fn, eps, xi, copts);

    ctx.write_output("network.json", to_json(net).dump() + "\n");
    ctx.write_output("report.json", to_json(report).dump(2) + "\n");
    ctx.write_output("approximant.json", to_json(fn).dump() + "\n");
    ctx.write_manifest("compile");
    const NetworkStats st = report.net_stats;
    emit_summary(ctx, json{{"terms", report.n_terms},
                           {"depth", st.L},
                           {"width", st.W},
                           {"nonzeros", st.S},
                           {"max_weight", st.B},
                           {"measured_sup_error", report.measured_sup_error},
                           {"eps", eps}});
    return 0;
}

// ---- estimate / compare-linear ----------------------------------------------

struct EstimateRow {
    std::string estimator;
    long long n = 0;
    std::uint64_t seed = 0;
    double risk = 0.0;
    double stderr_ = 0.0;
    double cost = 0.0;
};

std::string estimate_csv(const std::vector<EstimateRow>& rows, std::uint64_t hash) {
    std::string csv = csv_header("estimator,n,seed,risk,stderr,fit_cost", hash);
    for (const auto& r : rows)
        csv += r.estimator + "," + std::to_string(r.n) + "," + std::to_string(r.seed) + "," +
               format_g17(r.risk) + "," + format_g17(r.stderr_) + "," + format_g17(r.cost) + "\n";
    return csv;
}

json estimate_defaults() {
    return json{
        {"profile", {{"s", 1.5}, {"beta", 0.0}, {"alpha", 1.0}, {"c", {0.5}}}},
        {"params", {{"p", 2.0}, {"q", 2.0}, {"r", 2.0}, {"r_diff", 2}}},
        {"m", 2},
        {"target", {{"kind", "random_besov"}}},
        {"sigma", 0.3},
        {"n_grid", {128, 256, 512, 1024, 2048, 4096, 8192}},
        {"replications", 20},
        {"risk_points", 4096},
        {"F", 2.0},
        {"kbar_divisor", 4.0},
        {"kernel", {{"bandwidth", 0.0}, {"lambda", 0.0}}},
        {"seed", 2024},
    };
}

/// One replication cell: draw target and sample, fit the requested
/// estimators, measure Monte-Carlo risk.
std::vector<EstimateRow> run_estimate_cells(const RunContext& ctx, bool with_kernel) {
    const SmoothnessProfile prof = profile_from_cfg(ctx.config);
    const BesovParams params = params_from_cfg(ctx.config);
    const int m = require_field<int>(ctx.config, "m");
    const auto n_grid = require_field<std::vector<long long>>(ctx.config, "n_grid");
    if (n_grid.empty()) throw config_error("n_grid must be nonempty");
    const int reps = require_field<int>(ctx.config, "replications");
    if (reps < 1) throw config_error("replications must be >= 1");
    const double sigma = require_field<double>(ctx.config, "sigma");
    const long long risk_points = ctx.config.value("risk_points", 4096LL);
    const double F = ctx.config.value("F", 2.0);
    const double kbar_divisor = ctx.config.value("kbar_divisor", 4.0);
    if (!(kbar_divisor > 0.0)) throw config_error("kbar_divisor must be positive");
    const double kr_bandwidth = ctx.config.at("kernel").value("bandwidth", 0.0);
    const double kr_lambda = ctx.config.at("kernel").value("lambda", 0.0);
    const int d = prof.dim();

    const int per_cell = with_kernel ? 2 : 1;
    const int n_cells = static_cast<int>(n_grid.size()) * reps;
    std::vector<EstimateRow> rows(static_cast<size_t>(n_cells * per_cell));

    run_cells(n_cells, ctx.threads, [&](int ci) {
        const size_t iN = static_cast<size_t>(ci) / static_cast<size_t>(reps);
        const long long n = n_grid[iN];
        const std::uint64_t cell_seed = derive_seed(ctx.seed, static_cast<std::uint64_t>(ci) + 1000);

        TargetFunction target = target_from_cfg(ctx.config, prof, params, m, cell_seed);
        RegressionSample sample =
            sample_regression(target, n, sigma, derive_seed(cell_seed, 2));

        const int kbar = std::max(
            1, static_cast<int>(std::llround(std::log2(static_cast<double>(n)) / kbar_divisor)));
        const long long Nterms = std::max(1LL << d, 1LL << (kbar * d));
        AdaptiveBudget budget = plan_budget(Nterms, prof, params, m);

        FittedEstimator deep = fit_adaptive_ls(sample, prof, params, budget, F);
        RiskEstimate risk = empirical_risk(deep, target, risk_points, derive_seed(cell_seed, 3));
        rows[static_cast<size_t>(ci) * per_cell] =
            {"adaptive_ls", n, cell_seed, risk.risk, risk.std_error, deep.fit_cost};

        if (with_kernel) {
            FittedEstimator lin = fit_kernel_ridge(sample, kr_bandwidth, kr_lambda);
            RiskEstimate rl = empirical_risk(lin, target, risk_points, derive_seed(cell_seed, 3));
            rows[static_cast<size_t>(ci) * per_cell + 1] =
                {"kernel_ridge", n, cell_seed, rl.risk, rl.std_error, lin.fit_cost};
        }
    });
    return rows;
}

json slope_summary(const std::vector<EstimateRow>& rows, const std::string& estimator,
                   const std::vector<long long>& n_grid, int reps) {
    std::vector<double> xs, ys;
    for (long long n : n_grid) {
        double acc = 0.0;
        int cnt = 0;
        for (const auto& r : rows)
            if (r.estimator == estimator && r.n == n) {
                acc += r.risk;
                ++cnt;
            }
        if (cnt == reps && acc > 0.0) {
            xs.push_back(static_cast<double>(n));
            ys.push_back(acc / cnt);
        }
    }
    if (xs.size() < 3) return json{{"estimator", estimator}, {"slope", nullptr}};
    SlopeFit f = fit_slope(xs, ys);
    return json{{"estimator", estimator}, {"slope", f.slope}, {"r2", f.r2}};
}

int cmd_estimate(const CommonOpts& opts, bool with_kernel) {
    RunContext ctx = make_context(opts, estimate_defaults());
    const auto n_grid = require_field<std::vector<long long>>(ctx.config, "n_grid");
    const int reps = require_field<int>(ctx.config, "replications");
    std::vector<EstimateRow> rows = run_estimate_cells(ctx, with_kernel);
    const std::string name = with_kernel ? "compare_linear.csv" : "estimate.csv";
    ctx.write_output(name, estimate_csv(rows, ctx.config_hash));

    json summary{{"cells", static_cast<int>(n_grid.size()) * reps}};
    json slopes = json::array();
    slopes.push_back(slope_summary(rows, "adaptive_ls", n_grid, reps));
    if (with_kernel) slopes.push_back(slope_summary(rows, "kernel_ridge", n_grid, reps));
    summary["slopes"] = slopes;
    if (with_kernel) {
        // fraction of replication cells where the adaptive fit wins, per n
        json frac = json::object();
        for (long long n : n_grid) {
            int wins = 0, total = 0;
            for (size_t i = 0; i + 1 < rows.size(); i += 2)
                if (rows[i].n == n) {
                    ++total;
                    if (rows[i].risk < rows[i + 1].risk) ++wins;
                }
            if (total > 0)
                frac[std::to_string(n)] = static_cast<double>(wins) / total;
        }
        summary["deep_win_fraction"] = frac;
    }
    ctx.write_output("summary.json", summary.dump(2) + "\n");
    ctx.write_manifest(with_kernel ? "compare-linear" : "estimate");
    emit_summary(ctx, summary);
    return 0;
}

// ---- rates ------------------------------------------------------------------

int cmd_rates(const CommonOpts& opts) {
    json defaults{
        {"s", 1.0},
        {"d", 15},
        {"alpha", 0.2},
        {"p", 2.0},
        {"delta", 0.0},
        {"s_fixed_offset", 5.0},
        {"n_lo", 1e3},
        {"n_hi", 1e6},
        {"points", 25},
        {"curves", {"deep_variable", "besov_fixed", "besov_fixed_improved", "linear_lower"}},
        {"seed", 2024},
    };
    RunContext ctx = make_context(opts, defaults);
    RateSpec spec;
    spec.s = require_field<double>(ctx.config, "s");
    spec.d = require_field<int>(ctx.config, "d");
    spec.alpha = require_field<double>(ctx.config, "alpha");
    spec.p = ctx.config.value("p", 2.0);
    spec.delta = ctx.config.value("delta", 0.0);
    const double n_lo = require_field<double>(ctx.config, "n_lo");
    const double n_hi = require_field<double>(ctx.config, "n_hi");
    const int points = require_field<int>(ctx.config, "points");
    try {
        spec.grid = log_spaced_grid(n_lo, n_hi, points);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("bad grid: ") + e.what());
    }
    const double s_off = ctx.config.value("s_fixed_offset", 5.0);
    const auto curve_names = require_field<std::vector<std::string>>(ctx.config, "curves");
    if (curve_names.empty()) throw config_error("curves must be nonempty");

    std::string csv = csv_header("n,curve,value", ctx.config_hash);
    for (const std::string& name : curve_names) {
        RateSpec cs = spec;
        if (name == "deep_variable") {
            cs.kind = CurveKind::deep_variable;
        } else if (name == "besov_fixed") {
            cs.kind = CurveKind::besov_fixed;
            cs.s_fixed = spec.s;
        } else if (name == "besov_fixed_improved") {
            cs.kind = CurveKind::besov_fixed;
            cs.s_fixed = spec.s + s_off;
        } else if (name == "linear_lower") {
            cs.kind = CurveKind::linear_lower;
        } else if (name == "approx_variable") {
            cs.kind = CurveKind::approx_variable;
        } else {
            throw config_error("unknown curve: " + name);
        }
        std::vector<double> vals;
        try {
            vals = rate_curve(cs);
        } catch (const std::invalid_argument& e) {
            throw config_error("curve " + name + ": " + e.what());
        }
        for (size_t i = 0; i < cs.grid.size(); ++i)
            csv += format_g17(cs.grid[i]) + "," + name + "," + format_g17(vals[i]) + "\n";
    }
    ctx.write_output("rates.csv", csv);
    json sidecar{{"s", spec.s},          {"d", spec.d},   {"alpha", spec.alpha},
                 {"p", spec.p},          {"nu", nu_exponent(spec.p, spec.d)},
                 {"delta", spec.delta},  {"n_lo", n_lo},  {"n_hi", n_hi},
                 {"points", points},     {"curves", curve_names},
                 {"log_base", "natural; slopes are base-invariant"}};
    ctx.write_output("rates_spec.json", sidecar.dump(2) + "\n");
    ctx.write_manifest("rates");
    emit_summary(ctx, json{{"curves", curve_names}, {"points", points}});
    return 0;
}

// ---- diagnose ---------------------------------------------------------------

int cmd_diagnose(const CommonOpts& opts) {
    json defaults{
        {"profile", {{"s", 1.0}, {"beta", 3.0}, {"alpha", 0.3}, {"c", {0.5, 0.5}}}},
        {"params", {{"p", 2.0}, {"q", 2.0}, {"r", 2.0}, {"r_diff", 2}}},
        {"m", 2},
        {"N", 1024},
        {"eps", 1e-2},
        {"seed", 2024},
    };
    RunContext ctx = make_context(opts, defaults);
    const SmoothnessProfile prof = profile_from_cfg(ctx.config);
    const BesovParams params = params_from_cfg(ctx.config);
    const int m = require_field<int>(ctx.config, "m");
    const long long N = require_field<long long>(ctx.config, "N");
    const double eps = ctx.config.value("eps", 1e-2);
    const int d = prof.dim();

    AdaptiveBudget budget = plan_budget(N, prof, params, m);
    const double delta = params.delta(d);
    const double eps_adm = admissible_epsilon(N, d, params.p, prof.s, delta, prof.alpha);
    json diag{{"budget", to_json(budget)},
              {"delta", delta},
              {"nu_estimation", params.nu(d)},
              {"admissible_epsilon", exponent_to_json(eps_adm)},
              {"epsilon_equivalent",
               N >= 16 ? json(epsilon_equivalent(N, prof.s, delta, d, prof.alpha)) : json(nullptr)},
              {"size_constant", compile_constant(d, m)},
              {"requested_eps", eps},
              {"eps_within_admissible", eps <= eps_adm}};
    if (!budget.degenerate && budget.t > 0.0) {
        Box A = refinement_region(budget, prof);
        diag["refinement_region"] = to_json(A);
        const double rr = std::isinf(params.r) ? 2.0 : params.r;
        diag["xi_limit"] = xi_limit(eps, 1.0, budget.t, d, rr);
    }
    ctx.write_output("diagnose.json", diag.dump(2) + "\n");
    ctx.write_manifest("diagnose");
    emit_summary(ctx, json{{"kbar", budget.kbar},
                           {"greedy", budget.greedy},
                           {"degenerate", budget.degenerate},
                           {"eps_within_admissible", eps <= eps_adm}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive spline approximation, ReLU compilation, and rate experiments"};
    app.set_version_flag("--version", std::string("varbesov ") + kVersion);
    app.require_subcommand(1);

    CommonOpts opts;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "JSON config file");
        sub->add_option("--seed", opts.seed, "seed override")->each([&](const std::string&) {
            opts.seed_given = true;
        });
        sub->add_option("--out", opts.out_dir, "output directory (default: out)");
        sub->add_option("--threads", opts.threads, "worker threads for replication cells");
        sub->add_flag("--json", opts.json_out, "machine-readable summary on stdout");
    };

    CLI::App* approx = app.add_subcommand("approx", "N-term approximation error sweeps");
    CLI::App* compile_cmd = app.add_subcommand("compile", "compile an approximant to a ReLU network");
    CLI::App* estimate = app.add_subcommand("estimate", "adaptive least-squares risk experiment");
    CLI::App* compare =
        app.add_subcommand("compare-linear", "adaptive vs kernel-ridge paired experiment");
    CLI::App* rates = app.add_subcommand("rates", "theoretical rate curves");
    CLI::App* diagnose = app.add_subcommand("diagnose", "echo the derived plan for a config");
    for (CLI::App* sub : {approx, compile_cmd, estimate, compare, rates, diagnose})
        add_common(sub);

    CLI11_PARSE(app, argc, argv);

    try {
        if (approx->parsed()) return cmd_approx(opts);
        if (compile_cmd->parsed()) return cmd_compile(opts);
        if (estimate->parsed()) return cmd_estimate(opts, false);
        if (compare->parsed()) return cmd_estimate(opts, true);
        if (rates->parsed()) return cmd_rates(opts);
        if (diagnose->parsed()) return cmd_diagnose(opts);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const audit_error& e) {
        std::cerr << "audit failure: " << e.what() << "\n";
        return 4;
    } catch (const precondition_error& e) {
        std::cerr << "precondition violation: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "precondition violation: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
