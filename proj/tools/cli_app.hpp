#pragma once

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ctlstop/ctlstop.hpp"
#include "ctlstop/io.hpp"
#include "ctlstop/run_config.hpp"

namespace ctlstop::cli {

namespace fs = std::filesystem;
using io::json;

enum Exit : int { kOk = 0, kOther = 1, kConfig = 2, kRegime = 3, kVerifyFail = 4, kStepTooLarge = 5 };

inline int exit_code(Errc c) {
    switch (c) {
    case Errc::InvalidConfig:
    case Errc::InvalidModel:
    case Errc::GridTooCoarse:
    case Errc::OutOfSupportedRange:
    case Errc::AtBreakpoint: return kConfig;
    case Errc::RegimeGap:
    case Errc::RegimeOverlap: return kRegime;
    case Errc::StepTooLarge: return kStepTooLarge;
    default: return kOther;
    }
}

/// Where artifacts go and what the caller sees on stdout.
struct Sink {
    fs::path dir;
    std::ostream& out;

    std::string path(const std::string& name) const { return (dir / name).string(); }
    void json_file(const std::string& name, const json& j) const {
        io::write_json(path(name), j);
        out << path(name) << "\n";
    }
    void text_file(const std::string& name, const std::string& text) const {
        io::write_text(path(name), text);
        out << path(name) << "\n";
    }
};

inline Sink make_sink(const RunConfig& c, std::ostream& out) {
    const fs::path dir = c.text("output.path", ".");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(Errc::InvalidConfig, "cannot create " + dir.string() + ": " + ec.message());
    return {dir, out};
}

inline std::string format_of(const RunConfig& c) {
    const auto f = c.text("output.format", "csv");
    if (f != "csv" && f != "json") throw Error(Errc::InvalidConfig, "format must be csv or json");
    return f;
}

inline double need(const RunConfig& c, const std::string& key) {
    const auto v = c.real(key);
    if (!v) throw Error(Errc::InvalidConfig, "missing " + key);
    return *v;
}

inline QuadParams quad_params(const RunConfig& c) {
    return {need(c, "model.delta"), need(c, "model.kappa"), need(c, "model.lambda"), c.real("model.mu", 0.0)};
}

inline KinkParams kink_params(const RunConfig& c) { return {need(c, "model.delta"), need(c, "model.lambda")}; }

inline std::string model_case(const RunConfig& c) {
    const auto k = c.text("model.case", "");
    if (k != "quadratic" && k != "kink" && k != "general")
        throw Error(Errc::InvalidConfig, "case must be quadratic, kink or general (got '" + k + "')");
    return k;
}

/// Closed-form generator for the configured model.
inline io::GeneratorDoc solve_closed_form(const RunConfig& c) {
    const auto k = model_case(c);
    if (k == "quadratic") {
        const auto p = quad_params(c);
        return io::make_doc(classify_regime_I(p), p);
    }
    if (k == "kink") {
        const auto p = kink_params(c);
        return io::make_doc(classify_regime_II(p), p);
    }
    throw Error(Errc::InvalidConfig, "no closed form for case general");
}

/// Generator from --generator if given, otherwise solved from the model keys.
inline io::GeneratorDoc load_or_solve(const RunConfig& c) {
    const auto file = c.text("run.generator");
    if (!file.empty()) return io::generator_doc_from_json(io::read_json(file));
    return solve_closed_form(c);
}

inline double reach(const Generator& gen) {
    double r = 0.0;
    for (double j : gen.junctions()) r = std::max(r, j);
    for (const auto& b : gen.breakpoints) r = std::max(r, std::abs(b.x));
    return r;
}

inline double default_extent(const Generator& gen) { return std::max(2.0 * reach(gen), reach(gen) + 1.0); }

inline GameModel general_model(const RunConfig& c) {
    GameModel m;
    m.discount = need(c, "model.delta");
    m.drift = {c.real("model.b0", 0.0), c.real("model.b1", 0.0)};
    m.sigma = c.real("model.sigma", 1.0);
    const double kappa = c.real("model.kappa", 0.0), mu = c.real("model.mu", 0.0);
    if (kappa != 0.0 || mu != 0.0) m.h = {RunningPayoff::Kind::Quadratic, kappa, mu};
    const auto payoff = c.text("model.payoff", "quadratic");
    if (payoff == "quadratic") m.g.kind = TerminalPayoff::Kind::Quadratic;
    else if (payoff == "truncated_parabola") m.g.kind = TerminalPayoff::Kind::TruncatedParabola;
    else throw Error(Errc::InvalidConfig, "payoff must be quadratic or truncated_parabola");
    m.g.lambda = need(c, "model.lambda");
    m.validate();
    return m;
}

inline int cmd_solve_general(const RunConfig& c, const Sink& sink) {
    GridProblem prob;
    prob.model = general_model(c);
    prob.far_field = default_far_field(prob.model);
    prob.L = c.real("numeric.extent", 6.0);
    if (c.has("numeric.nodes")) prob.N = c.integer("numeric.nodes", 0);
    else prob.N = static_cast<long>(std::llround(2.0 * prob.L / c.real("numeric.grid_step", 1e-3))) + 1;
    const auto sol = solve(prob, 0, c.real("numeric.tol", 1e-12));
    const auto regions = extract_discrete_regions(sol);
    sink.text_file("fd.csv", io::discrete_csv(sol));
    sink.json_file("fd_regions.json", {{"model", io::to_json(prob.model)},
                                       {"L", prob.L},
                                       {"N", prob.N},
                                       {"h", prob.h()},
                                       {"outer_iterations", sol.outer_iterations},
                                       {"inner_iterations", sol.inner_iterations},
                                       {"max_residual", sol.max_residual},
                                       {"upwinded", sol.upwinded},
                                       {"regions", io::to_json(regions)}});
    return kOk;
}

inline int cmd_solve(const RunConfig& c, const Sink& sink) {
    if (model_case(c) == "general") return cmd_solve_general(c, sink);
    const auto doc = solve_closed_form(c);
    sink.json_file("generator.json", io::to_json(doc));
    const double extent = c.real("numeric.extent", default_extent(doc.generator));
    const auto xs = io::sample_grid(extent, c.real("numeric.grid_step", 1e-2));
    if (format_of(c) == "json") sink.json_file("solve.json", io::solve_samples_json(doc.generator, doc.model, xs));
    else sink.text_file("solve.csv", io::solve_csv(doc.generator, doc.model, xs));
    return kOk;
}

inline int cmd_verify(const RunConfig& c, const Sink& sink, std::ostream& err) {
    const auto doc = load_or_solve(c);
    VerifyOptions opt;
    opt.tol = c.real("numeric.tol", opt.tol);
    const double extent = c.real("numeric.extent", default_extent(doc.generator));
    const auto rep = verify(doc.generator, doc.model, c.real("numeric.grid_step", 1e-3), extent, opt);
    sink.json_file("report.json", io::to_json(rep));
    if (rep.verdict) return kOk;
    err << "verification failed:";
    for (const auto& f : rep.failures()) err << ' ' << f;
    err << "\n";
    return kVerifyFail;
}

inline Flavor flavor_of(const RunConfig& c) {
    const auto f = c.text("run.flavor", "V");
    if (f == "V" || f == "v") return Flavor::V;
    if (f == "U" || f == "u") return Flavor::U;
    throw Error(Errc::InvalidConfig, "flavor must be V or U");
}

inline int cmd_simulate(const RunConfig& c, const Sink& sink) {
    const auto doc = load_or_solve(c);
    const double x0 = need(c, "numeric.x0");
    const Flavor flavor = flavor_of(c);
    McConfig mc;
    mc.n_paths = c.integer("numeric.n_paths", mc.n_paths);
    mc.dt = c.real("numeric.dt", mc.dt);
    mc.seed = static_cast<std::uint64_t>(c.integer("numeric.seed", 1));
    mc.horizon = c.real("numeric.horizon", 0.0);
    mc.threads = static_cast<unsigned>(c.integer("numeric.threads", 0));

    const Strategy s = strategy_from_generator(doc.generator, doc.model);
    const auto est = estimate_value(s, doc.model, x0, flavor, mc);
    const double u = eval_u(doc.generator, x0);
    sink.json_file("estimate.json", {{"regime", doc.regime},
                                     {"x0", x0},
                                     {"flavor", to_string(flavor)},
                                     {"seed", mc.seed},
                                     {"u_x0", u},
                                     {"g_x0", doc.model.g(x0)},
                                     {"v_x0", std::max(u, doc.model.g(x0))},
                                     {"estimate", io::to_json(est)}});

    const long n_export = c.integer("numeric.export_paths", 0);
    for (long i = 0; i < n_export; ++i) {
        const auto rec = simulate_path(s, doc.model, x0, mc.dt, mc.horizon, mc.seed, StopRule::first_entry(),
                                       static_cast<std::uint64_t>(i));
        char name[32];
        std::snprintf(name, sizeof name, "path_%04ld.csv", i);
        sink.text_file(name, io::path_csv(rec));
    }

    if (c.flag("run.audit")) {
        const auto table = saddle_audit(doc.generator, doc.model, x0, flavor, default_deviations(), mc);
        sink.json_file("audit.json", io::to_json(table));
    }
    return kOk;
}

struct SweepRow {
    std::vector<double> params;
    std::string regime;
    double alpha = std::nan("");
    double beta = std::nan("");
    double residual = std::nan("");
    bool gap = false;
};

inline std::string csv_cell(double v) { return std::isnan(v) ? "" : io::fmt(v); }

template <class Fn>
void parallel_rows(std::vector<SweepRow>& rows, unsigned threads, Fn fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(rows.size(), 1)));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < rows.size(); i += threads) fn(rows[i]);
        });
    for (auto& th : pool) th.join();
}

template <class Solve>
void fill_row(SweepRow& r, Solve solve) {
    try {
        solve(r);
    } catch (const Error& e) {
        r.regime = to_string(e.code());
        r.gap = e.code() == Errc::RegimeGap || e.code() == Errc::RegimeOverlap;
    }
}

inline int cmd_sweep(const RunConfig& c, const Sink& sink, std::ostream& err) {
    const auto k = model_case(c);
    const unsigned threads = static_cast<unsigned>(c.integer("numeric.threads", 0));
    std::vector<SweepRow> rows;
    std::string header;

    if (k == "kink") {
        const double delta = need(c, "model.delta");
        const double lo = c.real("numeric.lambda_min", c.real("model.lambda", 0.1));
        const double hi = c.real("numeric.lambda_max", lo);
        const long n = c.integer("numeric.points", lo == hi ? 1 : 1000);
        if (n < 1 || hi < lo) throw Error(Errc::InvalidConfig, "need points >= 1 and lambda_max >= lambda_min");
        for (long i = 0; i < n; ++i) {
            const double lam = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
            rows.push_back({{delta, lam}});
        }
        header = "delta,lambda,regime,alpha,beta,residual\n";
        parallel_rows(rows, threads, [](SweepRow& r) {
            fill_row(r, [](SweepRow& row) {
                const auto res = classify_regime_II({row.params[0], row.params[1]});
                row.regime = to_string(res.tag);
                row.alpha = res.alpha;
                row.beta = res.beta.value_or(std::nan(""));
                row.residual = res.residual;
            });
        });
    } else if (k == "quadratic") {
        const long n = c.integer("numeric.samples", 1);
        if (n < 1) throw Error(Errc::InvalidConfig, "need samples >= 1");
        if (n == 1 && c.has("model.delta")) {
            const auto p = quad_params(c);
            rows.push_back({{p.delta, p.kappa, p.lambda, p.mu}});
        } else {
            // log-uniform for the positive scales, uniform for mu
            std::mt19937_64 rng(static_cast<std::uint64_t>(c.integer("numeric.seed", 1)));
            auto log_u = [&](const char* lo_key, const char* hi_key) {
                const double lo = c.real(lo_key, 0.1), hi = c.real(hi_key, 10.0);
                if (!(lo > 0.0 && hi >= lo)) throw Error(Errc::InvalidConfig, std::string("bad range for ") + lo_key);
                return std::exp(std::uniform_real_distribution<double>(std::log(lo), std::log(hi))(rng));
            };
            const double mu_lo = c.real("numeric.mu_min", 0.0), mu_hi = c.real("numeric.mu_max", 5.0);
            if (!(mu_lo >= 0.0 && mu_hi >= mu_lo)) throw Error(Errc::InvalidConfig, "bad range for mu");
            for (long i = 0; i < n; ++i) {
                const double d = log_u("numeric.delta_min", "numeric.delta_max");
                const double kap = log_u("numeric.kappa_min", "numeric.kappa_max");
                const double lam = log_u("numeric.lambda_min", "numeric.lambda_max");
                const double mu = std::uniform_real_distribution<double>(mu_lo, mu_hi)(rng);
                rows.push_back({{d, kap, lam, mu}});
            }
        }
        header = "delta,kappa,lambda,mu,regime,alpha,beta,residual\n";
        parallel_rows(rows, threads, [](SweepRow& r) {
            fill_row(r, [](SweepRow& row) {
                const auto res = classify_regime_I({row.params[0], row.params[1], row.params[2], row.params[3]});
                row.regime = to_string(res.tag);
                row.alpha = res.alpha;
                row.beta = res.beta;
                row.residual = res.residual;
            });
        });
    } else {
        throw Error(Errc::InvalidConfig, "sweep supports case quadratic or kink");
    }

    std::string text = header;
    long gaps = 0;
    for (const auto& r : rows) {
        for (double p : r.params) text += io::fmt(p) + ",";
        text += r.regime + "," + csv_cell(r.alpha) + "," + csv_cell(r.beta) + "," + csv_cell(r.residual) + "\n";
        gaps += r.gap;
    }
    sink.text_file("sweep.csv", text);
    if (gaps > 0) {
        err << gaps << " of " << rows.size() << " rows hit a regime gap or overlap\n";
        return kRegime;
    }
    return kOk;
}

/// Flag values, kept optional so that only the flags actually given override the config file.
struct Flags {
    std::string config;
    std::optional<std::string> case_, flavor, generator, out, format, payoff;
    std::optional<double> delta, kappa, lambda, mu, b0, b1, sigma, x0, dt, grid_step, extent, tol, horizon;
    std::optional<double> lambda_min, lambda_max, delta_min, delta_max, kappa_min, kappa_max, mu_min, mu_max;
    std::optional<long> paths, seed, nodes, threads, export_paths, points, samples;
    bool audit = false;
};

inline void add_flags(CLI::App* app, Flags& f) {
    app->add_option("--config", f.config, "flat key = value file; flags override it");
    app->add_option("--case", f.case_, "quadratic | kink | general");
    app->add_option("--delta", f.delta);
    app->add_option("--kappa", f.kappa);
    app->add_option("--lambda", f.lambda);
    app->add_option("--mu", f.mu);
    app->add_option("--b0", f.b0, "general: drift intercept");
    app->add_option("--b1", f.b1, "general: drift slope");
    app->add_option("--sigma", f.sigma, "general: volatility");
    app->add_option("--payoff", f.payoff, "general: quadratic | truncated_parabola");
    app->add_option("--x0", f.x0);
    app->add_option("--flavor", f.flavor, "V | U");
    app->add_option("--dt", f.dt);
    app->add_option("--paths", f.paths);
    app->add_option("--seed", f.seed);
    app->add_option("--threads", f.threads);
    app->add_option("--horizon", f.horizon);
    app->add_option("--export-paths", f.export_paths, "write this many path CSVs");
    app->add_option("--grid-step", f.grid_step);
    app->add_option("--extent", f.extent);
    app->add_option("--nodes", f.nodes, "general: grid nodes");
    app->add_option("--tol", f.tol);
    app->add_flag("--audit", f.audit, "also run the saddle-point audit");
    app->add_option("--generator", f.generator, "generator JSON written by solve");
    app->add_option("--out", f.out, "output directory");
    app->add_option("--format", f.format, "csv | json");
    app->add_option("--points", f.points);
    app->add_option("--samples", f.samples);
    app->add_option("--lambda-min", f.lambda_min);
    app->add_option("--lambda-max", f.lambda_max);
    app->add_option("--delta-min", f.delta_min);
    app->add_option("--delta-max", f.delta_max);
    app->add_option("--kappa-min", f.kappa_min);
    app->add_option("--kappa-max", f.kappa_max);
    app->add_option("--mu-min", f.mu_min);
    app->add_option("--mu-max", f.mu_max);
}

inline RunConfig merge(const std::string& sub, const Flags& f) {
    RunConfig c;
    if (!f.config.empty()) c = RunConfig::load(f.config);
    c.set("run", "subcommand", sub);
    auto text = [&](const char* sec, const char* key, const std::optional<std::string>& v) {
        if (v) c.set(sec, key, *v);
    };
    auto real = [&](const char* key, const std::optional<double>& v, const char* sec = "numeric") {
        if (v) c.set(sec, key, *v);
    };
    auto whole = [&](const char* key, const std::optional<long>& v) {
        if (v) c.set("numeric", key, std::to_string(*v));
    };
    text("model", "case", f.case_);
    text("model", "payoff", f.payoff);
    text("run", "flavor", f.flavor);
    text("run", "generator", f.generator);
    text("output", "path", f.out);
    text("output", "format", f.format);
    real("delta", f.delta, "model");
    real("kappa", f.kappa, "model");
    real("lambda", f.lambda, "model");
    real("mu", f.mu, "model");
    real("b0", f.b0, "model");
    real("b1", f.b1, "model");
    real("sigma", f.sigma, "model");
    real("x0", f.x0);
    real("dt", f.dt);
    real("grid_step", f.grid_step);
    real("extent", f.extent);
    real("tol", f.tol);
    real("horizon", f.horizon);
    real("lambda_min", f.lambda_min);
    real("lambda_max", f.lambda_max);
    real("delta_min", f.delta_min);
    real("delta_max", f.delta_max);
    real("kappa_min", f.kappa_min);
    real("kappa_max", f.kappa_max);
    real("mu_min", f.mu_min);
    real("mu_max", f.mu_max);
    whole("n_paths", f.paths);
    whole("seed", f.seed);
    whole("nodes", f.nodes);
    whole("threads", f.threads);
    whole("export_paths", f.export_paths);
    whole("points", f.points);
    whole("samples", f.samples);
    if (f.audit) c.set("run", "audit", "true");
    return c;
}

/// Runs one command line; artifacts paths go to `out`, diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Controller-stopper game solver"};
    app.require_subcommand(1);
    Flags f;
    std::vector<std::pair<std::string, CLI::App*>> subs;
    for (const char* name : {"solve", "verify", "simulate", "sweep"}) {
        auto* s = app.add_subcommand(name);
        add_flags(s, f);
        subs.emplace_back(name, s);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kConfig;
    }

    std::string sub;
    for (const auto& [name, s] : subs)
        if (s->parsed()) sub = name;
    try {
        const RunConfig c = merge(sub, f);
        const Sink sink = make_sink(c, out);
        if (sub == "solve") return cmd_solve(c, sink);
        if (sub == "verify") return cmd_verify(c, sink, err);
        if (sub == "simulate") return cmd_simulate(c, sink);
        return cmd_sweep(c, sink, err);
    } catch (const Error& e) {
        err << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kOther;
    }
}

}  // namespace ctlstop::cli
