#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctlstop/error.hpp"
#include "ctlstop/fd_solver.hpp"
#include "ctlstop/game_sim.hpp"
#include "ctlstop/generator.hpp"
#include "ctlstop/kink_game.hpp"
#include "ctlstop/quadratic_game.hpp"
#include "ctlstop/regions.hpp"
#include "ctlstop/vi_verifier.hpp"

namespace ctlstop::io {

using json = nlohmann::json;

/// Shortest decimal that reads back to the same double.
inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

// JSON has no infinity; unbounded ends are written as the strings "inf"/"-inf".
inline json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? "inf" : "-inf";
}

inline double get_num(const json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    if (j.is_null()) return std::nan("");
    throw Error(Errc::InvalidConfig, "expected a number, got " + j.dump());
}

inline double get_num(const json& j, const char* key, double fallback = 0.0) {
    return j.contains(key) ? get_num(j.at(key)) : fallback;
}

inline json to_json(const Interval& i) {
    return {{"lo", num(i.lo)}, {"hi", num(i.hi)}, {"lo_closed", i.lo_closed}, {"hi_closed", i.hi_closed}};
}

inline Interval interval_from_json(const json& j) {
    return {get_num(j.at("lo")), get_num(j.at("hi")), j.value("lo_closed", true), j.value("hi_closed", true)};
}

inline json to_json(const IntervalSet& s) {
    json a = json::array();
    for (const auto& i : s) a.push_back(to_json(i));
    return a;
}

inline IntervalSet intervals_from_json(const json& j) {
    IntervalSet s;
    for (const auto& e : j) s.push_back(interval_from_json(e));
    return s;
}

inline json to_json(const RegionSet& r) {
    json tags = json::array();
    for (const auto& t : r.boundary_tags) tags.push_back({{"x", t.x}, {"kind", to_string(t.kind)}});
    return {{"waiting", to_json(r.waiting)},        {"control", to_json(r.control)},
            {"stop_wait", to_json(r.stop_wait)},    {"stop_control", to_json(r.stop_control)},
            {"kinks", r.kinks},                     {"boundary_tags", tags}};
}

inline RegionSet regions_from_json(const json& j) {
    RegionSet r;
    r.waiting = intervals_from_json(j.at("waiting"));
    r.control = intervals_from_json(j.at("control"));
    r.stop_wait = intervals_from_json(j.at("stop_wait"));
    r.stop_control = intervals_from_json(j.at("stop_control"));
    r.kinks = j.value("kinks", std::vector<double>{});
    for (const auto& t : j.value("boundary_tags", json::array())) {
        const auto kind = t.at("kind").get<std::string>();
        r.boundary_tags.push_back(
            {get_num(t.at("x")), kind == "Reflecting" ? BoundaryKind::Reflecting : BoundaryKind::Repelling});
    }
    return r;
}

inline Form form_from_string(const std::string& s) {
    for (Form f : {Form::Quadratic, Form::CoshQuadratic, Form::AffineAbs, Form::Exponential, Form::Constant})
        if (s == to_string(f)) return f;
    throw Error(Errc::InvalidConfig, "unknown piece form " + s);
}

inline json to_json(const Piece& p) {
    return {{"lo", num(p.lo)}, {"hi", num(p.hi)}, {"form", to_string(p.form)}, {"A", p.A},
            {"omega", p.omega}, {"a", p.a},        {"s", p.s},                  {"c", p.c}};
}

inline Piece piece_from_json(const json& j) {
    Piece p;
    p.lo = get_num(j.at("lo"));
    p.hi = get_num(j.at("hi"));
    p.form = form_from_string(j.at("form").get<std::string>());
    p.A = get_num(j, "A");
    p.omega = get_num(j, "omega");
    p.a = get_num(j, "a");
    p.s = get_num(j, "s");
    p.c = get_num(j, "c");
    return p;
}

inline json to_json(const GameModel& m) {
    return {{"b0", m.drift.b0},
            {"b1", m.drift.b1},
            {"sigma", m.sigma},
            {"delta", m.discount},
            {"h", {{"kind", m.h.kind == RunningPayoff::Kind::Zero ? "zero" : "quadratic"},
                   {"kappa", m.h.kappa},
                   {"mu", m.h.mu}}},
            {"g", {{"kind", m.g.kind == TerminalPayoff::Kind::Quadratic ? "quadratic" : "truncated_parabola"},
                   {"lambda", m.g.lambda}}}};
}

inline GameModel model_from_json(const json& j) {
    GameModel m;
    m.drift = {get_num(j, "b0"), get_num(j, "b1")};
    m.sigma = get_num(j, "sigma", 1.0);
    m.discount = get_num(j.at("delta"));
    const auto& h = j.at("h");
    m.h.kind = h.at("kind").get<std::string>() == "zero" ? RunningPayoff::Kind::Zero : RunningPayoff::Kind::Quadratic;
    m.h.kappa = get_num(h, "kappa");
    m.h.mu = get_num(h, "mu");
    const auto& g = j.at("g");
    const auto gk = g.at("kind").get<std::string>();
    if (gk == "quadratic") m.g.kind = TerminalPayoff::Kind::Quadratic;
    else if (gk == "truncated_parabola") m.g.kind = TerminalPayoff::Kind::TruncatedParabola;
    else throw Error(Errc::InvalidConfig, "unknown terminal payoff " + gk);
    m.g.lambda = get_num(g, "lambda");
    m.validate();
    return m;
}

/// Everything `solve` knows about one closed-form regime.
struct GeneratorDoc {
    Generator generator;
    GameModel model;
    std::string regime;
    json residuals = json::object();
};

inline json to_json(const GeneratorDoc& d) {
    json pieces = json::array();
    for (const auto& p : d.generator.pieces) pieces.push_back(to_json(p));
    json bps = json::array();
    for (const auto& b : d.generator.breakpoints) bps.push_back({{"label", b.label}, {"x", b.x}});
    json j = {{"regime", d.regime}, {"model", to_json(d.model)}, {"pieces", pieces},
              {"breakpoints", bps}, {"residuals", d.residuals}};
    j["regions"] = d.generator.declared ? to_json(*d.generator.declared) : json(nullptr);
    return j;
}

inline GeneratorDoc generator_doc_from_json(const json& j) {
    GeneratorDoc d;
    for (const auto& p : j.at("pieces")) d.generator.pieces.push_back(piece_from_json(p));
    for (const auto& b : j.value("breakpoints", json::array()))
        d.generator.breakpoints.push_back({b.at("label").get<std::string>(), get_num(b.at("x"))});
    if (j.contains("regions") && !j.at("regions").is_null()) d.generator.declared = regions_from_json(j.at("regions"));
    d.model = model_from_json(j.at("model"));
    d.regime = j.value("regime", std::string{});
    d.residuals = j.value("residuals", json::object());
    d.generator.validate();
    return d;
}

inline GeneratorDoc make_doc(const RegimeI& r, const QuadParams& p) {
    GeneratorDoc d{r.generator, p.model(), to_string(r.tag), json::object()};
    d.residuals = {{"defining_equation", r.residual}, {"alpha", r.alpha}, {"beta", r.beta}, {"A", r.coeff_A}};
    return d;
}

inline GeneratorDoc make_doc(const RegimeII& r, const KinkParams& p) {
    GeneratorDoc d{r.generator, p.model(), to_string(r.tag), json::object()};
    d.residuals = {{"smooth_fit", r.residual}, {"alpha", r.alpha}, {"A", r.coeff_A}};
    d.residuals["beta"] = r.beta ? json(*r.beta) : json(nullptr);
    return d;
}

inline json to_json(const VerificationReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"id", c.id},       {"region", c.region}, {"worst", c.worst}, {"where", num(c.where)},
                          {"pass", c.pass},   {"gating", c.gating}, {"points", c.points}});
    return {{"verdict", r.verdict ? "pass" : "fail"},
            {"grid_step", r.grid_step},
            {"extent", r.extent},
            {"tol", r.tol},
            {"failures", r.failures()},
            {"checks", checks},
            {"regions", to_json(r.regions)},
            {"footer", r.footer}};
}

inline json to_json(const McEstimate& e) {
    return {{"mean", e.mean},         {"stderr", e.stderr_},     {"n", e.n},
            {"dt", e.dt},             {"horizon", e.horizon},    {"truncated", e.truncated},
            {"truncation_bound", e.truncation_bound}};
}

inline json to_json(const AuditTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows) {
        json row = {{"deviation", r.deviation.name()},
                    {"side", r.deviation.stopper_side() ? "stopper" : "controller"},
                    {"estimate", to_json(r.estimate)},
                    {"band", r.band},
                    {"status", r.status}};
        if (r.reference) row["reference_u"] = *r.reference;
        if (r.matches_reference) row["matches_reference"] = *r.matches_reference;
        rows.push_back(row);
    }
    return {{"flavor", to_string(t.flavor)},
            {"x0", t.x0},
            {"u_x0", t.u_x0},
            {"v_x0", t.v_x0},
            {"equilibrium", to_json(t.equilibrium)},
            {"u_bounded_off_stop", t.u_bounded_off_stop},
            {"all_pass", t.all_pass()},
            {"rows", rows}};
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::InvalidConfig, "cannot write " + path);
    f << text;
    if (!f) throw Error(Errc::InvalidConfig, "write failed: " + path);
}

inline void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

inline json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(Errc::InvalidConfig, "cannot read " + path);
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw Error(Errc::InvalidConfig, path + ": " + e.what());
    }
}

/// Grid of n equally spaced points on [-extent, extent].
inline std::vector<double> sample_grid(double extent, double step) {
    if (!(extent > 0.0 && step > 0.0)) throw Error(Errc::InvalidConfig, "extent and grid step must be positive");
    const long n = static_cast<long>(std::floor(2.0 * extent / step + 1e-9));
    std::vector<double> xs;
    xs.reserve(static_cast<std::size_t>(n + 1));
    for (long i = 0; i <= n; ++i) xs.push_back(-extent + static_cast<double>(i) * step);
    return xs;
}

/// x,u,g,v on a grid.
inline std::string solve_csv(const Generator& gen, const GameModel& m, const std::vector<double>& xs) {
    const PiecewiseV v = build_v(gen, m);
    std::string out = "x,u,g,v\n";
    for (double x : xs) out += fmt(x) + "," + fmt(eval_u(gen, x)) + "," + fmt(m.g(x)) + "," + fmt(v(x)) + "\n";
    return out;
}

inline json solve_samples_json(const Generator& gen, const GameModel& m, const std::vector<double>& xs) {
    const PiecewiseV v = build_v(gen, m);
    json j = {{"x", json::array()}, {"u", json::array()}, {"g", json::array()}, {"v", json::array()}};
    for (double x : xs) {
        j["x"].push_back(x);
        j["u"].push_back(eval_u(gen, x));
        j["g"].push_back(m.g(x));
        j["v"].push_back(v(x));
    }
    return j;
}

inline std::string path_csv(const PathRecord& p) {
    std::string out = "t,X,xi_plus,xi_minus,jumps,Lambda\n";
    for (const auto& r : p.rows)
        out += fmt(r.t) + "," + fmt(r.x) + "," + fmt(r.xi_plus) + "," + fmt(r.xi_minus) + "," +
               std::to_string(r.jumps) + "," + fmt(r.lambda) + "\n";
    return out;
}

inline std::string discrete_csv(const DiscreteSolution& s) {
    std::string out = "x,u,label,residual\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
        out += fmt(s.x[i]) + "," + fmt(s.u[i]) + "," + to_string(s.labels[i]) + "," + fmt(s.residual[i]) + "\n";
    return out;
}

}  // namespace ctlstop::io
