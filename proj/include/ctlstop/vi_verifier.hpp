#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ctlstop/error.hpp"
#include "ctlstop/generator.hpp"
#include "ctlstop/model.hpp"
#include "ctlstop/regions.hpp"

namespace ctlstop {

/// Exact u'' of the active piece. Throws AtBreakpoint on a junction.
inline double second_derivative(const Generator& gen, double x) {
    const double ax = std::abs(x);
    for (double j : gen.junctions())
        if (std::abs(ax - j) <= 1e-12 * std::max(1.0, j)) {
            std::ostringstream os;
            os << "x = " << x << " is a junction";
            throw Error(Errc::AtBreakpoint, os.str());
        }
    if (ax == 0.0 && std::abs(eval_du(gen, 0.0, Side::Right)) > 1e-12)
        throw Error(Errc::AtBreakpoint, "x = 0 is a kink");
    return gen.piece_at(ax).d2(ax);
}

struct Check {
    std::string id;
    std::string region;
    double worst = 0.0;       // largest violation (0 when none)
    double where = 0.0;       // location of the largest violation
    bool pass = true;
    bool gating = true;
    long points = 0;          // grid points examined
};

struct VerificationReport {
    std::vector<Check> checks;
    double grid_step = 0.0;
    double extent = 0.0;
    double tol = 0.0;
    bool verdict = false;
    RegionSet regions;
    std::string footer;

    const Check* find(const std::string& id) const {
        for (const auto& c : checks)
            if (c.id == id) return &c;
        return nullptr;
    }
    std::vector<std::string> failures() const {
        std::vector<std::string> out;
        for (const auto& c : checks)
            if (c.gating && !c.pass) out.push_back(c.id);
        return out;
    }
};

struct VerifyOptions {
    double tol = 1e-8;
    double region_tol = 1e-9;
};

/// Tolerance for generators that come out of a grid solver with spacing h.
inline double fd_tolerance(double h, double max_abs_u) { return 50.0 * h * h * max_abs_u; }

namespace detail {

struct Tracker {
    Check c;
    void see(double violation, double x) {
        ++c.points;
        if (violation > c.worst) c.worst = violation, c.where = x;
    }
    Check done(double tol) {
        c.pass = c.worst <= tol;
        return c;
    }
};

inline Tracker make(const std::string& id, const std::string& region, bool gating = true) {
    Tracker t;
    t.c.id = id;
    t.c.region = region;
    t.c.gating = gating;
    return t;
}

inline bool near_any(const std::vector<double>& pts, double x, double tol) {
    return std::any_of(pts.begin(), pts.end(), [&](double p) { return std::abs(p - x) <= tol; });
}

inline IntervalSet difference_interior(const IntervalSet& a, const IntervalSet& b) {
    // int(a) minus b, as open intervals; b is a finite union of closed intervals
    IntervalSet out;
    for (const auto& i : a) {
        double cursor = i.lo;
        for (const auto& j : b) {
            if (j.hi <= cursor || j.lo >= i.hi) continue;
            if (j.lo > cursor) out.push_back({cursor, j.lo, false, false});
            cursor = std::max(cursor, j.hi);
        }
        if (cursor < i.hi) out.push_back({cursor, i.hi, false, false});
    }
    return out;
}

inline IntervalSet intersect(const IntervalSet& a, const IntervalSet& b) {
    IntervalSet out;
    for (const auto& i : a)
        for (const auto& j : b) {
            const double lo = std::max(i.lo, j.lo);
            const double hi = std::min(i.hi, j.hi);
            if (lo < hi) out.push_back({lo, hi, false, false});
        }
    return out;
}

}  // namespace detail

/// Audit of u against the definition of a generator on the grid
/// -extent, -extent + grid_step, ..., extent.
inline VerificationReport verify(const Generator& gen, const GameModel& model, double grid_step,
                                 double extent, VerifyOptions opt = {}) {
    gen.validate();
    model.validate();
    if (!(grid_step > 0.0) || !(extent > 0.0))
        throw Error(Errc::InvalidConfig, "grid_step and extent must be positive");
    double reach = 0.0;
    for (double j : gen.junctions()) reach = std::max(reach, j);
    for (const auto& b : gen.breakpoints) reach = std::max(reach, std::abs(b.x));
    if (!(extent > reach)) {
        std::ostringstream os;
        os << "extent " << extent << " does not cover the breakpoint at " << reach;
        throw Error(Errc::InvalidConfig, os.str());
    }

    const double tol = opt.tol;
    const double rtol = opt.region_tol;
    const RegionSet rs = extract_regions(gen, model, rtol);
    const IntervalSet S = rs.stopping();
    const long n = static_cast<long>(std::floor(2.0 * extent / grid_step + 1e-9));
    auto grid_x = [&](long k) { return -extent + static_cast<double>(k) * grid_step; };

    // Every nonempty region needs enough interior grid points.
    for (const auto* set : {&rs.waiting, &rs.control, &rs.stop_wait, &rs.stop_control}) {
        for (const auto& i : *set) {
            const double lo = std::max(i.lo, -extent);
            const double hi = std::min(i.hi, extent);
            if (!(hi > lo)) continue;
            const long inside = static_cast<long>(std::ceil((hi - lo) / grid_step)) - 1;
            if (inside < 8) {
                std::ostringstream os;
                os << "only " << std::max(inside, 0L) << " grid points in [" << lo << ", " << hi << "]";
                throw Error(Errc::GridTooCoarse, os.str());
            }
        }
    }

    const std::vector<double> kinks = rs.kinks;
    const std::vector<double> declared_kinks = gen.declared ? gen.declared->kinks : kinks;
    const std::vector<double> junctions = gen.all_junctions();
    std::vector<double> g_kinks = model.g.kinks();

    auto cont = detail::make("def.continuous", "junctions");
    auto c1 = detail::make("def.c1_off_B", "junctions not in B");
    auto grad = detail::make("def.gradient_bound", "R minus B");
    auto nonneg = detail::make("def.nonnegative", "R");
    for (double p : junctions) {
        const double ul = eval_u_side(gen, p, Side::Left);
        const double ur = eval_u_side(gen, p, Side::Right);
        cont.see(std::abs(ul - ur) / (1.0 + std::abs(ur)), p);
        const double dl = eval_du(gen, p, Side::Left);
        const double dr = eval_du(gen, p, Side::Right);
        if (!detail::near_any(declared_kinks, p, rtol)) c1.see(std::abs(dl - dr), p);
        if (!detail::near_any(kinks, p, rtol)) grad.see(std::max(std::abs(dl), std::abs(dr)) - 1.0, p);
    }

    const IntervalSet int_w = rs.waiting;
    const IntervalSet int_c_minus_s = detail::difference_interior(rs.control, S);
    const IntervalSet int_sw = rs.stop_wait;
    const IntervalSet int_sc = rs.stop_control;
    const IntervalSet int_s_minus_c = detail::difference_interior(S, rs.control);
    const IntervalSet int_c_and_s = detail::intersect(rs.control, S);

    auto row_w = detail::make("II.W", "W: Lu+h = 0");
    auto row_c = detail::make("II.C_minus_S", "int(C\\S): Lu+h >= 0");
    auto row_sw = detail::make("II.SW", "int S_W: Lu+h == Lg+h <= 0");
    auto row_sc = detail::make("II.SC", "int S_C\\B: unconstrained");
    auto h_ww = detail::make("heuristic.WW", "Lu+h = 0, |u'| < 1, g < u", false);
    auto h_cw = detail::make("heuristic.CW", "Lu+h >= 0, |u'| = 1, g < u", false);
    auto h_ws = detail::make("heuristic.WS", "Lu+h <= 0, |u'| < 1, g = u", false);
    auto h_cs = detail::make("heuristic.CS", "|u'| = 1, g >= u", false);
    double sc_max = 0.0;

    for (long k = 0; k <= n; ++k) {
        const double x = grid_x(k);
        const double u = eval_u(gen, x);
        const double g = model.g(x);
        nonneg.see(-u, x);
        if (detail::near_any(junctions, x, 1e-12 * std::max(1.0, std::abs(x)))) continue;
        const double du = eval_du(gen, x, Side::Right);
        grad.see(std::abs(du) - 1.0, x);
        const double lu = model.generator_op(x, u, du, gen.piece_at(std::abs(x)).d2(std::abs(x))) + model.h(x);

        if (interior_contains(int_w, x)) {
            row_w.see(std::abs(lu), x);
            h_ww.see(std::max({std::abs(lu), std::abs(du) - 1.0, g - u}), x);
        }
        if (interior_contains(int_c_minus_s, x)) {
            row_c.see(-lu, x);
            h_cw.see(std::max({-lu, std::abs(std::abs(du) - 1.0), g - u}), x);
        }
        if (interior_contains(int_sw, x) && !detail::near_any(g_kinks, x, 1e-12)) {
            const double lg = model.generator_op(x, g, model.g.d1(x), model.g.d2(x)) + model.h(x);
            row_sw.see(std::max(lu, std::abs(lu - lg)), x);
        }
        if (interior_contains(int_sc, x) && !detail::near_any(kinks, x, rtol)) {
            ++row_sc.c.points;
            sc_max = std::max(sc_max, std::abs(lu));
        }
        if (interior_contains(int_s_minus_c, x)) h_ws.see(std::max({lu, std::abs(du) - 1.0, std::abs(g - u)}), x);
        if (interior_contains(int_c_and_s, x)) h_cs.see(std::max(std::abs(std::abs(du) - 1.0), u - g), x);
    }

    VerificationReport rep;
    rep.grid_step = grid_step;
    rep.extent = extent;
    rep.tol = tol;
    rep.regions = rs;
    rep.checks.push_back(cont.done(1e-10));
    rep.checks.push_back(c1.done(tol));
    rep.checks.push_back(grad.done(tol));
    rep.checks.push_back(nonneg.done(tol));

    {
        auto t = detail::make("I.finite_unions", "C, S_W, S_C, B");
        const std::size_t most = std::max({rs.control.size(), rs.stop_wait.size(), rs.stop_control.size(),
                                           rs.kinks.size()});
        t.see(most > 64 ? static_cast<double>(most) : 0.0, 0.0);
        rep.checks.push_back(t.done(0.0));
    }
    {
        auto t = detail::make("I.B_subset_SC", "B in S_C");
        for (double k : rs.kinks) t.see(contains(rs.stop_control, k, rtol) ? 0.0 : 1.0, k);
        rep.checks.push_back(t.done(0.0));
    }
    {
        auto t = detail::make("I.SC_subset_C", "S_C in C");
        for (const auto& i : rs.stop_control) {
            const bool ok = subset_of({i}, rs.control, rtol);
            t.see(ok ? 0.0 : 1.0, std::isfinite(i.lo) ? i.lo : i.hi);
        }
        rep.checks.push_back(t.done(0.0));
    }
    rep.checks.push_back(row_w.done(tol));
    rep.checks.push_back(row_c.done(tol));
    rep.checks.push_back(row_sw.done(tol));
    {
        Check c = row_sc.c;
        c.worst = 0.0;
        c.where = sc_max;  // largest |Lu+h| seen, for information
        c.pass = true;
        rep.checks.push_back(c);
    }
    {
        auto t = detail::make("III.kink_slopes", "B");
        for (double k : rs.kinks) {
            const double l = eval_du(gen, k, Side::Left);
            const double r = eval_du(gen, k, Side::Right);
            const bool first = std::abs(l - 1.0) <= tol && r < 1.0 - tol;
            const bool second = l > -1.0 + tol && std::abs(r + 1.0) <= tol;
            const double miss = std::min(std::abs(l - 1.0) + std::max(0.0, r - 1.0 + tol),
                                         std::abs(r + 1.0) + std::max(0.0, -1.0 + tol - l));
            t.see(first || second ? 0.0 : tol + miss, k);
        }
        rep.checks.push_back(t.done(tol));
    }
    {
        auto t = detail::make("declared_regions", "extracted vs constructed");
        if (gen.declared) {
            const RegionSet& d = *gen.declared;
            const bool same = same_sets(d.waiting, rs.waiting, rtol) && same_sets(d.control, rs.control, rtol) &&
                              same_sets(d.stop_wait, rs.stop_wait, rtol) &&
                              same_sets(d.stop_control, rs.stop_control, rtol) &&
                              d.kinks.size() == rs.kinks.size();
            bool kinks_ok = same;
            if (same)
                for (std::size_t i = 0; i < d.kinks.size(); ++i)
                    kinks_ok = kinks_ok && std::abs(d.kinks[i] - rs.kinks[i]) <= rtol;
            bool tags_ok = kinks_ok;
            if (kinks_ok)
                for (const auto& tag : d.boundary_tags) {
                    const auto got = rs.tag_at(tag.x, rtol);
                    tags_ok = tags_ok && got && *got == tag.kind;
                }
            t.see(tags_ok ? 0.0 : 1.0, 0.0);
        }
        rep.checks.push_back(t.done(0.0));
    }
    rep.checks.push_back(h_ww.done(tol));
    rep.checks.push_back(h_cw.done(tol));
    rep.checks.push_back(h_ws.done(tol));
    rep.checks.push_back(h_cs.done(tol));

    rep.verdict = std::all_of(rep.checks.begin(), rep.checks.end(),
                              [](const Check& c) { return !c.gating || c.pass; });
    rep.footer =
        "Rows that hold Lebesgue-a.e. are checked on grid points only; a violation on a set "
        "thinner than the grid spacing cannot be detected.";
    return rep;
}

}  // namespace ctlstop
