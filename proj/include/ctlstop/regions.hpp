#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ctlstop/error.hpp"
#include "ctlstop/generator.hpp"
#include "ctlstop/intervals.hpp"
#include "ctlstop/model.hpp"
#include "ctlstop/roots.hpp"

namespace ctlstop {

/// Maximal stretch of [0, inf) on which sign(u - g) is constant.
struct SignRun {
    double lo;
    double hi;
    int sign;  // +1: u > g, 0: u == g, -1: u < g
};

namespace detail {

inline double equality_tol(double u, double g) { return 1e-10 * (1.0 + std::abs(u) + std::abs(g)); }

inline int sign_of(double u, double g) {
    const double d = u - g;
    if (std::isnan(d)) throw Error(Errc::AmbiguousRegion, "u - g is NaN");
    if (std::abs(d) <= equality_tol(u, g)) return 0;
    return d > 0.0 ? 1 : -1;
}

inline void push_run(std::vector<SignRun>& runs, SignRun r) {
    if (!runs.empty() && runs.back().sign == r.sign && runs.back().hi == r.lo) {
        runs.back().hi = r.hi;
        return;
    }
    runs.push_back(r);
}

}  // namespace detail

/// Sign structure of u - g on [0, inf). Crossings inside a piece are located
/// by bisection to `tol`; the last piece is sampled out to a far point and its
/// sign there is assumed to persist.
inline std::vector<SignRun> sign_runs(const Generator& gen, const GameModel& model, double tol = 1e-13) {
    gen.validate();
    std::vector<double> cuts = {0.0};
    for (double j : gen.junctions()) cuts.push_back(j);
    for (const auto& b : gen.breakpoints)
        if (b.x > 0.0 && std::isfinite(b.x)) cuts.push_back(b.x);
    for (double k : model.g.kinks())
        if (k > 0.0) cuts.push_back(k);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const double last = cuts.back();
    const double far = std::max(2.0 * last, last + 10.0);
    cuts.push_back(far);

    constexpr int kSamples = 200;
    std::vector<SignRun> runs;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k];
        const double b = cuts[k + 1];
        const Piece& piece = gen.piece_at(0.5 * (a + b));
        auto diff = [&](double x) { return piece.value(x) - model.g(x); };
        auto sgn = [&](double x) { return detail::sign_of(piece.value(x), model.g(x)); };

        std::vector<double> xs(kSamples + 1);
        std::vector<int> ss(kSamples + 1);
        bool all_zero = true;
        for (int i = 0; i <= kSamples; ++i) {
            xs[i] = i == kSamples ? b : a + (b - a) * i / kSamples;
            ss[i] = sgn(xs[i]);
            all_zero = all_zero && ss[i] == 0;
        }
        if (all_zero) {
            detail::push_run(runs, {a, b, 0});
            continue;
        }

        double cur_lo = a;
        int cur_sign = 0;
        int last_nz = -1;
        for (int i = 0; i <= kSamples; ++i) {
            if (ss[i] == 0) continue;
            if (cur_sign == 0) {
                cur_sign = ss[i];
            } else if (ss[i] != cur_sign) {
                double c;
                try {
                    c = bisect_root(diff, xs[last_nz], xs[i], tol * std::max(1.0, xs[i]));
                } catch (const Error&) {
                    throw Error(Errc::CrossingNotBracketed, "u - g crossing could not be isolated");
                }
                detail::push_run(runs, {cur_lo, c, cur_sign});
                cur_lo = c;
                cur_sign = ss[i];
            } else if (last_nz >= 0 && last_nz < i - 1 && cur_sign > 0) {
                // zero samples strictly between two positive ones: an isolated touch point
                const double t = xs[last_nz + 1];
                detail::push_run(runs, {cur_lo, t, cur_sign});
                detail::push_run(runs, {t, t, 0});
                cur_lo = t;
            }
            last_nz = i;
        }
        detail::push_run(runs, {cur_lo, b, cur_sign});
    }
    runs.back().hi = kInf;
    return runs;
}

namespace detail {

/// [0, inf) minus a union of closed intervals.
inline IntervalSet half_line_complement(const IntervalSet& closed) {
    IntervalSet out;
    double cursor = 0.0;
    bool cursor_closed = true;
    for (const auto& i : closed) {
        if (i.lo > cursor) out.push_back({cursor, i.lo, cursor_closed, false});
        if (i.hi >= cursor) {
            cursor = i.hi;
            cursor_closed = false;
        }
    }
    if (std::isfinite(cursor)) out.push_back({cursor, kInf, cursor_closed, false});
    return out;
}

inline double slope_at(const Generator& gen, double x) {
    return 0.5 * (eval_du(gen, x, Side::Left) + eval_du(gen, x, Side::Right));
}

}  // namespace detail

/// Kink set B: points where the one-sided derivatives of u differ.
inline std::vector<double> find_kinks(const Generator& gen, double tol = 1e-8) {
    std::vector<double> kinks;
    for (double p : gen.all_junctions()) {
        const double l = eval_du(gen, p, Side::Left);
        const double r = eval_du(gen, p, Side::Right);
        if (std::abs(l - r) > tol * (1.0 + std::abs(l))) kinks.push_back(p);
    }
    return kinks;
}

/// Regions of the definition of a generator, computed from u itself.
inline RegionSet extract_regions(const Generator& gen, const GameModel& model, double tol = 1e-9) {
    const auto runs = sign_runs(gen, model);

    IntervalSet ctrl_plus;
    for (const auto& p : gen.pieces) {
        const auto s = p.constant_slope();
        if (s && std::abs(std::abs(*s) - 1.0) <= 1e-12) ctrl_plus.push_back({p.lo, p.hi, true, std::isfinite(p.hi)});
    }
    ctrl_plus = normalize(ctrl_plus);

    IntervalSet sw_plus, sc_plus;
    for (const auto& r : runs) {
        const bool finite_hi = std::isfinite(r.hi);
        if (r.sign == 0) sw_plus.push_back({r.lo, r.hi, true, finite_hi});
        if (r.sign < 0) sc_plus.push_back({r.lo, r.hi, true, finite_hi});
    }
    sw_plus = normalize(sw_plus);
    sc_plus = normalize(sc_plus);

    const IntervalSet occupied = unite(ctrl_plus, unite(sw_plus, sc_plus));
    const IntervalSet w_plus = detail::half_line_complement(occupied);

    RegionSet rs;
    rs.control = mirror_half_line(ctrl_plus);
    rs.stop_wait = mirror_half_line(sw_plus);
    rs.stop_control = mirror_half_line(sc_plus);
    rs.waiting = mirror_half_line(w_plus);
    rs.kinks = find_kinks(gen);

    for (double x : finite_endpoints(rs.control)) {
        if (std::any_of(rs.kinks.begin(), rs.kinks.end(), [&](double k) { return std::abs(k - x) <= tol; })) {
            rs.boundary_tags.push_back({x, BoundaryKind::Repelling});
            continue;
        }
        const double ax = std::abs(x);
        const Piece& left = gen.piece_at(ax, Side::Left);
        const Piece& right = gen.piece_at(ax, Side::Right);
        double eps = 1e-3;
        if (ax > 0.0) eps = std::min({eps, 0.5 * (left.hi - left.lo), 0.5 * (right.hi - right.lo)});
        const double here = detail::slope_at(gen, x);
        constexpr double kSlopeTol = 1e-9;
        const bool pattern_up = eval_du(gen, x - eps, Side::Left) < 1.0 - kSlopeTol &&
                                std::abs(here - 1.0) <= kSlopeTol;
        const bool pattern_down = std::abs(here + 1.0) <= kSlopeTol &&
                                  eval_du(gen, x + eps, Side::Right) > -1.0 + kSlopeTol;
        rs.boundary_tags.push_back({x, pattern_up || pattern_down ? BoundaryKind::Reflecting
                                                                   : BoundaryKind::Repelling});
    }
    for (double k : rs.kinks)
        if (!rs.tag_at(k, tol)) rs.boundary_tags.push_back({k, BoundaryKind::Repelling});
    std::sort(rs.boundary_tags.begin(), rs.boundary_tags.end(),
              [](const BoundaryTag& a, const BoundaryTag& b) { return a.x < b.x; });
    return rs;
}

/// v = max{u, g}, stored as labelled stretches of the half line.
class PiecewiseV {
public:
    enum class Source { U, G };
    struct Segment {
        double lo;
        double hi;
        Source source;
    };

    PiecewiseV(Generator gen, GameModel model, std::vector<Segment> segs)
        : gen_(std::move(gen)), model_(model), segs_(std::move(segs)) {}

    double operator()(double x) const {
        const double ax = std::abs(x);
        for (const auto& s : segs_) {
            if (ax <= s.hi) return s.source == Source::U ? eval_u(gen_, ax) : model_.g(ax);
        }
        return eval_u(gen_, ax);
    }
    Source source_at(double x) const {
        const double ax = std::abs(x);
        for (const auto& s : segs_)
            if (ax <= s.hi) return s.source;
        return Source::U;
    }
    const std::vector<Segment>& segments() const { return segs_; }

private:
    Generator gen_;
    GameModel model_;
    std::vector<Segment> segs_;
};

inline PiecewiseV build_v(const Generator& gen, const GameModel& model) {
    std::vector<PiecewiseV::Segment> segs;
    for (const auto& r : sign_runs(gen, model)) {
        const auto src = r.sign < 0 ? PiecewiseV::Source::G : PiecewiseV::Source::U;
        if (!segs.empty() && segs.back().source == src) {
            segs.back().hi = r.hi;
        } else {
            segs.push_back({r.lo, r.hi, src});
        }
    }
    return PiecewiseV(gen, model, std::move(segs));
}

}  // namespace ctlstop
