#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ctlstop/error.hpp"
#include "ctlstop/generator.hpp"
#include "ctlstop/intervals.hpp"
#include "ctlstop/model.hpp"
#include "ctlstop/regions.hpp"
#include "ctlstop/vi_verifier.hpp"

namespace ctlstop {

enum class Flavor { V, U };

inline const char* to_string(Flavor f) { return f == Flavor::V ? "V" : "U"; }

/// Closed stretch of the control region. The slope of u is +1 on [lo, split]
/// and -1 on [split, hi]; points with slope +1 are moved to lo, points with
/// slope -1 to hi.
struct ControlZone {
    double lo;
    double hi;
    double split;
    BoundaryKind lo_kind = BoundaryKind::Reflecting;
    BoundaryKind hi_kind = BoundaryKind::Reflecting;
    double to_lo;  // where a move toward lo lands
    double to_hi;  // where a move toward hi lands
};

struct Barrier {
    double x;
    int push;  // +1 pushes the state up, -1 pushes it down
};

struct RepellingExit {
    double trigger;
    double target;
};

/// Controller and stopper behaviour implied by a generator.
struct Strategy {
    std::vector<ControlZone> zones;
    IntervalSet stop_set;
    double min_region_width = kInf;
    std::optional<Generator> generator;  // source of u for diagnostics

    std::vector<Barrier> barriers() const {
        std::vector<Barrier> out;
        for (const auto& z : zones) {
            if (std::isfinite(z.lo) && z.lo_kind == BoundaryKind::Reflecting) out.push_back({z.lo, -1});
            if (std::isfinite(z.hi) && z.hi_kind == BoundaryKind::Reflecting) out.push_back({z.hi, +1});
        }
        return out;
    }

    std::vector<RepellingExit> repelling_exits() const {
        std::vector<RepellingExit> out;
        for (const auto& z : zones) {
            if (std::isfinite(z.lo) && z.lo_kind == BoundaryKind::Repelling) out.push_back({z.lo, target_in(z, z.lo)});
            if (std::isfinite(z.hi) && z.hi_kind == BoundaryKind::Repelling) out.push_back({z.hi, target_in(z, z.hi)});
        }
        return out;
    }

    /// Jump destination from x, or nothing when x needs no jump.
    std::optional<double> jump_target(double x) const {
        for (const auto& z : zones) {
            if (x < z.lo || x > z.hi) continue;
            const bool at_lo = x == z.lo;
            const bool at_hi = x == z.hi;
            if (at_lo && z.lo_kind == BoundaryKind::Reflecting) return std::nullopt;
            if (at_hi && z.hi_kind == BoundaryKind::Reflecting) return std::nullopt;
            const double t = target_in(z, x);
            if (!std::isfinite(t)) throw Error(Errc::UnverifiedGenerator, "jump to infinity");
            return t;
        }
        return std::nullopt;
    }

    static double target_in(const ControlZone& z, double x) {
        const bool plus = (x > z.lo && x <= z.split) || (x == z.lo && z.split > z.lo);
        return plus ? z.to_lo : z.to_hi;
    }
};

namespace detail {

inline double slope_inside(const Generator& gen, double lo, double hi) {
    double x;
    if (std::isfinite(lo) && std::isfinite(hi)) x = 0.5 * (lo + hi);
    else if (std::isfinite(lo)) x = lo + 1.0;
    else x = hi - 1.0;
    return eval_du(gen, x, Side::Right);
}

inline double min_width(const RegionSet& rs) {
    double w = kInf;
    for (const auto* set : {&rs.waiting, &rs.control, &rs.stop_wait, &rs.stop_control})
        for (const auto& i : *set)
            if (std::isfinite(i.length()) && i.length() > 0.0) w = std::min(w, i.length());
    return w;
}

}  // namespace detail

/// Builds the strategy after checking the generator; throws UnverifiedGenerator on failure.
inline Strategy strategy_from_generator(const Generator& gen, const GameModel& model) {
    double reach = 0.0;
    for (double j : gen.junctions()) reach = std::max(reach, j);
    for (const auto& b : gen.breakpoints) reach = std::max(reach, std::abs(b.x));
    const RegionSet pre = extract_regions(gen, model);
    const double step = std::min(1e-3, detail::min_width(pre) / 64.0);
    const VerificationReport rep = verify(gen, model, step, reach + 3.0);
    if (!rep.verdict) {
        std::ostringstream os;
        os << "failed:";
        for (const auto& f : rep.failures()) os << ' ' << f;
        throw Error(Errc::UnverifiedGenerator, os.str());
    }
    const RegionSet& rs = rep.regions;

    Strategy s;
    s.stop_set = rs.stopping();
    s.min_region_width = detail::min_width(rs);
    s.generator = gen;
    for (const auto& c : rs.control) {
        ControlZone z{c.lo, c.hi, c.hi};
        std::optional<double> interior_kink;
        for (double k : rs.kinks)
            if (k > c.lo && k < c.hi) interior_kink = k;
        if (interior_kink) {
            z.split = *interior_kink;
        } else {
            z.split = detail::slope_inside(gen, c.lo, c.hi) > 0.0 ? c.hi : c.lo;
        }
        if (std::isfinite(c.lo)) z.lo_kind = rs.tag_at(c.lo).value_or(BoundaryKind::Repelling);
        if (std::isfinite(c.hi)) z.hi_kind = rs.tag_at(c.hi).value_or(BoundaryKind::Repelling);
        z.to_lo = c.lo;
        z.to_hi = c.hi;
        s.zones.push_back(z);
    }
    return s;
}

/// Controller never acts.
inline Strategy without_control(Strategy s) {
    s.zones.clear();
    return s;
}

/// Moves every reflecting barrier by d into the control region (d > 0) or
/// away from it (d < 0); jumps aimed at a moved barrier follow it.
inline Strategy shift_barriers(Strategy s, double d) {
    for (auto& z : s.zones) {
        if (std::isfinite(z.lo) && z.lo_kind == BoundaryKind::Reflecting) {
            z.lo += d;
            z.to_lo = z.lo;
        }
        if (std::isfinite(z.hi) && z.hi_kind == BoundaryKind::Reflecting) {
            z.hi -= d;
            z.to_hi = z.hi;
        }
        z.split = std::clamp(z.split, z.lo, z.hi);
    }
    return s;
}

/// Every jump lands d beyond its intended destination.
inline Strategy overshoot_jumps(Strategy s, double d) {
    for (auto& z : s.zones) {
        if (std::isfinite(z.to_lo)) z.to_lo = z.lo - d;
        if (std::isfinite(z.to_hi)) z.to_hi = z.hi + d;
    }
    return s;
}

struct StopRule {
    enum class Kind { FirstEntry, FixedTime, Never };
    Kind kind = Kind::FirstEntry;
    double time = 0.0;

    static StopRule first_entry() { return {}; }
    static StopRule at_time(double t) { return {Kind::FixedTime, t}; }
    static StopRule never() { return {Kind::Never, 0.0}; }
};

struct SimConfig {
    double dt = 1e-3;
    double horizon = 0.0;  // 0 selects max(10/delta, 20)
};

inline double default_horizon(const GameModel& m) { return std::max(10.0 / m.discount, 20.0); }

inline void check_step(const Strategy& s, const GameModel& m, double dt) {
    if (!(dt > 0.0)) throw Error(Errc::InvalidConfig, "dt must be positive");
    if (dt > 0.1 / m.discount) {
        std::ostringstream os;
        os << "dt = " << dt << " exceeds 0.1/delta = " << 0.1 / m.discount;
        throw Error(Errc::StepTooLarge, os.str());
    }
    const double noise = std::abs(m.sigma) * std::sqrt(dt);
    if (noise > 0.5 * s.min_region_width) {
        std::ostringstream os;
        os << "per-step noise " << noise << " exceeds half the narrowest region " << s.min_region_width;
        throw Error(Errc::StepTooLarge, os.str());
    }
}

struct PathRow {
    double t;
    double pre;      // state before any jump at t
    double x;        // state after the jump at t
    double xi_plus;  // cumulative upward control, jumps included
    double xi_minus; // cumulative downward control, jumps included
    long jumps;      // number of jumps so far
    double lambda;   // discount integral
    double jump;     // signed jump at t (0 if none)
};

struct PathRecord {
    std::vector<PathRow> rows;
    double dt = 0.0;
    long tau_v = -1;  // row index of the V stop, -1 if truncated
    long tau_u = -1;
    double payoff_v = 0.0;
    double payoff_u = 0.0;
    bool truncated = false;

    double total_variation() const {
        return rows.empty() ? 0.0 : rows.back().xi_plus + rows.back().xi_minus;
    }
};

struct PathOutcome {
    double payoff_v = 0.0;
    double payoff_u = 0.0;
    bool stopped_v = false;
    bool stopped_u = false;
    double bound_v = 0.0;  // e^{-Lambda_T} u(X_T) for truncated paths
    double bound_u = 0.0;
};

namespace detail {

struct NullRecorder {
    void row(double, double, double, double, double, double, double) {}
    void stop_v() {}
    void stop_u() {}
};

struct FullRecorder {
    PathRecord* rec;
    double xp = 0.0, xm = 0.0;
    long nj = 0;
    void row(double t, double pre, double x, double cont_up, double cont_down, double jump, double lam) {
        xp += cont_up + std::max(jump, 0.0);
        xm += cont_down + std::max(-jump, 0.0);
        if (jump != 0.0) ++nj;
        rec->rows.push_back({t, pre, x, xp, xm, nj, lam, jump});
    }
    void stop_v() { rec->tau_v = static_cast<long>(rec->rows.size()) - 1; }
    void stop_u() { rec->tau_u = static_cast<long>(rec->rows.size()) - 1; }
};

inline std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

/// One Euler path under the strategy until both stopping rules have fired or the horizon.
template <class Recorder>
PathOutcome run_path(const Strategy& s, const GameModel& m, double x0, const SimConfig& cfg, StopRule rule,
                     std::uint64_t seed, std::uint64_t index, Recorder& rec) {
    const double dt = cfg.dt;
    const double horizon = cfg.horizon > 0.0 ? cfg.horizon : default_horizon(m);
    const long n_steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
    const double sq = m.sigma * std::sqrt(dt);
    const double decay = m.discount * dt;
    auto rng = path_rng(seed, index);
    std::normal_distribution<double> normal(0.0, 1.0);

    auto stops = [&](double x, double t) {
        switch (rule.kind) {
        case StopRule::Kind::FirstEntry: return contains(s.stop_set, x);
        case StopRule::Kind::FixedTime: return t >= rule.time - 1e-12;
        case StopRule::Kind::Never: return false;
        }
        return false;
    };

    PathOutcome out;
    double acc = 0.0;  // discounted running payoff and control cost so far
    double lam = 0.0;
    double disc = 1.0;  // exp(-lam)

    auto settle = [&](double t, double pre, double post, double cont_up, double cont_down) {
        acc += disc * (cont_up + cont_down);
        const double jump = post - pre;
        rec.row(t, pre, post, cont_up, cont_down, jump, lam);
        const bool stop_post = stops(post, t);
        if (!out.stopped_v && (stop_post || (pre != post && stops(pre, t)))) {
            out.payoff_v = acc + disc * m.g(pre);
            out.stopped_v = true;
            rec.stop_v();
        }
        acc += disc * std::abs(jump);
        if (stop_post) {
            out.payoff_u = acc + disc * m.g(post);
            out.stopped_u = true;
            rec.stop_u();
        }
    };

    double x = x0;
    {
        const double post = s.jump_target(x).value_or(x);
        settle(0.0, x, post, 0.0, 0.0);
        x = post;
    }
    for (long k = 1; k <= n_steps && !out.stopped_u; ++k) {
        const double t = static_cast<double>(k) * dt;
        acc += disc * m.h(x) * dt;
        lam += decay;
        disc = std::exp(-lam);
        const double xn = x + m.drift(x) * dt + sq * normal(rng);

        double pre = xn, post = xn, up = 0.0, down = 0.0;
        for (const auto& z : s.zones) {
            const bool from_lo = x <= z.lo && xn > z.lo;
            const bool from_hi = x >= z.hi && xn < z.hi;
            if (from_lo) {
                if (z.lo_kind == BoundaryKind::Reflecting) {
                    down = xn - z.lo;
                    pre = post = z.lo;
                } else {
                    pre = z.lo;
                    post = Strategy::target_in(z, z.lo);
                }
                break;
            }
            if (from_hi) {
                if (z.hi_kind == BoundaryKind::Reflecting) {
                    up = z.hi - xn;
                    pre = post = z.hi;
                } else {
                    pre = z.hi;
                    post = Strategy::target_in(z, z.hi);
                }
                break;
            }
        }
        settle(t, pre, post, up, down);
        x = post;
    }
    if (!out.stopped_v || !out.stopped_u) {
        const double bound = s.generator ? disc * eval_u(*s.generator, x) : 0.0;
        if (!out.stopped_v) out.payoff_v = acc, out.bound_v = bound;
        if (!out.stopped_u) out.payoff_u = acc, out.bound_u = bound;
    }
    return out;
}

}  // namespace detail

/// A single recorded path. Identical arguments give bit-identical records.
inline PathRecord simulate_path(const Strategy& s, const GameModel& m, double x0, double dt, double horizon,
                                std::uint64_t seed, StopRule rule = StopRule::first_entry(),
                                std::uint64_t index = 0) {
    const SimConfig cfg{dt, horizon};
    check_step(s, m, dt);
    const double h = horizon > 0.0 ? horizon : default_horizon(m);
    if (h < 10.0 / m.discount) throw Error(Errc::InvalidConfig, "horizon shorter than 10/delta");
    PathRecord rec;
    rec.dt = dt;
    detail::FullRecorder r{&rec};
    const PathOutcome o = detail::run_path(s, m, x0, cfg, rule, seed, index, r);
    rec.payoff_v = o.payoff_v;
    rec.payoff_u = o.payoff_u;
    rec.truncated = !o.stopped_u;
    return rec;
}

/// Payoff of a recorded path. V charges the terminal payoff before the jump at
/// the stopping time and leaves that jump out; U charges both.
inline double payoff(const PathRecord& path, const GameModel& m, Flavor flavor) {
    double acc = 0.0;
    const long stop = flavor == Flavor::V ? path.tau_v : path.tau_u;
    for (std::size_t k = 0; k < path.rows.size(); ++k) {
        const PathRow& r = path.rows[k];
        double cont = 0.0;
        if (k > 0) {
            const PathRow& p = path.rows[k - 1];
            acc += std::exp(-p.lambda) * m.h(p.x) * path.dt;
            cont = (r.xi_plus - p.xi_plus) + (r.xi_minus - p.xi_minus) - std::abs(r.jump);
        }
        const double disc = std::exp(-r.lambda);
        acc += disc * cont;
        if (flavor == Flavor::V && static_cast<long>(k) == stop) return acc + disc * m.g(r.pre);
        acc += disc * std::abs(r.jump);
        if (flavor == Flavor::U && static_cast<long>(k) == stop) return acc + disc * m.g(r.x);
    }
    return acc;
}

struct McEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    long n = 0;
    double dt = 0.0;
    double horizon = 0.0;
    long truncated = 0;
    double truncation_bound = 0.0;  // mean over all paths of e^{-Lambda_T} u(X_T) on truncated ones
};

struct McConfig {
    long n_paths = 10000;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    double horizon = 0.0;
    unsigned threads = 0;  // 0: hardware concurrency
};

namespace detail {

struct Moments {
    long n = 0;
    double mean = 0.0;
    double m2 = 0.0;
    long truncated = 0;
    double bound = 0.0;

    void add(double v) {
        ++n;
        const double d = v - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (v - mean);
    }
    void merge(const Moments& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const long total = n + o.n;
        const double d = o.mean - mean;
        mean += d * static_cast<double>(o.n) / static_cast<double>(total);
        m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / static_cast<double>(total);
        n = total;
        truncated += o.truncated;
        bound += o.bound;
    }
};

}  // namespace detail

/// Sample mean of the payoff over independent paths. Paths are processed in
/// fixed blocks and the block results merged in order, so the answer does not
/// depend on the number of threads.
inline McEstimate estimate_value(const Strategy& s, const GameModel& m, double x0, Flavor flavor,
                                 const McConfig& cfg, StopRule rule = StopRule::first_entry()) {
    if (cfg.n_paths < 1000) throw Error(Errc::InvalidConfig, "need at least 1000 paths");
    check_step(s, m, cfg.dt);
    const SimConfig sc{cfg.dt, cfg.horizon > 0.0 ? cfg.horizon : default_horizon(m)};
    if (sc.horizon < 10.0 / m.discount) throw Error(Errc::InvalidConfig, "horizon shorter than 10/delta");

    constexpr long kBlock = 1024;
    const long n_blocks = (cfg.n_paths + kBlock - 1) / kBlock;
    std::vector<detail::Moments> blocks(static_cast<std::size_t>(n_blocks));
    auto work = [&](long b) {
        detail::NullRecorder r;
        detail::Moments mo;
        const long first = b * kBlock;
        const long last = std::min(cfg.n_paths, first + kBlock);
        for (long i = first; i < last; ++i) {
            const auto o = detail::run_path(s, m, x0, sc, rule, cfg.seed, static_cast<std::uint64_t>(i), r);
            const bool v = flavor == Flavor::V;
            mo.add(v ? o.payoff_v : o.payoff_u);
            if (!(v ? o.stopped_v : o.stopped_u)) {
                ++mo.truncated;
                mo.bound += v ? o.bound_v : o.bound_u;
            }
        }
        blocks[static_cast<std::size_t>(b)] = mo;
    };

    unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<long>(threads, n_blocks));
    if (threads <= 1) {
        for (long b = 0; b < n_blocks; ++b) work(b);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (long b = t; b < n_blocks; b += threads) work(b);
            });
        for (auto& th : pool) th.join();
    }
    detail::Moments all;
    for (const auto& b : blocks) all.merge(b);

    McEstimate e;
    e.n = all.n;
    e.mean = all.mean;
    e.stderr_ = all.n > 1 ? std::sqrt(all.m2 / static_cast<double>(all.n - 1) / static_cast<double>(all.n)) : 0.0;
    e.dt = cfg.dt;
    e.horizon = sc.horizon;
    e.truncated = all.truncated;
    e.truncation_bound = all.bound / static_cast<double>(all.n);
    return e;
}

struct Deviation {
    enum class Kind { StopAtZero, StopAtTime, NeverStop, NoControl, BarrierShift, JumpOvershoot };
    Kind kind;
    double param = 0.0;

    bool stopper_side() const {
        return kind == Kind::StopAtZero || kind == Kind::StopAtTime || kind == Kind::NeverStop;
    }
    std::string name() const {
        std::ostringstream os;
        switch (kind) {
        case Kind::StopAtZero: os << "stop_at_zero"; break;
        case Kind::StopAtTime: os << "stop_at_time(" << param << ")"; break;
        case Kind::NeverStop: os << "never_stop"; break;
        case Kind::NoControl: os << "no_control"; break;
        case Kind::BarrierShift: os << "barrier_shift(" << param << ")"; break;
        case Kind::JumpOvershoot: os << "jump_overshoot(" << param << ")"; break;
        }
        return os.str();
    }
};

inline std::vector<Deviation> default_deviations() {
    using K = Deviation::Kind;
    return {{K::StopAtZero},        {K::StopAtTime, 0.5},     {K::NeverStop},
            {K::NoControl},         {K::BarrierShift, 0.05},  {K::BarrierShift, -0.05},
            {K::JumpOvershoot, 0.05}};
}

struct AuditRow {
    Deviation deviation;
    McEstimate estimate;
    double band = 0.0;
    std::string status;  // "pass", "fail" or "outside_hypotheses"
    std::optional<double> reference;  // u(x0) for the never-stop row
    std::optional<bool> matches_reference;
};

struct AuditTable {
    Flavor flavor;
    double x0;
    double u_x0;
    double v_x0;
    McEstimate equilibrium;
    std::vector<AuditRow> rows;
    bool u_bounded_off_stop = true;

    bool all_pass() const {
        return std::all_of(rows.begin(), rows.end(), [](const AuditRow& r) { return r.status != "fail"; });
    }
};

/// True when u stays bounded on the complement of the stopping set.
inline bool bounded_off_stop(const Generator& gen, const IntervalSet& stop) {
    const Piece& tail = gen.pieces.back();
    if (tail.bounded_on_tail()) return true;
    const double far = std::max(1e6, 10.0 * tail.lo);
    return contains(stop, far) && contains(stop, -far);
}

/// Saddle-point audit: stopper deviations must not beat the equilibrium and
/// controller deviations must not undercut it, up to
/// 3 sqrt(se_dev^2 + se_eq^2) + 2% of |equilibrium|.
inline AuditTable saddle_audit(const Generator& gen, const GameModel& m, double x0, Flavor flavor,
                               const std::vector<Deviation>& devs, const McConfig& cfg) {
    const Strategy eq = strategy_from_generator(gen, m);
    AuditTable t{flavor, x0, eval_u(gen, x0), std::max(eval_u(gen, x0), m.g(x0)), {}, {}, true};
    t.u_bounded_off_stop = bounded_off_stop(gen, eq.stop_set);
    t.equilibrium = estimate_value(eq, m, x0, flavor, cfg);
    for (const auto& d : devs) {
        AuditRow row{d, {}, 0.0, "pass", std::nullopt, std::nullopt};
        using K = Deviation::Kind;
        switch (d.kind) {
        case K::StopAtZero: row.estimate = estimate_value(eq, m, x0, flavor, cfg, StopRule::at_time(0.0)); break;
        case K::StopAtTime: row.estimate = estimate_value(eq, m, x0, flavor, cfg, StopRule::at_time(d.param)); break;
        case K::NeverStop: row.estimate = estimate_value(eq, m, x0, flavor, cfg, StopRule::never()); break;
        case K::NoControl: row.estimate = estimate_value(without_control(eq), m, x0, flavor, cfg); break;
        case K::BarrierShift: row.estimate = estimate_value(shift_barriers(eq, d.param), m, x0, flavor, cfg); break;
        case K::JumpOvershoot: row.estimate = estimate_value(overshoot_jumps(eq, d.param), m, x0, flavor, cfg); break;
        }
        const double se = std::hypot(row.estimate.stderr_, t.equilibrium.stderr_);
        row.band = 3.0 * se + 0.02 * std::abs(t.equilibrium.mean);
        bool ok;
        if (d.stopper_side()) {
            ok = row.estimate.mean <= t.equilibrium.mean + row.band;
        } else {
            ok = row.estimate.mean >= t.equilibrium.mean - row.band;
        }
        row.status = ok ? "pass" : "fail";
        if (!d.stopper_side() && !t.u_bounded_off_stop) row.status = "outside_hypotheses";
        if (d.kind == K::NeverStop) {
            row.reference = t.u_x0;
            row.matches_reference = std::abs(row.estimate.mean - t.u_x0) <= row.band;
        }
        t.rows.push_back(row);
    }
    return t;
}

}  // namespace ctlstop
