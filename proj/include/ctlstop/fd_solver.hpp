#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ctlstop/error.hpp"
#include "ctlstop/generator.hpp"
#include "ctlstop/intervals.hpp"
#include "ctlstop/model.hpp"

namespace ctlstop {

struct FarField {
    enum class Kind { Slope, Decay, Dirichlet };
    Kind kind = Kind::Slope;
    double rate = 0.0;   // Decay: u' = -rate u at +L (mirrored at -L)
    double left = 0.0;   // Dirichlet values
    double right = 0.0;
};

/// Slope one for growing payoffs, exponential decay when g has compact support.
inline FarField default_far_field(const GameModel& m) {
    if (m.g.kind == TerminalPayoff::Kind::TruncatedParabola && m.h.kind == RunningPayoff::Kind::Zero) {
        FarField f;
        f.kind = FarField::Kind::Decay;
        f.rate = std::sqrt(2.0 * m.discount) / std::abs(m.sigma);
        return f;
    }
    if (m.g.lambda == 0.0 && m.h.kind == RunningPayoff::Kind::Zero) {
        FarField f;
        f.kind = FarField::Kind::Dirichlet;
        return f;
    }
    return {};
}

struct GridProblem {
    double L = 6.0;
    long N = 1201;
    GameModel model;
    FarField far_field;
    bool allow_upwind = true;

    double h() const { return 2.0 * L / static_cast<double>(N - 1); }
    double x(long i) const { return -L + static_cast<double>(i) * h(); }

    void validate() const {
        if (N < 201) throw Error(Errc::InvalidConfig, "need at least 201 nodes");
        if (!(L > 0.0)) throw Error(Errc::InvalidConfig, "domain half-width must be positive");
        model.validate();
    }
};

enum class Label { ODE, GradPlus, GradMinus, Obstacle };

inline const char* to_string(Label l) {
    switch (l) {
    case Label::ODE: return "ODE";
    case Label::GradPlus: return "GradPlus";
    case Label::GradMinus: return "GradMinus";
    case Label::Obstacle: return "Obstacle";
    }
    return "?";
}

struct DiscreteSolution {
    GridProblem problem;
    std::vector<double> x;
    std::vector<double> u;
    std::vector<double> g;
    std::vector<Label> labels;
    std::vector<double> residual;  // |u_i - F_i(u)| of the discrete fixed point
    double max_residual = 0.0;
    int outer_iterations = 0;
    int inner_iterations = 0;
    bool upwinded = false;
};

namespace detail {

enum class Ctrl { None, Plus, Minus };

struct Tridiag {
    std::vector<double> sub, diag, sup, rhs;
    explicit Tridiag(std::size_t n) : sub(n, 0.0), diag(n, 0.0), sup(n, 0.0), rhs(n, 0.0) {}

    std::vector<double> solve() const {
        const std::size_t n = diag.size();
        std::vector<double> cp(n), dp(n), out(n);
        double den = diag[0];
        cp[0] = sup[0] / den;
        dp[0] = rhs[0] / den;
        for (std::size_t i = 1; i < n; ++i) {
            den = diag[i] - sub[i] * cp[i - 1];
            if (den == 0.0) throw Error(Errc::NoConvergence, "singular policy system");
            cp[i] = sup[i] / den;
            dp[i] = (rhs[i] - sub[i] * dp[i - 1]) / den;
        }
        out[n - 1] = dp[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) out[i] = dp[i] - cp[i] * out[i + 1];
        return out;
    }
};

struct Stencil {
    std::vector<double> a, c, d, f;  // P_i = (a u_{i-1} + c u_{i+1} + f_i) / d_i
};

inline Stencil build_stencil(const GridProblem& p, bool& upwinded) {
    const long n = p.N;
    const double h = p.h();
    const double diff = 0.5 * p.model.sigma * p.model.sigma / (h * h);
    Stencil s;
    s.a.resize(n), s.c.resize(n), s.d.resize(n), s.f.resize(n);
    upwinded = false;
    for (long i = 0; i < n; ++i) {
        const double xi = p.x(i);
        const double b = p.model.drift(xi);
        double a = diff - b / (2.0 * h);
        double c = diff + b / (2.0 * h);
        if (a < 0.0 || c < 0.0) {
            if (!p.allow_upwind) {
                std::ostringstream os;
                os << "central differences lose monotonicity at x = " << xi;
                throw Error(Errc::NonMonotoneScheme, os.str());
            }
            upwinded = true;
            a = diff + std::max(-b, 0.0) / h;
            c = diff + std::max(b, 0.0) / h;
        }
        s.a[i] = a;
        s.c[i] = c;
        s.d[i] = a + c + p.model.discount;
        s.f[i] = p.model.h(xi);
    }
    return s;
}

}  // namespace detail

/// Discrete version of the coupled system: at every interior node
///   u_i = min{ max{P_i(u), g_i}, u_{i-1} + h, u_{i+1} + h },
/// with P_i the monotone three-point continuation value. The controller's
/// choice (the outer min) is improved by policy iteration; for each fixed
/// controller policy the stopper's obstacle problem is solved exactly by an
/// inner policy iteration.
inline DiscreteSolution solve(const GridProblem& prob, int max_iter = 0, double tol = 1e-12) {
    prob.validate();
    if (max_iter <= 0) max_iter = static_cast<int>(2 * prob.N);
    using detail::Ctrl;
    const long n = prob.N;
    const double h = prob.h();
    DiscreteSolution sol;
    sol.problem = prob;
    const detail::Stencil st = detail::build_stencil(prob, sol.upwinded);
    sol.x.resize(n);
    sol.g.resize(n);
    for (long i = 0; i < n; ++i) sol.x[i] = prob.x(i), sol.g[i] = prob.model.g(sol.x[i]);

    std::vector<Ctrl> ctrl(n, Ctrl::None);
    std::vector<char> stop(n, 0);
    if (prob.far_field.kind == FarField::Kind::Slope) {
        ctrl[0] = Ctrl::Minus;
        ctrl[n - 1] = Ctrl::Plus;
    }
    if (prob.far_field.kind == FarField::Kind::Dirichlet) stop[0] = stop[n - 1] = 1;

    auto P = [&](const std::vector<double>& u, long i) {
        return (st.a[i] * u[i - 1] + st.c[i] * u[i + 1] + st.f[i]) / st.d[i];
    };
    auto assemble = [&]() {
        detail::Tridiag T(static_cast<std::size_t>(n));
        for (long i = 1; i + 1 < n; ++i) {
            switch (ctrl[i]) {
            case Ctrl::Plus: T.diag[i] = 1.0, T.sub[i] = -1.0, T.rhs[i] = h; break;
            case Ctrl::Minus: T.diag[i] = 1.0, T.sup[i] = -1.0, T.rhs[i] = h; break;
            case Ctrl::None:
                if (stop[i]) {
                    T.diag[i] = 1.0, T.rhs[i] = sol.g[i];
                } else {
                    T.diag[i] = st.d[i], T.sub[i] = -st.a[i], T.sup[i] = -st.c[i], T.rhs[i] = st.f[i];
                }
                break;
            }
        }
        const FarField& ff = prob.far_field;
        switch (ff.kind) {
        case FarField::Kind::Slope:
            T.diag[0] = 1.0, T.sup[0] = -1.0, T.rhs[0] = h;
            T.diag[n - 1] = 1.0, T.sub[n - 1] = -1.0, T.rhs[n - 1] = h;
            break;
        case FarField::Kind::Decay:
            T.diag[0] = 1.0 + ff.rate * h, T.sup[0] = -1.0;
            T.diag[n - 1] = 1.0 + ff.rate * h, T.sub[n - 1] = -1.0;
            break;
        case FarField::Kind::Dirichlet:
            T.diag[0] = 1.0, T.rhs[0] = ff.left;
            T.diag[n - 1] = 1.0, T.rhs[n - 1] = ff.right;
            break;
        }
        return T.solve();
    };

    std::vector<double> u;
    int outer = 0;
    for (;; ++outer) {
        if (outer >= max_iter) {
            sol.u = u;
            throw Error(Errc::NoConvergence, "controller policy did not settle");
        }
        // stopper: u_i = max(P_i, g_i) on uncontrolled nodes
        for (int inner = 0;; ++inner) {
            if (inner >= max_iter) throw Error(Errc::NoConvergence, "stopping policy did not settle");
            u = assemble();
            ++sol.inner_iterations;
            bool changed = false;
            for (long i = 1; i + 1 < n; ++i) {
                if (ctrl[i] != Ctrl::None) continue;
                const double p = P(u, i);
                const double scale = tol * (1.0 + std::abs(sol.g[i]));
                char want = stop[i];
                if (sol.g[i] > p + scale) want = 1;
                if (sol.g[i] < p - scale) want = 0;
                if (want != stop[i]) stop[i] = want, changed = true;
            }
            if (!changed) break;
        }
        // controller: pick the cheapest of waiting and the two unit-slope moves
        bool changed = false;
        std::vector<Ctrl> next = ctrl;
        for (long i = 1; i + 1 < n; ++i) {
            const double wait = std::max(P(u, i), sol.g[i]);
            const double plus = u[i - 1] + h;
            const double minus = u[i + 1] + h;
            const double best = std::min({wait, plus, minus});
            const double scale = tol * (1.0 + std::abs(best));
            auto value_of = [&](Ctrl c) { return c == Ctrl::None ? wait : (c == Ctrl::Plus ? plus : minus); };
            if (value_of(ctrl[i]) <= best + scale) continue;
            const bool obstacle_binds = sol.g[i] >= P(u, i);
            Ctrl pick;
            if (wait <= best + scale && obstacle_binds) pick = Ctrl::None;
            else if (plus <= best + scale) pick = Ctrl::Plus;
            else if (minus <= best + scale) pick = Ctrl::Minus;
            else pick = Ctrl::None;
            next[i] = pick;
            changed = true;
        }
        // a pair pointing at each other has no solution; keep the waiting choice there
        for (long i = 1; i + 1 < n; ++i)
            if (next[i] == Ctrl::Plus && next[i - 1] == Ctrl::Minus) {
                if (ctrl[i] != Ctrl::Plus) next[i] = Ctrl::None;
                else next[i - 1] = Ctrl::None;
            }
        ctrl.swap(next);
        if (!changed) break;
    }
    sol.outer_iterations = outer + 1;
    sol.u = u;

    sol.labels.resize(n);
    sol.residual.assign(n, 0.0);
    for (long i = 0; i < n; ++i) {
        switch (ctrl[i]) {
        case Ctrl::Plus: sol.labels[i] = Label::GradPlus; break;
        case Ctrl::Minus: sol.labels[i] = Label::GradMinus; break;
        case Ctrl::None: sol.labels[i] = stop[i] ? Label::Obstacle : Label::ODE; break;
        }
        if (i == 0 || i == n - 1) continue;
        // ties go to the obstacle
        if (sol.labels[i] == Label::ODE && std::abs(u[i] - sol.g[i]) <= tol * (1.0 + std::abs(sol.g[i])))
            sol.labels[i] = Label::Obstacle;
        const double F = std::min({std::max(P(u, i), sol.g[i]), u[i - 1] + h, u[i + 1] + h});
        sol.residual[i] = std::abs(u[i] - F);
        sol.max_residual = std::max(sol.max_residual, sol.residual[i]);
    }
    return sol;
}

/// Regions read off a discrete solution. C is the union of the grid cells
/// on which a unit-slope label binds; kinks are nodes where the one-sided
/// difference quotients jump by more than 50 h.
inline RegionSet extract_discrete_regions(const DiscreteSolution& sol, double tol = 1e-9) {
    const long n = static_cast<long>(sol.u.size());
    const double h = sol.problem.h();
    RegionSet rs;

    IntervalSet c, sw, sc;
    for (long i = 0; i < n; ++i) {
        if (sol.labels[i] == Label::GradPlus && i > 0) c.push_back({sol.x[i - 1], sol.x[i], true, true});
        if (sol.labels[i] == Label::GradMinus && i + 1 < n) c.push_back({sol.x[i], sol.x[i + 1], true, true});
        if (sol.labels[i] == Label::Obstacle) sw.push_back({sol.x[i], sol.x[i], true, true});
        if (sol.u[i] < sol.g[i] - tol * (1.0 + std::abs(sol.g[i]))) {
            const double lo = i > 0 ? sol.x[i - 1] : sol.x[i];
            const double hi = i + 1 < n ? sol.x[i + 1] : sol.x[i];
            sc.push_back({lo, hi, true, true});
        }
    }
    // pieces at most one cell apart belong to one stretch
    const auto close_gaps = [h](IntervalSet s) {
        for (auto& i : s) i.hi += 0.75 * h, i.lo -= 0.75 * h;
        s = normalize(s);
        for (auto& i : s) i.hi -= 0.75 * h, i.lo += 0.75 * h;
        return s;
    };
    rs.control = close_gaps(c);
    rs.stop_wait = close_gaps(sw);
    rs.stop_control = normalize(sc);

    const IntervalSet occupied = unite(rs.control, rs.stopping());
    double cursor = -kInf;
    bool closed = false;
    for (const auto& i : occupied) {
        if (i.lo > cursor) rs.waiting.push_back({cursor, i.lo, closed, false});
        cursor = std::max(cursor, i.hi);
    }
    if (std::isfinite(cursor)) rs.waiting.push_back({cursor, kInf, false, false});
    if (occupied.empty()) rs.waiting = {{-kInf, kInf, false, false}};

    std::vector<double> jump(n, 0.0);
    for (long i = 1; i + 1 < n; ++i) jump[i] = std::abs((sol.u[i + 1] - sol.u[i]) - (sol.u[i] - sol.u[i - 1])) / h;
    const double threshold = 50.0 * h;
    for (long i = 1; i + 1 < n; ++i) {
        if (jump[i] <= threshold) continue;
        if (jump[i] < jump[i - 1] || jump[i] < jump[i + 1]) continue;
        if (jump[i] == jump[i - 1] && i > 1 && jump[i - 1] > threshold) continue;
        rs.kinks.push_back(sol.x[i]);
    }

    for (double b : finite_endpoints(rs.control)) {
        const bool is_kink = std::any_of(rs.kinks.begin(), rs.kinks.end(),
                                         [&](double k) { return std::abs(k - b) <= 1.5 * h; });
        BoundaryKind kind = BoundaryKind::Repelling;
        if (!is_kink) {
            const long i = std::clamp<long>(std::lround((b - sol.x[0]) / h), 1, n - 2);
            const double dl = (sol.u[i] - sol.u[i - 1]) / h;
            const double dr = (sol.u[i + 1] - sol.u[i]) / h;
            constexpr double s = 1e-6;
            const bool up = dl < 1.0 - s && std::abs(dr - 1.0) <= s;
            const bool down = std::abs(dl + 1.0) <= s && dr > -1.0 + s;
            kind = up || down ? BoundaryKind::Reflecting : BoundaryKind::Repelling;
        }
        rs.boundary_tags.push_back({b, kind});
    }
    for (double k : rs.kinks)
        if (!rs.tag_at(k, 1.5 * h)) rs.boundary_tags.push_back({k, BoundaryKind::Repelling});
    std::sort(rs.boundary_tags.begin(), rs.boundary_tags.end(),
              [](const BoundaryTag& a, const BoundaryTag& b) { return a.x < b.x; });
    return rs;
}

}  // namespace ctlstop
