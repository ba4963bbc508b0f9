#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ctlstop/error.hpp"
#include "ctlstop/generator.hpp"
#include "ctlstop/model.hpp"
#include "ctlstop/roots.hpp"

// Quadratic payoffs: b = 0, sigma = 1, h = kappa x^2 + mu, g = lambda x^2.

namespace ctlstop {

struct QuadParams {
    double delta = 1.0;
    double kappa = 1.0;
    double lambda = 1.0;
    double mu = 0.0;

    void validate() const {
        auto ok = [](double v) { return std::isfinite(v); };
        if (!(ok(delta) && delta > 0.0 && ok(kappa) && kappa > 0.0 && ok(lambda) && lambda > 0.0 &&
              ok(mu) && mu >= 0.0)) {
            std::ostringstream os;
            os << "need delta, kappa, lambda > 0 and mu >= 0 (got " << delta << ", " << kappa << ", "
               << lambda << ", " << mu << ")";
            throw Error(Errc::InvalidModel, os.str());
        }
    }
    GameModel model() const { return make_quadratic_model(delta, kappa, lambda, mu); }

    double omega() const { return std::sqrt(2.0 * delta); }
    double excess() const { return delta * lambda - kappa; }   // delta lambda - kappa
    double k_const() const { return kappa + delta * mu; }      // kappa + delta mu
    double half_ratio() const { return delta / (2.0 * kappa); }  // delta / (2 kappa)
    /// sqrt((kappa + delta mu) / (delta (delta lambda - kappa))), only for excess() > 0.
    double r0() const { return std::sqrt(k_const() / (delta * excess())); }
};

enum class QuadCase { Case1_ControlDominant, Case2_StopDominant, Case3_Bridged, Case4_Degenerate };

inline const char* to_string(QuadCase c) {
    switch (c) {
    case QuadCase::Case1_ControlDominant: return "Case1_ControlDominant";
    case QuadCase::Case2_StopDominant: return "Case2_StopDominant";
    case QuadCase::Case3_Bridged: return "Case3_Bridged";
    case QuadCase::Case4_Degenerate: return "Case4_Degenerate";
    }
    return "?";
}

struct RegimeI {
    QuadCase tag;
    double alpha;
    double beta;  // equals alpha outside case 1
    double coeff_A;
    double residual;  // defining equation at the computed free boundary
    Generator generator;
};

namespace quad {

/// tanh(w b) - delta (2 kappa b - delta) / (kappa w), with derivative.
inline std::pair<double, double> residual1(const QuadParams& p, double b) {
    const double w = p.omega();
    const double t = std::tanh(w * b);
    return {t - p.delta * (2.0 * p.kappa * b - p.delta) / (p.kappa * w),
            w * (1.0 - t * t) - 2.0 * p.delta / w};
}

/// tanh(w x) - w D x / (delta D x^2 - K), D = delta lambda - kappa, K = kappa + delta mu.
inline std::pair<double, double> residual2(const QuadParams& p, double x) {
    const double w = p.omega();
    const double D = p.excess();
    const double K = p.k_const();
    const double q = p.delta * D * x * x - K;
    const double t = std::tanh(w * x);
    const double rhs = w * D * x / q;
    const double drhs = w * D * (-p.delta * D * x * x - K) / (q * q);
    return {t - rhs, w * (1.0 - t * t) - drhs};
}

/// tanh(w x) - delta (delta - 2 kappa x) / (w (delta D x^2 - K)).
inline std::pair<double, double> residual3(const QuadParams& p, double x) {
    const double w = p.omega();
    const double D = p.excess();
    const double K = p.k_const();
    const double q = p.delta * D * x * x - K;
    const double n = p.delta * (p.delta - 2.0 * p.kappa * x);
    const double t = std::tanh(w * x);
    const double rhs = n / (w * q);
    const double drhs = (-2.0 * p.kappa * p.delta * q - n * 2.0 * p.delta * D * x) / (w * q * q);
    return {t - rhs, w * (1.0 - t * t) - drhs};
}

/// Coefficient of cosh in cases 2 and 3 (value match with lambda x^2 at alpha).
inline double coeff_A_match(const QuadParams& p, double alpha) {
    return (p.delta * p.excess() * alpha * alpha - p.k_const()) /
           (p.delta * p.delta * cosh_c(p.omega() * alpha));
}

inline Piece inner_piece(const QuadParams& p, double hi, double A) {
    return Piece::cosh_quadratic(0.0, hi, A, p.omega(), p.kappa / p.delta,
                                 p.k_const() / (p.delta * p.delta));
}

inline bool finite_negative(double v) { return std::isfinite(v) && v < 0.0; }

inline bool knife_edge(const QuadParams& p) {
    if (!(p.excess() > 0.0)) return false;
    return std::abs(p.r0() - p.half_ratio()) <= 1e-9 * p.half_ratio();
}

/// s = sqrt(2 delta mu / (delta lambda - kappa)) and the comparison value s - delta^2/(kappa w).
inline std::pair<double, double> tanh_test(const QuadParams& p) {
    const double s = std::sqrt(2.0 * p.delta * p.mu / p.excess());
    return {std::tanh(s), s - p.delta * p.delta / (p.kappa * p.omega())};
}

inline RegionSet regions_inner_control(double wait_edge, double stop_edge) {
    RegionSet rs;
    rs.waiting = {{-wait_edge, wait_edge, false, false}};
    rs.control = {{-kInf, -wait_edge, false, true}, {wait_edge, kInf, true, false}};
    rs.stop_control = {{-kInf, -stop_edge, false, true}, {stop_edge, kInf, true, false}};
    rs.boundary_tags = {{-wait_edge, BoundaryKind::Reflecting}, {wait_edge, BoundaryKind::Reflecting}};
    return rs;
}

/// Expanding search for the upper end of a bracket where f turns positive.
template <class FD>
double expand_until_positive(FD fd, double lo, double step) {
    double hi = lo + step;
    for (int k = 0; k < 60; ++k, hi = lo + (step *= 2.0))
        if (fd(hi).first > 0.0) return hi;
    throw Error(Errc::BracketFailure, "no positive residual above the lower fence");
}

}  // namespace quad

/// Controller acts outside (-beta, beta); stopper stops for |x| >= alpha > beta.
inline std::optional<RegimeI> solve_case1(const QuadParams& p) {
    p.validate();
    const double D = p.excess();
    bool cond;
    if (D < 0.0) {
        cond = true;
    } else if (D == 0.0) {
        cond = p.mu > 0.0;
    } else {
        const auto [lhs, rhs] = quad::tanh_test(p);
        cond = lhs < rhs;
    }
    if (!cond) return std::nullopt;

    const double w = p.omega();
    const double lo = p.half_ratio();
    const auto root = find_root([&](double b) { return quad::residual1(p, b); },
                                std::nextafter(lo, kInf), lo + 10.0 / w, "beta (case 1)");
    const double beta = root.x;
    const double A = -p.kappa / (p.delta * p.delta * cosh_c(w * beta));
    const double u_beta = p.kappa * beta * beta / p.delta + p.mu / p.delta;
    double disc = 1.0 - 4.0 * p.lambda * (beta - u_beta);
    if (disc < 0.0 && disc > -1e-12) disc = 0.0;
    if (disc < 0.0) throw Error(Errc::ComplexRoot, "case 1 condition holds but u never meets g");
    const double alpha = (1.0 + std::sqrt(disc)) / (2.0 * p.lambda);
    if (alpha < beta - 1e-9) throw Error(Errc::Inconsistent, "case 1 condition holds but alpha < beta");

    Generator gen;
    gen.pieces = {quad::inner_piece(p, beta, A), Piece::affine_abs(beta, kInf, 1.0, u_beta - beta)};
    gen.breakpoints = {{"beta", beta}, {"alpha", alpha}};
    gen.declared = quad::regions_inner_control(beta, alpha);
    return RegimeI{QuadCase::Case1_ControlDominant, alpha, beta, A, root.residual, std::move(gen)};
}

/// Stopper stops on alpha <= |x| <= 1/(2 lambda) without control; control only inside S.
inline std::optional<RegimeI> solve_case2(const QuadParams& p) {
    p.validate();
    if (!(p.excess() > 0.0)) return std::nullopt;
    const double r0 = p.r0();
    const double x_star = 1.0 / (2.0 * p.lambda);
    // alpha <= 1/(2 lambda) iff the residual is nonnegative there.
    if (!(x_star > r0) || quad::residual2(p, x_star).first < 0.0) return std::nullopt;

    auto fd = [&](double x) { return quad::residual2(p, x); };
    double lo = r0 * (1.0 + 1e-12);
    while (!quad::finite_negative(fd(lo).first)) lo = r0 + 2.0 * (lo - r0);
    const double hi = std::min(x_star, quad::expand_until_positive(fd, r0, 10.0 / p.omega()));
    const Root root = fd(hi).first == 0.0 ? Root{hi, 0.0} : find_root(fd, lo, hi, "alpha (case 2)");
    const double alpha = root.x;
    const double A = quad::coeff_A_match(p, alpha);

    Generator gen;
    gen.pieces.push_back(quad::inner_piece(p, alpha, A));
    if (alpha < x_star) gen.pieces.push_back(Piece::quadratic(alpha, x_star, p.lambda, 0.0));
    gen.pieces.push_back(Piece::affine_abs(x_star, kInf, 1.0, -1.0 / (4.0 * p.lambda)));
    gen.breakpoints = {{"alpha", alpha}, {"control_edge", x_star}};

    RegionSet rs;
    rs.waiting = {{-alpha, alpha, false, false}};
    rs.stop_wait = {{-x_star, -alpha, true, true}, {alpha, x_star, true, true}};
    rs.control = {{-kInf, -x_star, false, true}, {x_star, kInf, true, false}};
    rs.stop_control = rs.control;
    rs.boundary_tags = {{-x_star, BoundaryKind::Reflecting}, {x_star, BoundaryKind::Reflecting}};
    gen.declared = rs;
    return RegimeI{QuadCase::Case2_StopDominant, alpha, alpha, A, root.residual, std::move(gen)};
}

/// Control and stopping regions share the boundary alpha.
inline std::optional<RegimeI> solve_case3(const QuadParams& p) {
    p.validate();
    if (!(p.excess() > 0.0) || quad::knife_edge(p)) return std::nullopt;
    const double r0 = p.r0();
    const double d2k = p.half_ratio();
    auto fd = [&](double x) { return quad::residual3(p, x); };

    double lo, hi;
    if (d2k < r0) {
        const auto [lhs, rhs] = quad::tanh_test(p);
        if (!(lhs >= rhs)) return std::nullopt;
        lo = d2k;
        hi = r0 * (1.0 - 1e-12);
        while (!quad::finite_negative(fd(hi).first)) hi = r0 - 2.0 * (r0 - hi);
    } else {
        const double x_star = 1.0 / (2.0 * p.lambda);
        // alpha > 1/(2 lambda) iff the residual is negative there (or 1/(2 lambda) <= r0).
        if (x_star > r0 && !(fd(x_star).first < 0.0)) return std::nullopt;
        lo = r0 * (1.0 + 1e-12);
        while (!quad::finite_negative(fd(lo).first)) lo = r0 + 2.0 * (lo - r0);
        hi = d2k;
    }
    const Root root = find_root(fd, lo, hi, "alpha (case 3)");
    const double alpha = root.x;
    const double A = quad::coeff_A_match(p, alpha);
    const double u_alpha = p.lambda * alpha * alpha;

    Generator gen;
    gen.pieces = {quad::inner_piece(p, alpha, A), Piece::affine_abs(alpha, kInf, 1.0, u_alpha - alpha)};
    gen.breakpoints = {{"alpha", alpha}};
    gen.declared = quad::regions_inner_control(alpha, alpha);
    return RegimeI{QuadCase::Case3_Bridged, alpha, alpha, A, root.residual, std::move(gen)};
}

/// Knife edge r0 == delta/(2 kappa): quadratic inside, slope-one tail outside.
inline std::optional<RegimeI> solve_case4(const QuadParams& p) {
    p.validate();
    if (!quad::knife_edge(p)) return std::nullopt;
    const double x = p.half_ratio();
    const Piece inner = Piece::quadratic(0.0, x, p.kappa / p.delta, p.k_const() / (p.delta * p.delta));
    const double u_x = inner.value(x);

    Generator gen;
    gen.pieces = {inner, Piece::affine_abs(x, kInf, 1.0, u_x - x)};
    gen.breakpoints = {{"alpha", x}};
    gen.declared = quad::regions_inner_control(x, x);
    const double residual = p.r0() - x;
    return RegimeI{QuadCase::Case4_Degenerate, x, x, 0.0, residual, std::move(gen)};
}

/// Dispatch over the four cases; the knife edge is tested first.
inline RegimeI classify_regime_I(const QuadParams& p) {
    p.validate();
    if (auto r4 = solve_case4(p)) return *r4;
    std::vector<RegimeI> hits;
    if (auto r = solve_case1(p)) hits.push_back(std::move(*r));
    if (auto r = solve_case2(p)) hits.push_back(std::move(*r));
    if (auto r = solve_case3(p)) hits.push_back(std::move(*r));
    if (hits.size() == 1) return std::move(hits.front());
    std::ostringstream os;
    os << "delta=" << p.delta << " kappa=" << p.kappa << " lambda=" << p.lambda << " mu=" << p.mu;
    if (hits.empty()) {
        os << " (delta lambda - kappa = " << p.excess() << ")";
        throw Error(Errc::RegimeGap, os.str());
    }
    os << " claimed by";
    for (const auto& h : hits) os << ' ' << to_string(h.tag) << "(residual " << h.residual << ")";
    throw Error(Errc::RegimeOverlap, os.str());
}

}  // namespace ctlstop
