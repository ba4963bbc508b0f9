#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "ctlstop/error.hpp"
#include "ctlstop/generator.hpp"
#include "ctlstop/model.hpp"

// h = 0, g = max(lambda (1 - x^2), 0), b = 0, sigma = 1.

namespace ctlstop {

struct KinkParams {
    double delta = 0.5;
    double lambda = 1.0;

    void validate() const {
        if (!(std::isfinite(delta) && delta > 0.0 && std::isfinite(lambda) && lambda > 0.0))
            throw Error(Errc::InvalidModel, "need delta > 0 and lambda > 0");
        const double w = omega();
        if (w < 1e-6 || w > 1e6) {
            std::ostringstream os;
            os << "sqrt(2 delta) = " << w << " outside [1e-6, 1e6]";
            throw Error(Errc::OutOfSupportedRange, os.str());
        }
    }
    GameModel model() const { return make_kink_model(delta, lambda); }
    double omega() const { return std::sqrt(2.0 * delta); }
};

enum class KinkCase { CaseA_NeverControl, CaseB_JumpFromBeta, CaseC_JumpFromZero };

inline const char* to_string(KinkCase c) {
    switch (c) {
    case KinkCase::CaseA_NeverControl: return "CaseA_NeverControl";
    case KinkCase::CaseB_JumpFromBeta: return "CaseB_JumpFromBeta";
    case KinkCase::CaseC_JumpFromZero: return "CaseC_JumpFromZero";
    }
    return "?";
}

struct RegimeII {
    KinkCase tag;
    double alpha;
    std::optional<double> beta;
    double coeff_A;
    double residual;  // largest smooth-fit / continuity mismatch of the closed form
    Generator generator;
};

namespace kink {

/// Smallest lambda for which stopping alone is no longer optimal near 0.
inline double lambda_star_1(double delta) {
    const double a = 1.0 / std::sqrt(2.0 * delta);
    return 0.5 * (a + std::sqrt(a * a + 1.0));
}

/// Above this lambda the jump starts from 0 rather than from beta > 0.
inline double lambda_star_2(double delta) {
    const double a = 1.0 / std::sqrt(2.0 * delta);
    return 0.5 * a + std::sqrt(0.25 * a * a + 1.0);
}

inline double residual_of(const Generator& gen, double x) {
    const double dv = std::abs(eval_u_side(gen, x, Side::Left) - eval_u_side(gen, x, Side::Right));
    const double dd = std::abs(eval_du(gen, x, Side::Left) - eval_du(gen, x, Side::Right));
    return std::max(dv, dd);
}

/// Regions when u runs at slope -1 from `inner` to alpha and decays beyond.
inline RegionSet jump_regions(double inner, double alpha) {
    RegionSet rs;
    rs.waiting = {{-kInf, -alpha, false, false}, {alpha, kInf, false, false}};
    if (inner > 0.0) {
        rs.stop_wait = {{-inner, inner, true, true}};
        rs.control = {{-alpha, -inner, true, true}, {inner, alpha, true, true}};
        rs.kinks = {-inner, inner};
        rs.boundary_tags = {{-alpha, BoundaryKind::Reflecting},
                            {-inner, BoundaryKind::Repelling},
                            {inner, BoundaryKind::Repelling},
                            {alpha, BoundaryKind::Reflecting}};
    } else {
        rs.control = {{-alpha, alpha, true, true}};
        rs.kinks = {0.0};
        rs.boundary_tags = {{-alpha, BoundaryKind::Reflecting},
                            {0.0, BoundaryKind::Repelling},
                            {alpha, BoundaryKind::Reflecting}};
    }
    rs.stop_control = rs.control;
    return rs;
}

}  // namespace kink

/// The controller never acts; the stopper stops on [-alpha, alpha].
inline std::optional<RegimeII> solve_caseA(const KinkParams& p) {
    p.validate();
    if (!(p.lambda <= kink::lambda_star_1(p.delta))) return std::nullopt;
    const double w = p.omega();
    const double a = 1.0 / w;
    const double alpha = 1.0 / (a + std::sqrt(a * a + 1.0));
    const double A = p.lambda * (1.0 - alpha * alpha) * std::exp(w * alpha);

    Generator gen;
    gen.pieces = {Piece::quadratic(0.0, alpha, -p.lambda, p.lambda), Piece::exponential(alpha, kInf, A, w)};
    gen.breakpoints = {{"alpha", alpha}};
    RegionSet rs;
    rs.stop_wait = {{-alpha, alpha, true, true}};
    rs.waiting = {{-kInf, -alpha, false, false}, {alpha, kInf, false, false}};
    gen.declared = rs;
    const double res = kink::residual_of(gen, alpha);
    return RegimeII{KinkCase::CaseA_NeverControl, alpha, std::nullopt, A, res, std::move(gen)};
}

/// Jump from +-beta to +-alpha, reflection outward at +-alpha.
inline std::optional<RegimeII> solve_caseB(const KinkParams& p) {
    p.validate();
    const double l1 = kink::lambda_star_1(p.delta);
    const double l2 = kink::lambda_star_2(p.delta);
    if (!(p.lambda > l1 && p.lambda <= l2)) return std::nullopt;
    const double w = p.omega();
    const double lam = p.lambda;
    const double alpha = std::sqrt(1.0 - 1.0 / (lam * w));
    const double A = lam * (1.0 - alpha * alpha) * std::exp(w * alpha);
    const double disc = 1.0 - 4.0 * lam * (alpha - lam * alpha * alpha);
    if (disc < 0.0) {
        std::ostringstream os;
        os << "discriminant " << disc << " at lambda=" << lam;
        throw Error(Errc::ComplexRoot, os.str());
    }
    double beta = (1.0 - std::sqrt(disc)) / (2.0 * lam);
    if (beta < 0.0 && beta > -1e-12) beta = 0.0;
    if (beta < 0.0 || !(beta < alpha)) {
        std::ostringstream os;
        os << "beta = " << beta << " outside [0, alpha) at lambda=" << lam;
        throw Error(Errc::Inconsistent, os.str());
    }
    const double c = -lam * alpha * alpha + alpha + lam;

    Generator gen;
    if (beta > 0.0) gen.pieces.push_back(Piece::quadratic(0.0, beta, -lam, lam));
    gen.pieces.push_back(Piece::affine_abs(beta, alpha, -1.0, c));
    gen.pieces.push_back(Piece::exponential(alpha, kInf, A, w));
    gen.breakpoints = {{"beta", beta}, {"alpha", alpha}};
    gen.declared = kink::jump_regions(beta, alpha);
    double res = kink::residual_of(gen, alpha);
    if (beta > 0.0) res = std::max(res, std::abs(eval_u_side(gen, beta, Side::Left) -
                                                 eval_u_side(gen, beta, Side::Right)));
    return RegimeII{KinkCase::CaseB_JumpFromBeta, alpha, beta, A, res, std::move(gen)};
}

/// Kink at 0: jump from the interior of [-alpha, alpha] to the nearer end.
inline std::optional<RegimeII> solve_caseC(const KinkParams& p) {
    p.validate();
    if (!(p.lambda > kink::lambda_star_2(p.delta))) return std::nullopt;
    const double w = p.omega();
    const double lam = p.lambda;
    const double alpha = std::sqrt(1.0 - 1.0 / (lam * w));
    const double A = lam * (1.0 - alpha * alpha) * std::exp(w * alpha);
    const double c = -lam * alpha * alpha + alpha + lam;

    Generator gen;
    gen.pieces = {Piece::affine_abs(0.0, alpha, -1.0, c), Piece::exponential(alpha, kInf, A, w)};
    gen.breakpoints = {{"alpha", alpha}};
    gen.declared = kink::jump_regions(0.0, alpha);
    const double res = kink::residual_of(gen, alpha);
    return RegimeII{KinkCase::CaseC_JumpFromZero, alpha, std::nullopt, A, res, std::move(gen)};
}

inline RegimeII classify_regime_II(const KinkParams& p) {
    p.validate();
    std::vector<RegimeII> hits;
    if (auto r = solve_caseA(p)) hits.push_back(std::move(*r));
    if (auto r = solve_caseB(p)) hits.push_back(std::move(*r));
    if (auto r = solve_caseC(p)) hits.push_back(std::move(*r));
    if (hits.size() == 1) return std::move(hits.front());
    std::ostringstream os;
    os << "delta=" << p.delta << " lambda=" << p.lambda;
    throw Error(hits.empty() ? Errc::RegimeGap : Errc::RegimeOverlap, os.str());
}

}  // namespace ctlstop
