#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "ctlstop/error.hpp"

namespace ctlstop {

enum class Side { Left, Right };

/// b(x) = b0 + b1 x
struct Drift {
    double b0 = 0.0;
    double b1 = 0.0;
    double operator()(double x) const { return b0 + b1 * x; }
};

/// h(x): zero or kappa x^2 + mu.
struct RunningPayoff {
    enum class Kind { Zero, Quadratic };
    Kind kind = Kind::Zero;
    double kappa = 0.0;
    double mu = 0.0;

    double operator()(double x) const {
        return kind == Kind::Zero ? 0.0 : kappa * x * x + mu;
    }
    double sup() const {
        if (kind == Kind::Zero) return 0.0;
        return kappa > 0.0 ? HUGE_VAL : mu;
    }
};

/// g(x): lambda x^2, or the truncated parabola max(lambda (1 - x^2), 0).
struct TerminalPayoff {
    enum class Kind { Quadratic, TruncatedParabola };
    Kind kind = Kind::Quadratic;
    double lambda = 0.0;

    double operator()(double x) const {
        if (kind == Kind::Quadratic) return lambda * x * x;
        return std::max(lambda * (1.0 - x * x), 0.0);
    }
    double d1(double x, Side side = Side::Right) const {
        if (kind == Kind::Quadratic) return 2.0 * lambda * x;
        const double ax = std::abs(x);
        if (ax < 1.0) return -2.0 * lambda * x;
        if (ax > 1.0) return 0.0;
        const bool inner = (x > 0.0) == (side == Side::Left);
        return inner ? -2.0 * lambda * x : 0.0;
    }
    double d2(double x) const {
        if (kind == Kind::Quadratic) return 2.0 * lambda;
        return std::abs(x) < 1.0 ? -2.0 * lambda : 0.0;
    }
    /// Points where g is not differentiable.
    std::vector<double> kinks() const {
        if (kind == Kind::TruncatedParabola && lambda > 0.0) return {-1.0, 1.0};
        return {};
    }
    double sup() const {
        if (kind == Kind::TruncatedParabola) return lambda;
        return lambda > 0.0 ? HUGE_VAL : 0.0;
    }
};

/// Coefficients of the controlled diffusion and the two payoffs.
/// L w = 1/2 sigma^2 w'' + b w' - delta w.
struct GameModel {
    Drift drift;
    double sigma = 1.0;
    double discount = 1.0;
    RunningPayoff h;
    TerminalPayoff g;

    void validate() const {
        std::ostringstream os;
        if (!(std::isfinite(sigma) && sigma * sigma > 0.0)) os << "sigma^2 must be positive; ";
        if (!(std::isfinite(discount) && discount > 0.0)) os << "discount must be positive; ";
        if (!(std::isfinite(drift.b0) && std::isfinite(drift.b1))) os << "drift not finite; ";
        if (h.kind == RunningPayoff::Kind::Quadratic &&
            !(h.kappa >= 0.0 && h.mu >= 0.0 && std::isfinite(h.kappa) && std::isfinite(h.mu)))
            os << "running payoff must be nonnegative; ";
        if (!(g.lambda >= 0.0 && std::isfinite(g.lambda))) os << "terminal payoff must be nonnegative; ";
        const std::string msg = os.str();
        if (!msg.empty()) throw Error(Errc::InvalidModel, msg);
    }

    double generator_op(double x, double w, double dw, double d2w) const {
        return 0.5 * sigma * sigma * d2w + drift(x) * dw - discount * w;
    }
};

inline GameModel make_quadratic_model(double delta, double kappa, double lambda, double mu) {
    GameModel m;
    m.discount = delta;
    m.h = {RunningPayoff::Kind::Quadratic, kappa, mu};
    m.g = {TerminalPayoff::Kind::Quadratic, lambda};
    m.validate();
    return m;
}

inline GameModel make_kink_model(double delta, double lambda) {
    GameModel m;
    m.discount = delta;
    m.h = {RunningPayoff::Kind::Zero, 0.0, 0.0};
    m.g = {TerminalPayoff::Kind::TruncatedParabola, lambda};
    m.validate();
    return m;
}

}  // namespace ctlstop
