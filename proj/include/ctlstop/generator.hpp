#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ctlstop/error.hpp"
#include "ctlstop/intervals.hpp"
#include "ctlstop/model.hpp"

namespace ctlstop {

/// cosh/sinh with the argument clamped at 700 to stay finite.
inline double cosh_c(double z) { return std::cosh(std::clamp(z, -700.0, 700.0)); }
inline double sinh_c(double z) { return std::sinh(std::clamp(z, -700.0, 700.0)); }

enum class Form { Quadratic, CoshQuadratic, AffineAbs, Exponential, Constant };

inline const char* to_string(Form f) {
    switch (f) {
    case Form::Quadratic: return "Quadratic";
    case Form::CoshQuadratic: return "CoshQuadratic";
    case Form::AffineAbs: return "AffineAbs";
    case Form::Exponential: return "Exponential";
    case Form::Constant: return "Constant";
    }
    return "?";
}

/// One closed-form branch of a symmetric generator, stored for x >= 0.
///   Quadratic      a x^2 + c
///   CoshQuadratic  A cosh(omega x) + a x^2 + c
///   AffineAbs      s |x| + c
///   Exponential    A exp(-omega |x|)
///   Constant       c
struct Piece {
    double lo = 0.0;
    double hi = kInf;
    Form form = Form::Constant;
    double A = 0.0;
    double omega = 0.0;
    double a = 0.0;
    double s = 0.0;
    double c = 0.0;

    static Piece quadratic(double lo, double hi, double a, double c) {
        Piece p{lo, hi, Form::Quadratic};
        p.a = a, p.c = c;
        return p;
    }
    static Piece cosh_quadratic(double lo, double hi, double A, double omega, double a, double c) {
        Piece p{lo, hi, Form::CoshQuadratic};
        p.A = A, p.omega = omega, p.a = a, p.c = c;
        return p;
    }
    static Piece affine_abs(double lo, double hi, double s, double c) {
        Piece p{lo, hi, Form::AffineAbs};
        p.s = s, p.c = c;
        return p;
    }
    static Piece exponential(double lo, double hi, double A, double omega) {
        Piece p{lo, hi, Form::Exponential};
        p.A = A, p.omega = omega;
        return p;
    }
    static Piece constant(double lo, double hi, double c) {
        Piece p{lo, hi, Form::Constant};
        p.c = c;
        return p;
    }

    double value(double x) const {
        switch (form) {
        case Form::Quadratic: return a * x * x + c;
        case Form::CoshQuadratic: return A * cosh_c(omega * x) + a * x * x + c;
        case Form::AffineAbs: return s * x + c;
        case Form::Exponential: return A * std::exp(-omega * x);
        case Form::Constant: return c;
        }
        return 0.0;
    }
    double d1(double x) const {
        switch (form) {
        case Form::Quadratic: return 2.0 * a * x;
        case Form::CoshQuadratic: return A * omega * sinh_c(omega * x) + 2.0 * a * x;
        case Form::AffineAbs: return s;
        case Form::Exponential: return -omega * A * std::exp(-omega * x);
        case Form::Constant: return 0.0;
        }
        return 0.0;
    }
    double d2(double x) const {
        switch (form) {
        case Form::Quadratic: return 2.0 * a;
        case Form::CoshQuadratic: return A * omega * omega * cosh_c(omega * x) + 2.0 * a;
        case Form::AffineAbs: return 0.0;
        case Form::Exponential: return omega * omega * A * std::exp(-omega * x);
        case Form::Constant: return 0.0;
        }
        return 0.0;
    }
    /// Slope when it does not depend on x.
    std::optional<double> constant_slope() const {
        if (form == Form::AffineAbs) return s;
        if (form == Form::Constant) return 0.0;
        return std::nullopt;
    }
    bool bounded_on_tail() const {
        switch (form) {
        case Form::Exponential:
        case Form::Constant: return true;
        case Form::AffineAbs: return s == 0.0;
        case Form::Quadratic: return a == 0.0;
        case Form::CoshQuadratic: return A == 0.0 && a == 0.0;
        }
        return false;
    }
};

enum class BoundaryKind { Reflecting, Repelling };

inline const char* to_string(BoundaryKind k) {
    return k == BoundaryKind::Reflecting ? "Reflecting" : "Repelling";
}

struct BoundaryTag {
    double x;
    BoundaryKind kind;
};

/// Region decomposition on the whole line.
struct RegionSet {
    IntervalSet waiting;
    IntervalSet control;
    IntervalSet stop_wait;
    IntervalSet stop_control;
    std::vector<double> kinks;
    std::vector<BoundaryTag> boundary_tags;

    IntervalSet stopping() const { return unite(stop_wait, stop_control); }

    std::optional<BoundaryKind> tag_at(double x, double tol = 1e-9) const {
        for (const auto& t : boundary_tags)
            if (std::abs(t.x - x) <= tol) return t.kind;
        return std::nullopt;
    }
};

struct Breakpoint {
    std::string label;
    double x;
};

/// Symmetric candidate value function: pieces cover [0, inf) and are
/// mirrored on evaluation. `declared` holds the regions claimed by the
/// construction, if any, for comparison against the extracted ones.
struct Generator {
    std::vector<Piece> pieces;
    std::vector<Breakpoint> breakpoints;
    std::optional<RegionSet> declared;

    void validate() const {
        if (pieces.empty()) throw Error(Errc::InvalidModel, "generator has no pieces");
        if (pieces.front().lo != 0.0) throw Error(Errc::InvalidModel, "first piece must start at 0");
        if (!std::isinf(pieces.back().hi)) throw Error(Errc::InvalidModel, "last piece must be unbounded");
        for (std::size_t k = 0; k < pieces.size(); ++k) {
            if (!(pieces[k].lo < pieces[k].hi)) throw Error(Errc::InvalidModel, "empty piece");
            if (k > 0 && pieces[k].lo != pieces[k - 1].hi)
                throw Error(Errc::InvalidModel, "pieces do not abut");
        }
    }

    /// Interior junctions of the half-line pieces.
    std::vector<double> junctions() const {
        std::vector<double> j;
        for (std::size_t k = 1; k < pieces.size(); ++k) j.push_back(pieces[k].lo);
        return j;
    }

    /// Junctions on the whole line (0 included when the mirror joins two pieces there).
    std::vector<double> all_junctions() const {
        std::vector<double> j = {0.0};
        for (double p : junctions()) j.push_back(p), j.push_back(-p);
        std::sort(j.begin(), j.end());
        return j;
    }

    /// Piece active at |x| >= 0, approached from the given side.
    const Piece& piece_at(double ax, Side side = Side::Right) const {
        auto it = std::upper_bound(pieces.begin(), pieces.end(), ax,
                                   [](double v, const Piece& p) { return v < p.hi; });
        if (it == pieces.end()) return pieces.back();
        if (side == Side::Left && ax == it->lo && it != pieces.begin()) return *(it - 1);
        return *it;
    }

    std::optional<double> breakpoint(const std::string& label) const {
        for (const auto& b : breakpoints)
            if (b.label == label) return b.x;
        return std::nullopt;
    }
};

inline double eval_u(const Generator& gen, double x) {
    const double ax = std::abs(x);
    return gen.piece_at(ax).value(ax);
}

/// One-sided derivative. For x < 0 the mirror swaps the sides and the sign.
inline double eval_du(const Generator& gen, double x, Side side) {
    if (x > 0.0 || (x == 0.0 && side == Side::Right)) return gen.piece_at(x, side).d1(x);
    const double ax = -x;
    const Side mirrored = side == Side::Left ? Side::Right : Side::Left;
    return -gen.piece_at(ax, mirrored).d1(ax);
}

/// One-sided value limit (differs from eval_u only for malformed generators).
inline double eval_u_side(const Generator& gen, double x, Side side) {
    const double ax = std::abs(x);
    const Side s = x >= 0.0 ? side : (side == Side::Left ? Side::Right : Side::Left);
    return gen.piece_at(ax, s).value(ax);
}

/// Second derivative where the active piece is unambiguous, without the breakpoint guard.
inline double eval_d2u_unchecked(const Generator& gen, double x) {
    const double ax = std::abs(x);
    return gen.piece_at(ax).d2(ax);
}

}  // namespace ctlstop
