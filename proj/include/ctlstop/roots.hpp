#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <utility>

#include <boost/math/tools/roots.hpp>

#include "ctlstop/error.hpp"

namespace ctlstop {

struct Root {
    double x;
    double residual;  // f(x) at the returned point
};

/// Root of f on [lo, hi] where f(lo) and f(hi) have opposite signs.
/// `fd` returns (f(x), f'(x)). A short bisection narrows the bracket, the
/// safeguarded Newton iteration finishes it, and the last few ulps are
/// scanned for the smallest |f|.
template <class FD>
Root find_root(FD fd, double lo, double hi, const char* what = "root") {
    const double flo = fd(lo).first;
    const double fhi = fd(hi).first;
    if (!(std::isfinite(flo) && std::isfinite(fhi)) || flo * fhi > 0.0) {
        std::ostringstream os;
        os << what << ": no sign change on [" << lo << ", " << hi << "] (f=" << flo << ", "
           << fhi << ")";
        throw Error(Errc::BracketFailure, os.str());
    }
    if (flo == 0.0) return {lo, 0.0};
    if (fhi == 0.0) return {hi, 0.0};

    auto f = [&](double x) { return fd(x).first; };
    std::uintmax_t iters = 60;
    auto br = boost::math::tools::bisect(f, lo, hi, boost::math::tools::eps_tolerance<double>(20),
                                         iters);
    lo = br.first;
    hi = br.second;

    std::uintmax_t newton_iters = 100;
    double x = boost::math::tools::newton_raphson_iterate(
        [&](double t) { return fd(t); }, 0.5 * (lo + hi), lo, hi,
        std::numeric_limits<double>::digits, newton_iters);

    double best = x;
    double best_r = std::abs(f(x));
    double probe = x;
    for (int k = 0; k < 8; ++k) {
        probe = std::nextafter(probe, -std::numeric_limits<double>::infinity());
        const double r = std::abs(f(probe));
        if (r < best_r) best = probe, best_r = r;
    }
    probe = x;
    for (int k = 0; k < 8; ++k) {
        probe = std::nextafter(probe, std::numeric_limits<double>::infinity());
        const double r = std::abs(f(probe));
        if (r < best_r) best = probe, best_r = r;
    }
    return {best, f(best)};
}

/// Derivative-free variant for callers without a closed-form slope.
template <class F>
double bisect_root(F f, double lo, double hi, double tol) {
    double flo = f(lo);
    const double fhi = f(hi);
    if (flo * fhi > 0.0) throw Error(Errc::BracketFailure, "bisect_root: no sign change");
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace ctlstop
