#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ctlstop {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool lo_closed = true;
    bool hi_closed = true;

    bool contains(double x, double tol = 0.0) const {
        const bool above = lo_closed ? x >= lo - tol : x > lo - tol;
        const bool below = hi_closed ? x <= hi + tol : x < hi + tol;
        return above && below;
    }
    bool interior_contains(double x) const { return x > lo && x < hi; }
    double length() const { return hi - lo; }
    bool is_point() const { return lo == hi; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

using IntervalSet = std::vector<Interval>;

inline bool contains(const IntervalSet& s, double x, double tol = 0.0) {
    return std::any_of(s.begin(), s.end(), [&](const Interval& i) { return i.contains(x, tol); });
}

inline bool interior_contains(const IntervalSet& s, double x) {
    return std::any_of(s.begin(), s.end(), [&](const Interval& i) { return i.interior_contains(x); });
}

/// Sort and merge intervals that overlap or touch at a closed endpoint.
inline IntervalSet normalize(IntervalSet s) {
    std::sort(s.begin(), s.end(), [](const Interval& a, const Interval& b) {
        return a.lo < b.lo || (a.lo == b.lo && a.lo_closed && !b.lo_closed);
    });
    IntervalSet out;
    for (const auto& i : s) {
        if (!out.empty()) {
            auto& last = out.back();
            const bool joins = i.lo < last.hi || (i.lo == last.hi && (i.lo_closed || last.hi_closed));
            if (joins) {
                if (i.hi > last.hi) {
                    last.hi = i.hi;
                    last.hi_closed = i.hi_closed;
                } else if (i.hi == last.hi) {
                    last.hi_closed = last.hi_closed || i.hi_closed;
                }
                continue;
            }
        }
        out.push_back(i);
    }
    return out;
}

inline IntervalSet unite(const IntervalSet& a, const IntervalSet& b) {
    IntervalSet all = a;
    all.insert(all.end(), b.begin(), b.end());
    return normalize(std::move(all));
}

/// Extend a set described on [0, inf) to the whole line by reflection x -> -x.
inline IntervalSet mirror_half_line(const IntervalSet& plus) {
    IntervalSet all;
    for (const auto& i : plus) {
        if (i.lo == 0.0) {
            // touches the origin: the mirrored pair is one interval through 0
            all.push_back({-i.hi, i.hi, i.hi_closed, i.hi_closed});
        } else {
            all.push_back(i);
            all.push_back({-i.hi, -i.lo, i.hi_closed, i.lo_closed});
        }
    }
    return normalize(std::move(all));
}

/// Every interval of `a` lies inside some interval of `b`, endpoints compared up to tol.
inline bool subset_of(const IntervalSet& a, const IntervalSet& b, double tol) {
    for (const auto& i : a) {
        const bool inside = std::any_of(b.begin(), b.end(), [&](const Interval& j) {
            return i.lo >= j.lo - tol && i.hi <= j.hi + tol;
        });
        if (!inside) return false;
    }
    return true;
}

/// Finite endpoints of all intervals, sorted and deduplicated.
inline std::vector<double> finite_endpoints(const IntervalSet& s) {
    std::vector<double> pts;
    for (const auto& i : s) {
        if (std::isfinite(i.lo)) pts.push_back(i.lo);
        if (std::isfinite(i.hi)) pts.push_back(i.hi);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

inline bool same_sets(const IntervalSet& a, const IntervalSet& b, double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t k = 0; k < a.size(); ++k) {
        auto close = [tol](double x, double y) {
            return (std::isinf(x) && x == y) || std::abs(x - y) <= tol;
        };
        if (!close(a[k].lo, b[k].lo) || !close(a[k].hi, b[k].hi)) return false;
    }
    return true;
}

}  // namespace ctlstop
