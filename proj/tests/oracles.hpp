#pragma once

// Independent reference implementations used only by the tests. None of
// these call into the code paths they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using Points = std::vector<std::vector<double>>;

inline double euclid(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

/// Greedy max-min by direct re-evaluation of min distances at every step.
inline std::vector<std::size_t> greedy_maxmin(const Points& pts, std::size_t k, std::size_t start) {
    std::vector<std::size_t> sel{start};
    while (sel.size() < k) {
        std::size_t best = pts.size();
        double best_val = -1.0;
        for (std::size_t c = 0; c < pts.size(); ++c) {
            if (std::find(sel.begin(), sel.end(), c) != sel.end()) continue;
            double m = std::numeric_limits<double>::infinity();
            for (std::size_t s : sel) m = std::min(m, euclid(pts[c], pts[s]));
            if (m > best_val) {
                best_val = m;
                best = c;
            }
        }
        sel.push_back(best);
    }
    return sel;
}

/// Closest pair by enumeration; ties resolve lexicographically.
inline std::array<std::size_t, 2> closest_pair(const Points& pts) {
    std::array<std::size_t, 2> best{0, 1};
    double bv = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            if (euclid(pts[i], pts[j]) < bv) {
                bv = euclid(pts[i], pts[j]);
                best = {i, j};
            }
    return best;
}

/// Central finite-difference gradient of a scalar function.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double step) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double x0 = x[i];
        x[i] = x0 + step;
        const double fp = f(x);
        x[i] = x0 - step;
        const double fm = f(x);
        x[i] = x0;
        g[i] = (fp - fm) / (2.0 * step);
    }
    return g;
}

/// Max over components of |a - b| / max(|a|, |b|, floor), with the floor at
/// floor_scale * max(1, max|b|). Components far below the finite-difference
/// rounding level cannot be compared relatively.
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                                 double floor_scale = 1e-6) {
    double bmax = 1.0;
    for (double v : b) bmax = std::max(bmax, std::abs(v));
    const double floor = floor_scale * bmax;
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a[i] - b[i]) / std::max({std::abs(a[i]), std::abs(b[i]), floor}));
    return worst;
}

/// Convex hull area by Andrew's monotone chain and the shoelace formula.
inline double hull_area(Points pts) {
    std::sort(pts.begin(), pts.end());
    auto cross = [](const std::vector<double>& o, const std::vector<double>& a, const std::vector<double>& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    Points h(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], p) <= 0) --k;
        h[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
        h[k++] = pts[i];
    }
    h.resize(k - 1);
    double a = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const auto& p = h[i];
        const auto& q = h[(i + 1) % h.size()];
        a += p[0] * q[1] - q[0] * p[1];
    }
    return std::abs(a) / 2.0;
}

/// All triangles (i<j<k) whose circumcircle contains no other point
/// strictly inside, found by enumeration.
inline std::vector<std::array<std::size_t, 3>> empty_circle_triangles(const Points& p, double rel_tol = 1e-12) {
    std::vector<std::array<std::size_t, 3>> out;
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            for (std::size_t k = j + 1; k < n; ++k) {
                const double ax = p[i][0], ay = p[i][1], bx = p[j][0], by = p[j][1], cx = p[k][0], cy = p[k][1];
                const double d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
                if (std::abs(d) < 1e-14) continue;
                const double ux = ((ax * ax + ay * ay) * (by - cy) + (bx * bx + by * by) * (cy - ay) +
                                   (cx * cx + cy * cy) * (ay - by)) / d;
                const double uy = ((ax * ax + ay * ay) * (cx - bx) + (bx * bx + by * by) * (ax - cx) +
                                   (cx * cx + cy * cy) * (bx - ax)) / d;
                const double r = std::hypot(ax - ux, ay - uy);
                bool empty = true;
                for (std::size_t q = 0; q < n && empty; ++q) {
                    if (q == i || q == j || q == k) continue;
                    if (std::hypot(p[q][0] - ux, p[q][1] - uy) < r * (1.0 - rel_tol)) empty = false;
                }
                if (empty) out.push_back({i, j, k});
            }
    return out;
}

}  // namespace oracle
