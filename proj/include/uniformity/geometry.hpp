#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace uniformity {

// ---------------------------------------------------------------------------
// Distance statistics
// ---------------------------------------------------------------------------

/// Minimum pairwise distance h_min and per-point nearest-neighbour distances.
struct DistanceReport {
    std::size_t n = 0;
    Metric metric = Metric::euclidean;
    double h_min = 0.0;
    std::pair<std::size_t, std::size_t> argmin_pair{0, 1};
    std::vector<double> nn_dist;
};

/// Exact O(N^2) scan. Rows are independent; the argmin pair is reduced in
/// index order so ties resolve to the lexicographically smallest (i, j).
inline DistanceReport distance_report(const EmbeddedDataset& ds, Metric metric) {
    const std::size_t n = ds.size();
    if (n < 2) throw ValidationError("distance_report needs at least 2 points");
    const DistanceFn dist(ds, metric);

    DistanceReport rep;
    rep.n = n;
    rep.metric = metric;
    rep.nn_dist.assign(n, std::numeric_limits<double>::infinity());
    std::vector<double> row_min(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> row_arg(n, n);

    parallel_for(n, [&](std::size_t i) {
        double nn = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double h = dist(i, j);
            nn = std::min(nn, h);
            if (j > i && h < row_min[i]) {
                row_min[i] = h;
                row_arg[i] = j;
            }
        }
        rep.nn_dist[i] = nn;
    });

    rep.h_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (row_min[i] < rep.h_min) {
            rep.h_min = row_min[i];
            rep.argmin_pair = {i, row_arg[i]};
        }
    }
    return rep;
}

/// Euclidean h_min of a dataset.
inline double h_min(const EmbeddedDataset& ds) { return distance_report(ds, Metric::euclidean).h_min; }

/// sqrt(sum of h_ij^2 over j != i with h_ij <= H): the neighbourhood norm
/// that bounds the frame lower bound of point i from above.
inline double local_cluster_norm(const EmbeddedDataset& ds, std::size_t i, double radius) {
    if (i >= ds.size()) throw ValidationError("local_cluster_norm: index out of range");
    if (!(radius >= 0.0)) throw ValidationError("local_cluster_norm: H must be >= 0");
    double s = 0.0;
    for (std::size_t j = 0; j < ds.size(); ++j) {
        if (j == i) continue;
        const double h2 = squared_distance(ds.point(i), ds.point(j));
        if (std::sqrt(h2) <= radius) s += h2;
    }
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// General position
// ---------------------------------------------------------------------------

namespace detail {

inline double bbox_diagonal(std::span<const double> pts, std::size_t d) {
    const std::size_t n = pts.size() / d;
    double s = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = 0; i < n; ++i) {
            lo = std::min(lo, pts[i * d + a]);
            hi = std::max(hi, pts[i * d + a]);
        }
        s += (hi - lo) * (hi - lo);
    }
    return std::sqrt(s);
}

inline double simplex_det(std::span<const double> pts, std::size_t d, std::span<const std::size_t> tuple) {
    Matrix m(d, d);
    const double* x0 = pts.data() + tuple[0] * d;
    for (std::size_t r = 0; r < d; ++r) {
        const double* xr = pts.data() + tuple[r + 1] * d;
        for (std::size_t c = 0; c < d; ++c) m(r, c) = xr[c] - x0[c];
    }
    return determinant(std::move(m));
}

// Advances `t` (strictly increasing, values < n) to the next combination.
inline bool next_combination(std::vector<std::size_t>& t, std::size_t n) {
    const std::size_t k = t.size();
    for (std::size_t i = k; i-- > 0;) {
        if (t[i] < n - k + i) {
            ++t[i];
            for (std::size_t j = i + 1; j < k; ++j) t[j] = t[j - 1] + 1;
            return true;
        }
    }
    return false;
}

}  // namespace detail

/// Number of points up to which the general-position test is exhaustive.
inline constexpr std::size_t kExhaustiveGeneralPositionLimit = 64;
/// Tuples sampled beyond that limit.
inline constexpr std::size_t kGeneralPositionSamples = 10000;

/// First (d+1)-tuple that is affinely dependent, i.e. whose simplex
/// determinant is at most 1e-12 * scale^d (scale = bounding-box diagonal).
/// Exhaustive for N <= 64; beyond that a fixed-seed sample of 10^4 tuples
/// is tested, so a clean result there is probabilistic.
inline std::optional<std::vector<std::size_t>> find_affine_dependence(std::span<const double> pts, std::size_t d) {
    if (d == 0 || pts.size() % d != 0) throw ValidationError("general position: bad point buffer");
    const std::size_t n = pts.size() / d;
    if (n < d + 1) throw ValidationError("general position: need at least d+1 points");
    const double scale = detail::bbox_diagonal(pts, d);
    const double tol = 1e-12 * std::pow(scale, static_cast<double>(d));
    auto degenerate = [&](std::span<const std::size_t> t) {
        return !(std::abs(detail::simplex_det(pts, d, t)) > tol);
    };

    std::vector<std::size_t> t(d + 1);
    if (n <= kExhaustiveGeneralPositionLimit) {
        std::iota(t.begin(), t.end(), std::size_t{0});
        do {
            if (degenerate(t)) return t;
        } while (detail::next_combination(t, n));
        return std::nullopt;
    }
    Rng rng(0x5eed'9e0c'0001ULL);
    for (std::size_t s = 0; s < kGeneralPositionSamples; ++s) {
        for (std::size_t a = 0; a <= d; ++a) {
            bool fresh;
            do {
                t[a] = static_cast<std::size_t>(rng.uniform_index(n));
                fresh = std::find(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(a), t[a]) ==
                        t.begin() + static_cast<std::ptrdiff_t>(a);
            } while (!fresh);
        }
        std::sort(t.begin(), t.end());
        if (degenerate(t)) return t;
    }
    return std::nullopt;
}

inline bool general_position_check(std::span<const double> pts, std::size_t d) {
    return !find_affine_dependence(pts, d).has_value();
}

inline bool general_position_check(const EmbeddedDataset& ds) {
    return general_position_check(ds.coords(), ds.dim());
}

// ---------------------------------------------------------------------------
// Simplicial meshes
// ---------------------------------------------------------------------------

/// Triangulation of a point set in R^1 or R^2: simplices are (dim+1)-tuples
/// of vertex indices, stored flat; 2-D simplices are counter-clockwise.
struct SimplexMesh {
    std::size_t dim = 0;
    std::vector<double> vertices;          // row-major, dim per vertex
    std::vector<std::size_t> simplices;    // flat, (dim+1) per simplex
    std::vector<double> per_simplex_diameter;

    std::size_t vertex_count() const noexcept { return dim == 0 ? 0 : vertices.size() / dim; }
    std::size_t simplex_count() const noexcept { return dim == 0 ? 0 : simplices.size() / (dim + 1); }

    std::span<const double> vertex(std::size_t v) const { return {vertices.data() + v * dim, dim}; }
    std::span<const std::size_t> simplex(std::size_t s) const {
        return {simplices.data() + s * (dim + 1), dim + 1};
    }
};

/// Largest vertex-to-vertex distance within one simplex.
inline double simplex_diameter(const SimplexMesh& mesh, std::size_t s) {
    const auto v = mesh.simplex(s);
    double h = 0.0;
    for (std::size_t a = 0; a < v.size(); ++a)
        for (std::size_t b = a + 1; b < v.size(); ++b)
            h = std::max(h, std::sqrt(squared_distance(mesh.vertex(v[a]), mesh.vertex(v[b]))));
    return h;
}

inline void compute_diameters(SimplexMesh& mesh) {
    mesh.per_simplex_diameter.resize(mesh.simplex_count());
    for (std::size_t s = 0; s < mesh.simplex_count(); ++s) mesh.per_simplex_diameter[s] = simplex_diameter(mesh, s);
}

/// Unsigned length (1-D) or area (2-D) of one simplex.
inline double simplex_volume(const SimplexMesh& mesh, std::size_t s) {
    const auto v = mesh.simplex(s);
    if (mesh.dim == 1) return std::abs(mesh.vertex(v[1])[0] - mesh.vertex(v[0])[0]);
    const auto a = mesh.vertex(v[0]), b = mesh.vertex(v[1]), c = mesh.vertex(v[2]);
    return 0.5 * std::abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
}

inline double mesh_volume(const SimplexMesh& mesh) {
    double total = 0.0;
    for (std::size_t s = 0; s < mesh.simplex_count(); ++s) total += simplex_volume(mesh, s);
    return total;
}

/// h_max_{d+1}: the largest pairwise vertex distance inside any simplex.
inline double h_max_simplex(const SimplexMesh& mesh) {
    if (mesh.simplex_count() == 0) throw ValidationError("h_max_simplex: empty mesh");
    if (mesh.per_simplex_diameter.size() != mesh.simplex_count()) {
        double h = 0.0;
        for (std::size_t s = 0; s < mesh.simplex_count(); ++s) h = std::max(h, simplex_diameter(mesh, s));
        return h;
    }
    return *std::max_element(mesh.per_simplex_diameter.begin(), mesh.per_simplex_diameter.end());
}

/// Minimum distance between distinct mesh vertices.
inline double mesh_h_min(const SimplexMesh& mesh) {
    const std::size_t n = mesh.vertex_count();
    double h = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            h = std::min(h, std::sqrt(squared_distance(mesh.vertex(i), mesh.vertex(j))));
    return h;
}

namespace detail {

inline double orient2d(const double* a, const double* b, const double* c) {
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

// Positive when d lies inside the circumcircle of the counter-clockwise
// triangle (a, b, c): the 3x3 reduction of the 4x4 in-circle determinant.
inline double incircle(const double* a, const double* b, const double* c, const double* d) {
    const double adx = a[0] - d[0], ady = a[1] - d[1];
    const double bdx = b[0] - d[0], bdy = b[1] - d[1];
    const double cdx = c[0] - d[0], cdy = c[1] - d[1];
    const double alift = adx * adx + ady * ady;
    const double blift = bdx * bdx + bdy * bdy;
    const double clift = cdx * cdx + cdy * cdy;
    return alift * (bdx * cdy - bdy * cdx) - blift * (adx * cdy - ady * cdx) + clift * (adx * bdy - ady * bdx);
}

struct Circle {
    double cx, cy, r;
};

inline Circle circumcircle(const double* a, const double* b, const double* c) {
    const double bx = b[0] - a[0], by = b[1] - a[1];
    const double cx = c[0] - a[0], cy = c[1] - a[1];
    const double d = 2.0 * (bx * cy - by * cx);
    const double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
    const double ux = (cy * b2 - by * c2) / d;
    const double uy = (bx * c2 - cx * b2) / d;
    return {a[0] + ux, a[1] + uy, std::sqrt(ux * ux + uy * uy)};
}

// Incremental Bowyer-Watson over ghost triangles. The unbounded exterior is
// covered by ghost triangles (u, v, kGhost) on every hull edge, which
// replaces the usual finite super-triangle and guarantees the final mesh
// covers the convex hull exactly.
class BowyerWatson {
public:
    static constexpr std::int64_t kGhost = -1;

    explicit BowyerWatson(std::span<const double> pts) : pts_(pts) {}

    std::vector<std::array<std::size_t, 3>> run() {
        const std::size_t n = pts_.size() / 2;
        // seed triangle: points 0, 1 and the first later point off their line
        std::int64_t a = 0, b = 1, c = 2;
        while (static_cast<std::size_t>(c) < n && orient2d(p(a), p(b), p(c)) == 0.0) ++c;
        if (static_cast<std::size_t>(c) == n) throw ValidationError("points not in general position: all points are collinear");
        const std::int64_t seed_c = c;
        if (orient2d(p(a), p(b), p(c)) < 0) std::swap(b, c);
        add({a, b, c});
        add({b, a, kGhost});
        add({c, b, kGhost});
        add({a, c, kGhost});
        for (std::size_t i = 2; i < n; ++i)
            if (static_cast<std::int64_t>(i) != seed_c) insert(static_cast<std::int64_t>(i));

        std::vector<std::array<std::size_t, 3>> out;
        for (const auto& t : tris_) {
            if (!t.alive || t.v[2] == kGhost) continue;
            out.push_back({static_cast<std::size_t>(t.v[0]), static_cast<std::size_t>(t.v[1]),
                           static_cast<std::size_t>(t.v[2])});
        }
        return out;
    }

private:
    struct Tri {
        std::array<std::int64_t, 3> v;  // a ghost, if any, is always v[2]
        bool alive = true;
    };

    static std::uint64_t key(std::int64_t u, std::int64_t v) {
        return (static_cast<std::uint64_t>(u + 1) << 32) | static_cast<std::uint64_t>(v + 1);
    }

    const double* p(std::int64_t i) const { return pts_.data() + 2 * i; }

    void add(std::array<std::int64_t, 3> v) {
        // rotate so the ghost vertex (if present) sits last
        while (v[0] == kGhost || v[1] == kGhost) std::rotate(v.begin(), v.begin() + 1, v.end());
        const auto id = tris_.size();
        tris_.push_back({v, true});
        for (int e = 0; e < 3; ++e) edge_[key(v[e], v[(e + 1) % 3])] = id;
    }

    void kill(std::size_t t) {
        tris_[t].alive = false;
        const auto& v = tris_[t].v;
        for (int e = 0; e < 3; ++e) {
            auto it = edge_.find(key(v[e], v[(e + 1) % 3]));
            if (it != edge_.end() && it->second == t) edge_.erase(it);
        }
    }

    bool conflicts(const Tri& t, std::int64_t q) const {
        if (t.v[2] != kGhost) return incircle(p(t.v[0]), p(t.v[1]), p(t.v[2]), p(q)) > 0.0;
        // ghost on hull edge (u, v) with the exterior to its left: the open
        // half-plane beyond the edge, plus the open edge itself
        const double o = orient2d(p(t.v[0]), p(t.v[1]), p(q));
        if (o > 0.0) return true;
        if (o < 0.0) return false;
        const double* u = p(t.v[0]);
        const double* w = p(t.v[1]);
        const double* x = p(q);
        const double along = (x[0] - u[0]) * (w[0] - u[0]) + (x[1] - u[1]) * (w[1] - u[1]);
        const double len2 = (w[0] - u[0]) * (w[0] - u[0]) + (w[1] - u[1]) * (w[1] - u[1]);
        return along > 0.0 && along < len2;
    }

    void insert(std::int64_t q) {
        std::size_t seed = tris_.size();
        for (std::size_t t = 0; t < tris_.size(); ++t) {
            if (tris_[t].alive && conflicts(tris_[t], q)) {
                seed = t;
                break;
            }
        }
        if (seed == tris_.size()) throw NumericalError("delaunay: point " + std::to_string(q) + " has no conflict");

        // flood-fill the conflict cavity across shared edges
        std::vector<std::size_t> cavity{seed}, stack{seed};
        std::vector<char> in_cavity(tris_.size(), 0);
        in_cavity[seed] = 1;
        while (!stack.empty()) {
            const std::size_t t = stack.back();
            stack.pop_back();
            const auto v = tris_[t].v;
            for (int e = 0; e < 3; ++e) {
                auto it = edge_.find(key(v[(e + 1) % 3], v[e]));
                if (it == edge_.end()) continue;
                const std::size_t nb = it->second;
                if (in_cavity[nb] || !conflicts(tris_[nb], q)) continue;
                in_cavity[nb] = 1;
                cavity.push_back(nb);
                stack.push_back(nb);
            }
        }
        // boundary edges: cavity edges whose twin lies outside the cavity
        std::vector<std::pair<std::int64_t, std::int64_t>> boundary;
        for (std::size_t t : cavity) {
            const auto v = tris_[t].v;
            for (int e = 0; e < 3; ++e) {
                auto it = edge_.find(key(v[(e + 1) % 3], v[e]));
                if (it != edge_.end() && in_cavity[it->second]) continue;
                boundary.emplace_back(v[e], v[(e + 1) % 3]);
            }
        }
        for (std::size_t t : cavity) kill(t);
        for (const auto& [u, w] : boundary) {
            // ghost-ghost edges cannot occur; skip the degenerate fan triangle
            if (u == kGhost && w == kGhost) continue;
            add({u, w, q});
        }
    }

    std::span<const double> pts_;
    std::vector<Tri> tris_;
    std::unordered_map<std::uint64_t, std::size_t> edge_;
};

}  // namespace detail

/// Relative tolerance of the post-hoc empty-circumcircle verification.
inline constexpr double kCircumcircleTolerance = 1e-9;

/// Smallest relative clearance (|q - c| - R) / R of any non-vertex point q
/// from the circumcircle (centre c, radius R) of any triangle. A Delaunay
/// mesh has a value >= -tolerance.
inline double min_circumcircle_clearance(const SimplexMesh& mesh) {
    if (mesh.dim != 2) throw ValidationError("circumcircle clearance needs a 2-D mesh");
    double worst = std::numeric_limits<double>::infinity();
    const std::size_t n = mesh.vertex_count();
    for (std::size_t s = 0; s < mesh.simplex_count(); ++s) {
        const auto v = mesh.simplex(s);
        const auto c = detail::circumcircle(mesh.vertex(v[0]).data(), mesh.vertex(v[1]).data(),
                                            mesh.vertex(v[2]).data());
        for (std::size_t q = 0; q < n; ++q) {
            if (q == v[0] || q == v[1] || q == v[2]) continue;
            const auto x = mesh.vertex(q);
            const double r = std::hypot(x[0] - c.cx, x[1] - c.cy);
            worst = std::min(worst, (r - c.r) / c.r);
        }
    }
    return worst;
}

namespace detail {

[[noreturn]] inline void throw_not_general(const std::vector<std::size_t>& tuple) {
    std::string list;
    for (std::size_t i : tuple) list += (list.empty() ? "" : ",") + std::to_string(i);
    throw ValidationError("points not in general position: tuple (" + list + ")");
}

// First pair of coincident points, if any.
inline std::optional<std::vector<std::size_t>> find_coincident(std::span<const double> pts, std::size_t d) {
    const std::size_t n = pts.size() / d;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto at = [&](std::size_t i) { return pts.subspan(i * d, d); };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto x = at(a), y = at(b);
        if (std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end())) return true;
        if (std::lexicographical_compare(y.begin(), y.end(), x.begin(), x.end())) return false;
        return a < b;
    });
    std::optional<std::vector<std::size_t>> best;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const auto x = at(order[i]), y = at(order[i + 1]);
        if (!std::equal(x.begin(), x.end(), y.begin())) continue;
        std::vector<std::size_t> t{std::min(order[i], order[i + 1]), std::max(order[i], order[i + 1])};
        if (!best || t < *best) best = t;
    }
    return best;
}

}  // namespace detail

namespace detail {

// A triangle plus a fourth point lying on its circumcircle, sorted; such a
// quadruple has two valid triangulations. The tolerance is relative to the
// smaller of the circumradius and the bounding-box diagonal so that sliver
// triangles on a nearly straight hull are not flagged.
inline std::optional<std::vector<std::size_t>> find_cocircular(const SimplexMesh& mesh) {
    const std::size_t n = mesh.vertex_count();
    const double diag = bbox_diagonal(mesh.vertices, 2);
    for (std::size_t s = 0; s < mesh.simplex_count(); ++s) {
        const auto v = mesh.simplex(s);
        const auto c = circumcircle(mesh.vertex(v[0]).data(), mesh.vertex(v[1]).data(), mesh.vertex(v[2]).data());
        for (std::size_t q = 0; q < n; ++q) {
            if (q == v[0] || q == v[1] || q == v[2]) continue;
            const auto x = mesh.vertex(q);
            if (std::abs(std::hypot(x[0] - c.cx, x[1] - c.cy) - c.r) <= kCircumcircleTolerance * std::min(c.r, diag)) {
                std::vector<std::size_t> t{v[0], v[1], v[2], q};
                std::sort(t.begin(), t.end());
                return t;
            }
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// Delaunay triangulation for d in {1, 2}.
///
/// d = 1 yields the N-1 segments between consecutive sorted points. d = 2
/// runs Bowyer-Watson with points inserted in input order, then verifies the
/// empty-circumcircle property. Inputs whose triangulation is not unique
/// (coincident points, all points collinear, or four cocircular points with
/// an empty circumcircle) are rejected with the offending tuple rather than
/// perturbed. Collinear triples are otherwise allowed.
inline SimplexMesh delaunay(std::span<const double> pts, std::size_t d) {
    if (d != 1 && d != 2) throw ValidationError("delaunay supports d = 1 or d = 2 only (got " + std::to_string(d) + ")");
    if (pts.size() % d != 0) throw ValidationError("delaunay: bad point buffer");
    const std::size_t n = pts.size() / d;
    if (n < d + 1) throw ValidationError("delaunay: need at least " + std::to_string(d + 1) + " points");
    if (auto dup = detail::find_coincident(pts, d)) detail::throw_not_general(*dup);

    SimplexMesh mesh;
    mesh.dim = d;
    mesh.vertices.assign(pts.begin(), pts.end());
    if (d == 1) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pts[a] < pts[b]; });
        for (std::size_t i = 0; i + 1 < n; ++i) {
            mesh.simplices.push_back(order[i]);
            mesh.simplices.push_back(order[i + 1]);
        }
    } else {
        for (const auto& t : detail::BowyerWatson(pts).run()) mesh.simplices.insert(mesh.simplices.end(), t.begin(), t.end());
        for (std::size_t s = 0; s < mesh.simplex_count(); ++s) {
            const auto v = mesh.simplex(s);
            if (!(detail::orient2d(mesh.vertex(v[0]).data(), mesh.vertex(v[1]).data(), mesh.vertex(v[2]).data()) > 0.0))
                throw NumericalError("delaunay: produced a degenerate or inverted triangle");
        }
        if (min_circumcircle_clearance(mesh) < -kCircumcircleTolerance)
            throw NumericalError("delaunay: empty-circumcircle verification failed");
        if (auto q = detail::find_cocircular(mesh)) detail::throw_not_general(*q);
    }
    compute_diameters(mesh);
    return mesh;
}

inline SimplexMesh delaunay(const EmbeddedDataset& ds) { return delaunay(ds.coords(), ds.dim()); }

/// Uniform mesh of [lo, hi] with `cells` segments.
inline SimplexMesh uniform_mesh_1d(double lo, double hi, std::size_t cells) {
    if (cells < 1 || !(hi > lo)) throw ValidationError("uniform_mesh_1d: need cells >= 1 and hi > lo");
    SimplexMesh mesh;
    mesh.dim = 1;
    for (std::size_t i = 0; i <= cells; ++i)
        mesh.vertices.push_back(i == cells ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cells));
    for (std::size_t i = 0; i < cells; ++i) {
        mesh.simplices.push_back(i);
        mesh.simplices.push_back(i + 1);
    }
    compute_diameters(mesh);
    return mesh;
}

/// Structured mesh of the box [lo0,hi0] x [lo1,hi1]: `cells` x `cells`
/// squares, each cut along its lower-left/upper-right diagonal.
inline SimplexMesh structured_mesh_2d(double lo0, double hi0, double lo1, double hi1, std::size_t cells) {
    if (cells < 1 || !(hi0 > lo0) || !(hi1 > lo1)) throw ValidationError("structured_mesh_2d: bad box or cell count");
    SimplexMesh mesh;
    mesh.dim = 2;
    auto coord = [cells](double lo, double hi, std::size_t i) {
        return i == cells ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(cells);
    };
    for (std::size_t j = 0; j <= cells; ++j)
        for (std::size_t i = 0; i <= cells; ++i) {
            mesh.vertices.push_back(coord(lo0, hi0, i));
            mesh.vertices.push_back(coord(lo1, hi1, j));
        }
    auto at = [cells](std::size_t i, std::size_t j) { return j * (cells + 1) + i; };
    for (std::size_t j = 0; j < cells; ++j)
        for (std::size_t i = 0; i < cells; ++i) {
            const std::size_t v00 = at(i, j), v10 = at(i + 1, j), v01 = at(i, j + 1), v11 = at(i + 1, j + 1);
            mesh.simplices.insert(mesh.simplices.end(), {v00, v10, v11});
            mesh.simplices.insert(mesh.simplices.end(), {v00, v11, v01});
        }
    compute_diameters(mesh);
    return mesh;
}

}  // namespace uniformity
