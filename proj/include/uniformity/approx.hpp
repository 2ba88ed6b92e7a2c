#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "box.hpp"
#include "error.hpp"
#include "geometry.hpp"

namespace uniformity {

using ScalarField = std::function<double(std::span<const double>)>;

/// Piecewise-linear interpolant: one value per mesh vertex.
struct InterpolantSpec {
    SimplexMesh mesh;
    std::vector<double> values;

    void validate() const {
        if (values.size() != mesh.vertex_count())
            throw ValidationError("interpolant: " + std::to_string(values.size()) + " values for " +
                                  std::to_string(mesh.vertex_count()) + " vertices");
    }
};

/// Samples g at every mesh vertex.
inline InterpolantSpec make_interpolant(SimplexMesh mesh, const ScalarField& g) {
    InterpolantSpec spec{std::move(mesh), {}};
    spec.values.reserve(spec.mesh.vertex_count());
    for (std::size_t v = 0; v < spec.mesh.vertex_count(); ++v) spec.values.push_back(g(spec.mesh.vertex(v)));
    return spec;
}

/// Barycentric coordinates of x with respect to simplex s (entries 0..dim).
inline std::array<double, 3> barycentric(const SimplexMesh& mesh, std::size_t s, std::span<const double> x) {
    const auto v = mesh.simplex(s);
    if (mesh.dim == 1) {
        const double a = mesh.vertex(v[0])[0], b = mesh.vertex(v[1])[0];
        const double t = (x[0] - a) / (b - a);
        return {1.0 - t, t, 0.0};
    }
    const double* a = mesh.vertex(v[0]).data();
    const double* b = mesh.vertex(v[1]).data();
    const double* c = mesh.vertex(v[2]).data();
    const double area = detail::orient2d(a, b, c);
    const double lb = detail::orient2d(a, x.data(), c) / area;
    const double lc = detail::orient2d(a, b, x.data()) / area;
    return {1.0 - lb - lc, lb, lc};
}

/// Tolerance on barycentric coordinates for point location.
inline constexpr double kLocateTolerance = 1e-12;

/// Lowest-index simplex containing x, or nullopt if x lies outside the hull.
inline std::optional<std::size_t> locate(const SimplexMesh& mesh, std::span<const double> x) {
    if (x.size() != mesh.dim) throw ValidationError("locate: query dimension mismatch");
    for (std::size_t s = 0; s < mesh.simplex_count(); ++s) {
        const auto l = barycentric(mesh, s, x);
        bool inside = true;
        for (std::size_t k = 0; k <= mesh.dim; ++k) inside = inside && l[k] >= -kLocateTolerance;
        if (inside) return s;
    }
    return std::nullopt;
}

inline double interpolate_in(const InterpolantSpec& spec, std::size_t s, std::span<const double> x) {
    const auto l = barycentric(spec.mesh, s, x);
    const auto v = spec.mesh.simplex(s);
    double out = 0.0;
    for (std::size_t k = 0; k <= spec.mesh.dim; ++k) out += l[k] * spec.values[v[k]];
    return out;
}

/// Barycentric-weighted vertex values at a query inside the mesh hull.
/// Queries on shared faces resolve to the lowest-index containing simplex.
inline double interpolate(const InterpolantSpec& spec, std::span<const double> query) {
    spec.validate();
    const auto s = locate(spec.mesh, query);
    if (!s) throw ValidationError("interpolate: query lies outside the mesh hull");
    return interpolate_in(spec, *s, query);
}

/// Composite quadrature used by lp_error: each simplex is split into
/// `subdivisions` segments (1-D, 5-point Gauss-Legendre each) or
/// `subdivisions`^2 triangles (2-D, 3-point edge-midpoint rule each).
struct QuadratureRule {
    std::size_t subdivisions = 1;

    std::size_t points_per_simplex(std::size_t dim) const {
        return dim == 1 ? 5 * subdivisions : 3 * subdivisions * subdivisions;
    }
};

namespace detail {

// Calls f(x, weight) for quadrature nodes of simplex s; weights sum to its volume.
template <typename F>
void for_each_quadrature_node(const SimplexMesh& mesh, std::size_t s, const QuadratureRule& rule, F&& f) {
    const auto v = mesh.simplex(s);
    const std::size_t n = rule.subdivisions;
    if (mesh.dim == 1) {
        static constexpr std::array<double, 5> node{0.0, -0.5384693101056831, 0.5384693101056831,
                                                    -0.9061798459386640, 0.9061798459386640};
        static constexpr std::array<double, 5> weight{0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                                      0.2369268850561891, 0.2369268850561891};
        const double a = mesh.vertex(v[0])[0], b = mesh.vertex(v[1])[0];
        const double h = (b - a) / static_cast<double>(n);
        std::array<double, 2> x{};  // one coordinate used; sized for the 2-D code paths
        for (std::size_t i = 0; i < n; ++i) {
            const double mid = a + (static_cast<double>(i) + 0.5) * h;
            for (std::size_t q = 0; q < 5; ++q) {
                x[0] = mid + 0.5 * h * node[q];
                f(std::span<const double>(x.data(), 1), 0.5 * std::abs(h) * weight[q]);
            }
        }
        return;
    }
    const double* a = mesh.vertex(v[0]).data();
    const double* b = mesh.vertex(v[1]).data();
    const double* c = mesh.vertex(v[2]).data();
    const double sub_area = 0.5 * std::abs(orient2d(a, b, c)) / static_cast<double>(n * n);
    auto lattice = [&](double i, double j, std::array<double, 2>& out) {
        const double si = i / static_cast<double>(n), sj = j / static_cast<double>(n);
        out[0] = a[0] + si * (b[0] - a[0]) + sj * (c[0] - a[0]);
        out[1] = a[1] + si * (b[1] - a[1]) + sj * (c[1] - a[1]);
    };
    auto triangle = [&](const std::array<double, 2>& p, const std::array<double, 2>& q, const std::array<double, 2>& r) {
        const std::array<std::array<double, 2>, 3> mids{{{0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])},
                                                         {0.5 * (q[0] + r[0]), 0.5 * (q[1] + r[1])},
                                                         {0.5 * (r[0] + p[0]), 0.5 * (r[1] + p[1])}}};
        for (const auto& m : mids) f(std::span<const double>(m), sub_area / 3.0);
    };
    std::array<double, 2> p{}, q{}, r{};
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i + j < n; ++i) {
            const auto di = static_cast<double>(i), dj = static_cast<double>(j);
            lattice(di, dj, p);
            lattice(di + 1, dj, q);
            lattice(di, dj + 1, r);
            triangle(p, q, r);
            if (i + j + 1 < n) {
                lattice(di + 1, dj + 1, p);
                triangle(q, p, r);
            }
        }
}

}  // namespace detail

/// L^p norm of (interpolant - g) over the mesh by composite quadrature;
/// p = +inf gives the maximum over quadrature nodes.
inline double lp_error(const InterpolantSpec& spec, const ScalarField& g, double p, QuadratureRule rule = {}) {
    spec.validate();
    if (!(p >= 1.0)) throw ValidationError("lp_error: p must be >= 1");
    if (rule.subdivisions < 1) throw ValidationError("lp_error: subdivisions must be >= 1");
    const bool sup = std::isinf(p);
    double acc = 0.0;
    for (std::size_t s = 0; s < spec.mesh.simplex_count(); ++s) {
        detail::for_each_quadrature_node(spec.mesh, s, rule, [&](std::span<const double> x, double w) {
            const double e = std::abs(interpolate_in(spec, s, x) - g(x));
            if (sup)
                acc = std::max(acc, e);
            else
                acc += w * std::pow(e, p);
        });
    }
    return sup ? acc : std::pow(acc, 1.0 / p);
}

/// C1 h_max^m h_min^{-r} |phi|_{m,p}: the data-dependent interpolation bound.
inline double bh_bound(double h_max, double h_min, int m, int r, double c1, double sobolev_norm) {
    if (!(m > r && r >= 0)) throw ValidationError("bh_bound: need m > r >= 0");
    if (!(c1 > 0.0)) throw ValidationError("bh_bound: C1 must be > 0");
    if (!(h_min > 0.0)) throw ValidationError("bh_bound: h_min = 0 makes the bound vacuous");
    return c1 * std::pow(h_max, m) * std::pow(h_min, -r) * sobolev_norm;
}

struct ApproxReport {
    std::size_t cells = 0;
    double h_max = 0.0;
    double h_min = 0.0;
    double lp_error = 0.0;
    double p = 2.0;
    double bound_value = 0.0;
    double order_estimate = std::numeric_limits<double>::quiet_NaN();  // slope from the previous mesh
};

struct OrderSweepResult {
    std::vector<ApproxReport> reports;
    std::optional<double> fitted_order;  // nullopt when every error is at rounding level
    bool exact = false;
    double c1 = 0.0;
    int m = 2;
    int r = 0;
};

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

struct SweepSettings {
    double p = 2.0;
    int m = 2;
    int r = 0;
    double sobolev_norm = 1.0;
    QuadratureRule quadrature{};
};

/// Errors below this count as rounding noise for the "exact" sentinel.
inline constexpr double kExactErrorLevel = 1e-12;

/// Interpolation error on uniform meshes of a box (1-D: `cells` segments;
/// 2-D: structured `cells` x `cells` grid, two triangles per cell). C1 is
/// calibrated on the coarsest mesh and the bound evaluated on every mesh.
inline OrderSweepResult order_sweep(const ScalarField& g, const Box& domain, const std::vector<std::size_t>& cells,
                                    const SweepSettings& settings = {}) {
    if (cells.size() < 3) throw ValidationError("order_sweep needs at least 3 mesh sizes");
    if (domain.dim() != 1 && domain.dim() != 2) throw ValidationError("order_sweep supports d = 1 or d = 2");
    OrderSweepResult out;
    out.m = settings.m;
    out.r = settings.r;
    for (std::size_t n : cells) {
        SimplexMesh mesh = domain.dim() == 1
                               ? uniform_mesh_1d(domain.lo[0], domain.hi[0], n)
                               : structured_mesh_2d(domain.lo[0], domain.hi[0], domain.lo[1], domain.hi[1], n);
        ApproxReport rep;
        rep.cells = n;
        rep.p = settings.p;
        rep.h_max = h_max_simplex(mesh);
        rep.h_min = mesh_h_min(mesh);
        rep.lp_error = lp_error(make_interpolant(std::move(mesh), g), g, settings.p, settings.quadrature);
        out.reports.push_back(rep);
    }

    std::size_t coarsest = 0;
    for (std::size_t i = 1; i < out.reports.size(); ++i)
        if (out.reports[i].h_max > out.reports[coarsest].h_max) coarsest = i;
    const auto& c = out.reports[coarsest];

    std::vector<double> hs, es;
    bool all_tiny = true;
    for (const auto& r : out.reports) {
        hs.push_back(r.h_max);
        es.push_back(r.lp_error);
        all_tiny = all_tiny && r.lp_error <= kExactErrorLevel;
    }
    if (all_tiny) {
        out.exact = true;
        out.c1 = 0.0;
        for (auto& r : out.reports) r.bound_value = 0.0;
        return out;
    }
    out.c1 = c.lp_error / (std::pow(c.h_max, settings.m) * std::pow(c.h_min, -settings.r) * settings.sobolev_norm);
    for (std::size_t i = 0; i < out.reports.size(); ++i) {
        auto& r = out.reports[i];
        r.bound_value = bh_bound(r.h_max, r.h_min, settings.m, settings.r, out.c1, settings.sobolev_norm);
        if (i > 0)
            r.order_estimate = std::log(out.reports[i - 1].lp_error / r.lp_error) /
                               std::log(out.reports[i - 1].h_max / r.h_max);
    }
    out.fitted_order = loglog_slope(hs, es);
    return out;
}

/// Ground-truth fields available to the CLI, with their default domains.
struct NamedField {
    ScalarField g;
    Box domain;
};

inline NamedField named_field(std::string_view name, std::size_t dim) {
    if (dim != 1 && dim != 2) throw ValidationError("ground-truth fields are defined for dim 1 or 2");
    if (name == "sin") {
        Box box{std::vector<double>(dim, 0.0), std::vector<double>(dim, std::numbers::pi)};
        return {[](std::span<const double> x) {
                    double v = 1.0;
                    for (double c : x) v *= std::sin(c);
                    return v;
                },
                box};
    }
    if (name == "quad") {
        return {[](std::span<const double> x) {
                    double v = 0.0;
                    for (double c : x) v += c * c;
                    return v;
                },
                Box::unit(dim)};
    }
    if (name == "gauss") {
        return {[](std::span<const double> x) {
                    double v = 0.0;
                    for (double c : x) v += (c - 0.5) * (c - 0.5);
                    return std::exp(-4.0 * v);
                },
                Box::unit(dim)};
    }
    throw ValidationError("unknown ground-truth function '" + std::string(name) + "'");
}

}  // namespace uniformity
