#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "box.hpp"
#include "dataset.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace uniformity {

/// Volume of the d-dimensional unit ball, pi^{d/2} / Gamma(d/2 + 1).
inline double unit_ball_volume(std::size_t d) {
    if (d < 1) throw ValidationError("unit_ball_volume: d must be >= 1");
    const double h = 0.5 * static_cast<double>(d);
    return std::exp(h * std::log(std::numbers::pi) - std::lgamma(h + 1.0));
}

enum class DensityKind { uniform_box, truncated_gaussian_mixture };

struct GaussianComponent {
    double weight = 1.0;
    std::vector<double> mean;
    double stddev = 1.0;  // isotropic
};

/// Sampling density on a box together with the functionals the h_min bounds
/// consume: pi_max = sup pi, pi_bar_max (threshold defining Omega_max) and
/// pi_min = inf pi over the domain.
struct DensitySpec {
    DensityKind kind = DensityKind::uniform_box;
    Box domain;
    std::vector<GaussianComponent> components;
    double pi_max = 0.0;
    double pi_bar_max = 0.0;
    double pi_min = 0.0;
    double normalizer = 1.0;  // mixture mass inside the domain

    std::size_t dim() const noexcept { return domain.dim(); }

    double density(std::span<const double> x) const {
        if (!domain.contains(x)) return 0.0;
        if (kind == DensityKind::uniform_box) return 1.0 / domain.volume();
        double p = 0.0;
        for (const auto& c : components) {
            double q = c.weight;
            for (std::size_t a = 0; a < dim(); ++a) {
                const double z = (x[a] - c.mean[a]) / c.stddev;
                q *= std::exp(-0.5 * z * z) / (c.stddev * std::sqrt(2.0 * std::numbers::pi));
            }
            p += q;
        }
        return p / normalizer;
    }
};

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline void check_box(const Box& b) {
    if (b.dim() == 0 || b.hi.size() != b.dim()) throw ValidationError("density domain: bad box dimensions");
    for (std::size_t a = 0; a < b.dim(); ++a)
        if (!(b.hi[a] > b.lo[a])) throw ValidationError("density domain: empty extent on axis " + std::to_string(a));
}

// Visits every node of a regular grid with `nodes` points per axis.
template <typename F>
void for_each_grid_node(const Box& box, std::size_t nodes, F&& f) {
    const std::size_t d = box.dim();
    std::vector<std::size_t> idx(d, 0);
    std::vector<double> x(d);
    while (true) {
        for (std::size_t a = 0; a < d; ++a)
            x[a] = box.lo[a] + (box.hi[a] - box.lo[a]) * static_cast<double>(idx[a]) / static_cast<double>(nodes - 1);
        f(std::span<const double>(x));
        std::size_t a = 0;
        while (a < d && ++idx[a] == nodes) idx[a++] = 0;
        if (a == d) break;
    }
}

inline std::size_t grid_nodes_per_axis(std::size_t d) {
    if (d <= 2) return 201;
    return std::max<std::size_t>(3, static_cast<std::size_t>(std::pow(1e6, 1.0 / static_cast<double>(d))));
}

}  // namespace detail

/// Uniform density on a box: all three functionals equal 1/|box|.
inline DensitySpec make_uniform_box(Box domain) {
    detail::check_box(domain);
    DensitySpec s;
    s.kind = DensityKind::uniform_box;
    s.domain = std::move(domain);
    s.pi_max = s.pi_bar_max = s.pi_min = 1.0 / s.domain.volume();
    return s;
}

/// Gaussian mixture truncated to a box. pi_max and pi_min are taken over a
/// regular grid of the box; pi_bar_max = pi_bar_ratio * pi_max.
inline DensitySpec make_truncated_mixture(Box domain, std::vector<GaussianComponent> components,
                                          double pi_bar_ratio = 0.5) {
    detail::check_box(domain);
    if (components.empty()) throw ValidationError("mixture needs at least one component");
    if (!(pi_bar_ratio > 0.0 && pi_bar_ratio <= 1.0)) throw ValidationError("pi_bar_ratio must lie in (0, 1]");
    double wsum = 0.0;
    for (const auto& c : components) {
        if (c.mean.size() != domain.dim()) throw ValidationError("mixture component mean has wrong dimension");
        if (!(c.stddev > 0.0)) throw ValidationError("mixture component stddev must be > 0");
        if (!(c.weight > 0.0)) throw ValidationError("mixture component weight must be > 0");
        wsum += c.weight;
    }
    DensitySpec s;
    s.kind = DensityKind::truncated_gaussian_mixture;
    s.domain = std::move(domain);
    s.components = std::move(components);
    s.normalizer = 0.0;
    for (auto& c : s.components) {
        c.weight /= wsum;
        double mass = c.weight;
        for (std::size_t a = 0; a < s.dim(); ++a)
            mass *= detail::normal_cdf((s.domain.hi[a] - c.mean[a]) / c.stddev) -
                    detail::normal_cdf((s.domain.lo[a] - c.mean[a]) / c.stddev);
        s.normalizer += mass;
    }
    if (!(s.normalizer > 1e-300)) throw ValidationError("mixture has no mass inside the domain");

    double hi = 0.0, lo = std::numeric_limits<double>::infinity();
    detail::for_each_grid_node(s.domain, detail::grid_nodes_per_axis(s.dim()), [&](std::span<const double> x) {
        const double p = s.density(x);
        hi = std::max(hi, p);
        lo = std::min(lo, p);
    });
    s.pi_max = hi;
    s.pi_min = lo;
    s.pi_bar_max = pi_bar_ratio * hi;
    return s;
}

/// Midpoint-rule integral of the density over its domain (d <= 2 only).
inline double density_mass(const DensitySpec& spec, std::size_t cells_per_axis = 400) {
    const std::size_t d = spec.dim();
    if (d > 2) throw ValidationError("density_mass: quadrature implemented for d <= 2");
    std::vector<double> h(d);
    double cell = 1.0;
    for (std::size_t a = 0; a < d; ++a) {
        h[a] = (spec.domain.hi[a] - spec.domain.lo[a]) / static_cast<double>(cells_per_axis);
        cell *= h[a];
    }
    double total = 0.0;
    std::vector<double> x(d);
    const std::size_t count = d == 1 ? cells_per_axis : cells_per_axis * cells_per_axis;
    for (std::size_t c = 0; c < count; ++c) {
        std::size_t rem = c;
        for (std::size_t a = 0; a < d; ++a) {
            x[a] = spec.domain.lo[a] + (static_cast<double>(rem % cells_per_axis) + 0.5) * h[a];
            rem /= cells_per_axis;
        }
        total += spec.density(x);
    }
    return total * cell;
}

/// Checks the spec's invariants: ordering of the functionals, unit mass
/// (to 1e-3, d <= 2) and pi_max >= grid sup within 5%.
inline void validate_density(const DensitySpec& spec) {
    if (!(spec.pi_max > 0.0)) throw ValidationError("pi_max must be > 0");
    if (!(spec.pi_bar_max > 0.0 && spec.pi_bar_max <= spec.pi_max)) throw ValidationError("pi_bar_max must lie in (0, pi_max]");
    if (!(spec.pi_min >= 0.0)) throw ValidationError("pi_min must be >= 0");
    if (spec.dim() <= 2) {
        const double mass = density_mass(spec);
        if (std::abs(mass - 1.0) > 1e-3)
            throw ValidationError("density integrates to " + std::to_string(mass) + ", expected 1");
    }
    double sup = 0.0;
    detail::for_each_grid_node(spec.domain, detail::grid_nodes_per_axis(spec.dim()),
                               [&](std::span<const double> x) { sup = std::max(sup, spec.density(x)); });
    if (spec.pi_max < 0.95 * sup) throw ValidationError("pi_max is below the density's grid supremum");
}

/// Attempt cap for mixture rejection sampling (per run).
inline constexpr std::size_t kRejectionCap = 1'000'000;

/// N i.i.d. draws; ids are "0" .. "N-1".
inline EmbeddedDataset sample(const DensitySpec& spec, std::size_t n, std::uint64_t seed) {
    const std::size_t d = spec.dim();
    EmbeddedDataset ds(d);
    Rng rng(seed);
    std::vector<double> x(d);
    std::size_t attempts = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (spec.kind == DensityKind::uniform_box) {
            for (std::size_t a = 0; a < d; ++a) x[a] = rng.uniform(spec.domain.lo[a], spec.domain.hi[a]);
        } else {
            while (true) {
                if (++attempts > kRejectionCap)
                    throw NumericalError("sample: rejection cap exceeded (mixture mass mostly outside the domain)");
                const double u = rng.uniform();
                std::size_t k = 0;
                double acc = spec.components[0].weight;
                while (u >= acc && k + 1 < spec.components.size()) acc += spec.components[++k].weight;
                const auto& c = spec.components[k];
                for (std::size_t a = 0; a < d; ++a) x[a] = rng.normal(c.mean[a], c.stddev);
                if (spec.domain.contains(x)) break;
            }
        }
        ds.add(std::to_string(i), x);
    }
    return ds;
}

struct HminBounds {
    double lower = 0.0;
    double upper = 0.0;          // biased-distribution branch, scaled by C
    double upper_general = 0.0;  // general-distribution branch (pi_min)
};

/// Closed-form two-sided h_min bounds holding with probability >= 1 - 2 delta:
///   lower         = (2 delta / (pi_max N (N-1) V_d))^{1/d}
///   upper         = C (-log delta / (pi_bar_max (N-1) V_d))^{1/d}
///   upper_general = (-log delta / (pi_min (N-1) V_d))^{1/d}   (+inf if pi_min = 0)
inline HminBounds hmin_theoretical_bounds(const DensitySpec& spec, std::size_t n, double delta, double c) {
    if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
    if (n < 2) throw ValidationError("h_min bounds need N >= 2");
    if (!(c > 0.0)) throw ValidationError("constant C must be > 0");
    const double d = static_cast<double>(spec.dim());
    const double vd = unit_ball_volume(spec.dim());
    const double nn = static_cast<double>(n);
    HminBounds b;
    b.lower = std::pow(2.0 * delta / (spec.pi_max * nn * (nn - 1.0) * vd), 1.0 / d);
    b.upper = c * std::pow(-std::log(delta) / (spec.pi_bar_max * (nn - 1.0) * vd), 1.0 / d);
    b.upper_general = spec.pi_min > 0.0 ? std::pow(-std::log(delta) / (spec.pi_min * (nn - 1.0) * vd), 1.0 / d)
                                        : std::numeric_limits<double>::infinity();
    return b;
}

/// Whether a ball of the given radius fits inside Omega_max = {pi >= pi_bar_max}.
/// Exact for uniform boxes; grid-based for mixtures with d <= 2; unknown
/// otherwise.
inline std::optional<bool> ball_condition_holds(const DensitySpec& spec, double radius) {
    const std::size_t d = spec.dim();
    if (spec.kind == DensityKind::uniform_box) {
        for (std::size_t a = 0; a < d; ++a)
            if (2.0 * radius > spec.domain.hi[a] - spec.domain.lo[a]) return false;
        return true;
    }
    if (d > 2) return std::nullopt;
    const std::size_t nodes = 101;
    std::vector<std::vector<double>> pts;
    std::vector<char> inside;
    detail::for_each_grid_node(spec.domain, nodes, [&](std::span<const double> x) {
        pts.emplace_back(x.begin(), x.end());
        inside.push_back(spec.density(x) >= spec.pi_bar_max);
    });
    for (std::size_t c = 0; c < pts.size(); ++c) {
        if (!inside[c]) continue;
        bool fits = true;
        for (std::size_t a = 0; a < d && fits; ++a)
            fits = pts[c][a] - radius >= spec.domain.lo[a] && pts[c][a] + radius <= spec.domain.hi[a];
        for (std::size_t q = 0; q < pts.size() && fits; ++q)
            if (!inside[q] && squared_distance(pts[c], pts[q]) < radius * radius) fits = false;
        if (fits) return true;
    }
    return false;
}

struct SampleSummary {
    double mean = 0.0, stddev = 0.0, min = 0.0, q05 = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, q95 = 0.0, max = 0.0;
};

/// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw ValidationError("quantile of empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline SampleSummary summarize(std::vector<double> v) {
    if (v.empty()) throw ValidationError("summary of empty sample");
    std::sort(v.begin(), v.end());
    SampleSummary s;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stddev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    s.min = v.front();
    s.max = v.back();
    s.q05 = quantile_sorted(v, 0.05);
    s.q25 = quantile_sorted(v, 0.25);
    s.median = quantile_sorted(v, 0.5);
    s.q75 = quantile_sorted(v, 0.75);
    s.q95 = quantile_sorted(v, 0.95);
    return s;
}

struct BoundReport {
    std::size_t n = 0;
    std::size_t d = 0;
    double delta = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double upper_general = 0.0;
    double constant_c = 0.0;
    std::size_t trials = 0;
    SampleSummary empirical_hmin;
    double coverage_lower = 0.0;  // fraction with h_min >= lower
    double coverage_upper = 0.0;  // fraction with h_min <= upper
    double coverage_joint = 0.0;  // fraction with lower <= h_min <= upper
    std::optional<bool> ball_condition;
    std::vector<double> hmin_samples;
};

/// Draws `trials` independent datasets (trial t seeded with seed + t),
/// computes h_min of each and reports how often the theoretical bounds hold.
/// Reporting only: nothing is asserted here.
inline BoundReport monte_carlo_hmin(const DensitySpec& spec, std::size_t n, std::size_t trials, double delta,
                                    double c, std::uint64_t seed) {
    if (trials < 30) throw ValidationError("monte_carlo_hmin needs at least 30 trials");
    const HminBounds b = hmin_theoretical_bounds(spec, n, delta, c);
    BoundReport r;
    r.n = n;
    r.d = spec.dim();
    r.delta = delta;
    r.lower = b.lower;
    r.upper = b.upper;
    r.upper_general = b.upper_general;
    r.constant_c = c;
    r.trials = trials;
    r.hmin_samples.assign(trials, 0.0);
    parallel_for(trials, [&](std::size_t t) { r.hmin_samples[t] = h_min(sample(spec, n, seed + t)); });

    std::size_t lo_ok = 0, up_ok = 0, both = 0;
    for (double h : r.hmin_samples) {
        const bool a = h >= b.lower, u = h <= b.upper;
        lo_ok += a;
        up_ok += u;
        both += a && u;
    }
    const auto tt = static_cast<double>(trials);
    r.coverage_lower = static_cast<double>(lo_ok) / tt;
    r.coverage_upper = static_cast<double>(up_ok) / tt;
    r.coverage_joint = static_cast<double>(both) / tt;
    r.empirical_hmin = summarize(r.hmin_samples);
    r.ball_condition = ball_condition_holds(spec, b.upper);
    return r;
}

/// Calibrates the universal constant of the upper bound on a pilot grid of
/// uniform unit boxes in dimension d: for each pilot N, the (1 - delta)
/// empirical quantile of h_min / (-log delta / (pi_bar_max (N-1) V_d))^{1/d};
/// C is the largest of these.
inline double calibrate_upper_constant(std::size_t d, double delta, const std::vector<std::size_t>& pilot_ns,
                                       std::size_t trials, std::uint64_t seed) {
    if (pilot_ns.empty()) throw ValidationError("calibration needs at least one pilot N");
    const DensitySpec spec = make_uniform_box(Box::unit(d));
    double c = 0.0;
    for (std::size_t g = 0; g < pilot_ns.size(); ++g) {
        const std::size_t n = pilot_ns[g];
        const double base = hmin_theoretical_bounds(spec, n, delta, 1.0).upper;
        std::vector<double> ratio(trials);
        parallel_for(trials, [&](std::size_t t) {
            ratio[t] = h_min(sample(spec, n, derive_seed(seed, g * trials + t))) / base;
        });
        std::sort(ratio.begin(), ratio.end());
        c = std::max(c, quantile_sorted(ratio, 1.0 - delta));
    }
    return c;
}

}  // namespace uniformity
