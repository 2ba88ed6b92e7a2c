#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "linalg.hpp"

namespace uniformity {

/// Top-k principal axes of a dataset.
struct PcaModel {
    std::vector<double> mean;
    std::vector<std::vector<double>> components;  // k orthonormal rows of length d
    std::vector<double> explained_variance;       // nonincreasing
    double total_variance = 0.0;                  // trace of the covariance

    std::size_t dim() const noexcept { return mean.size(); }
    std::size_t k() const noexcept { return components.size(); }
};

struct ProjectedPoint {
    std::string id;
    std::vector<double> coords;

    bool operator==(const ProjectedPoint&) const = default;
};

/// Sample covariance (divisor N-1) of the dataset.
inline Matrix covariance(const EmbeddedDataset& ds, std::span<const double> mean) {
    const std::size_t d = ds.dim();
    Matrix cov(d, d);
    std::vector<double> c(d);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto x = ds.point(i);
        for (std::size_t a = 0; a < d; ++a) c[a] = x[a] - mean[a];
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = a; b < d; ++b) cov(a, b) += c[a] * c[b];
    }
    const double denom = static_cast<double>(ds.size() - 1);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            cov(a, b) /= denom;
            cov(b, a) = cov(a, b);
        }
    return cov;
}

/// Fits PCA by a Jacobi eigen-solve of the covariance. Each component is
/// signed so that its first nonzero entry is positive.
inline PcaModel pca_fit(const EmbeddedDataset& ds, std::size_t k) {
    const std::size_t n = ds.size();
    const std::size_t d = ds.dim();
    if (n < 2) throw ValidationError("pca_fit needs at least 2 points");
    if (k < 1 || k > std::min(n - 1, d))
        throw ValidationError("pca_fit: k=" + std::to_string(k) + " outside [1, min(N-1, d)] = [1, " +
                              std::to_string(std::min(n - 1, d)) + "]");

    PcaModel model;
    model.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = ds.point(i);
        for (std::size_t a = 0; a < d; ++a) model.mean[a] += x[a];
    }
    for (double& m : model.mean) m /= static_cast<double>(n);

    const Matrix cov = covariance(ds, model.mean);
    for (std::size_t a = 0; a < d; ++a) model.total_variance += cov(a, a);

    const SymmetricEigen eig = jacobi_eigen(cov);
    if (std::all_of(eig.values.begin(), eig.values.end(), [](double v) { return v < 1e-14; }))
        throw NumericalError("degenerate covariance");

    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> v(d);
        double vmax = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            v[a] = eig.vectors(a, j);
            vmax = std::max(vmax, std::abs(v[a]));
        }
        const double nv = norm2(v);
        for (double& x : v) x /= nv;
        for (double x : v) {
            if (std::abs(x) > 1e-12 * vmax) {
                if (x < 0)
                    for (double& y : v) y = -y;
                break;
            }
        }
        model.components.push_back(std::move(v));
        model.explained_variance.push_back(std::max(0.0, eig.values[j]));
    }
    return model;
}

/// y = components^T (x - mean) for every point, in dataset order.
inline std::vector<ProjectedPoint> pca_project(const PcaModel& model, const EmbeddedDataset& ds) {
    if (ds.dim() != model.dim())
        throw ValidationError("pca_project: dataset dimension " + std::to_string(ds.dim()) +
                              " does not match model dimension " + std::to_string(model.dim()));
    std::vector<ProjectedPoint> out;
    out.reserve(ds.size());
    std::vector<double> centered(ds.dim());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto x = ds.point(i);
        for (std::size_t a = 0; a < ds.dim(); ++a) centered[a] = x[a] - model.mean[a];
        ProjectedPoint p{ds.id(i), std::vector<double>(model.k())};
        for (std::size_t j = 0; j < model.k(); ++j) p.coords[j] = dot(model.components[j], centered);
        out.push_back(std::move(p));
    }
    return out;
}

/// Per-coordinate affine map sending the minimum to 0 and the maximum to 1.
inline std::vector<ProjectedPoint> minmax_scale(std::vector<ProjectedPoint> points) {
    if (points.empty()) return points;
    const std::size_t k = points.front().coords.size();
    for (const auto& p : points)
        if (p.coords.size() != k) throw ValidationError("minmax_scale: ragged coordinates");
    for (std::size_t c = 0; c < k; ++c) {
        double lo = points.front().coords[c];
        double hi = lo;
        for (const auto& p : points) {
            lo = std::min(lo, p.coords[c]);
            hi = std::max(hi, p.coords[c]);
        }
        if (!(hi > lo)) throw ValidationError("minmax_scale: coordinate " + std::to_string(c) + " is constant");
        const double span = hi - lo;
        for (auto& p : points) {
            const double v = p.coords[c];
            // pin the extremes so the endpoints are attained exactly
            p.coords[c] = v == lo ? 0.0 : v == hi ? 1.0 : std::clamp((v - lo) / span, 0.0, 1.0);
        }
    }
    return points;
}

}  // namespace uniformity
