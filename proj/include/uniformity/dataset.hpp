#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "error.hpp"
#include "linalg.hpp"

namespace uniformity {

enum class Metric { euclidean, cosine };

inline std::string_view to_string(Metric m) {
    return m == Metric::euclidean ? "euclidean" : "cosine";
}

inline Metric parse_metric(std::string_view s) {
    if (s == "euclidean") return Metric::euclidean;
    if (s == "cosine") return Metric::cosine;
    throw ValidationError("unknown metric '" + std::string(s) + "'");
}

/// The universe X = (x_1, ..., x_N): ordered (id, vector) pairs of one
/// dimension. Coordinates are stored row-major in one buffer.
///
/// Invariants enforced on construction and on every append: dim >= 1,
/// unique ids, every component finite.
class EmbeddedDataset {
public:
    explicit EmbeddedDataset(std::size_t dim, Metric metric_hint = Metric::euclidean)
        : dim_(dim), metric_hint_(metric_hint) {
        if (dim == 0) throw ValidationError("dataset dimension must be >= 1");
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }
    Metric metric_hint() const noexcept { return metric_hint_; }
    void set_metric_hint(Metric m) noexcept { metric_hint_ = m; }

    void add(std::string id, std::span<const double> v) {
        if (v.size() != dim_)
            throw ValidationError("point '" + id + "' has length " + std::to_string(v.size()) +
                                  ", expected " + std::to_string(dim_));
        for (double x : v)
            if (!std::isfinite(x)) throw ValidationError("point '" + id + "' has a non-finite component");
        if (!seen_.insert(id).second) throw ValidationError("duplicate id '" + id + "'");
        ids_.push_back(std::move(id));
        coords_.insert(coords_.end(), v.begin(), v.end());
    }

    const std::string& id(std::size_t i) const { return ids_.at(i); }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

    std::span<const double> point(std::size_t i) const {
        return {coords_.data() + i * dim_, dim_};
    }

    std::span<const double> coords() const noexcept { return coords_; }

    /// Dataset restricted to `indices`, in that order.
    EmbeddedDataset subset(std::span<const std::size_t> indices) const {
        EmbeddedDataset out(dim_, metric_hint_);
        for (std::size_t i : indices) {
            if (i >= size()) throw ValidationError("subset index out of range");
            out.add(ids_[i], point(i));
        }
        return out;
    }

    bool operator==(const EmbeddedDataset& o) const {
        return dim_ == o.dim_ && ids_ == o.ids_ && coords_ == o.coords_;
    }

private:
    std::size_t dim_;
    Metric metric_hint_;
    std::vector<std::string> ids_;
    std::vector<double> coords_;
    std::unordered_set<std::string> seen_;
};

/// Builds a dataset with ids "0", "1", ... from row-major coordinates.
inline EmbeddedDataset make_dataset(std::size_t dim, std::span<const double> coords) {
    if (dim == 0 || coords.size() % dim != 0) throw ValidationError("coordinate buffer not a multiple of dim");
    EmbeddedDataset ds(dim);
    for (std::size_t i = 0; i * dim < coords.size(); ++i)
        ds.add(std::to_string(i), coords.subspan(i * dim, dim));
    return ds;
}

inline EmbeddedDataset make_dataset(std::size_t dim, const std::vector<double>& coords) {
    return make_dataset(dim, std::span<const double>(coords));
}

/// Pairwise distance under a metric. Cosine distance is 1 - cos(angle),
/// clamped at zero; norms are passed in so callers can precompute them.
inline double metric_distance(Metric m, std::span<const double> a, std::span<const double> b,
                              double norm_a = 0.0, double norm_b = 0.0) {
    if (m == Metric::euclidean) return std::sqrt(squared_distance(a, b));
    const double c = dot(a, b) / (norm_a * norm_b);
    return std::max(0.0, 1.0 - c);
}

/// Norms for cosine distance; throws naming the first zero vector.
inline std::vector<double> cosine_norms(const EmbeddedDataset& ds) {
    std::vector<double> norms(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        norms[i] = norm2(ds.point(i));
        if (norms[i] == 0.0)
            throw ValidationError("cosine metric undefined for zero vector '" + ds.id(i) + "'");
    }
    return norms;
}

/// Distance oracle bound to a dataset and metric.
class DistanceFn {
public:
    DistanceFn(const EmbeddedDataset& ds, Metric metric) : ds_(&ds), metric_(metric) {
        if (metric == Metric::cosine) norms_ = cosine_norms(ds);
    }

    double operator()(std::size_t i, std::size_t j) const {
        if (metric_ == Metric::euclidean) return metric_distance(metric_, ds_->point(i), ds_->point(j));
        return metric_distance(metric_, ds_->point(i), ds_->point(j), norms_[i], norms_[j]);
    }

    Metric metric() const noexcept { return metric_; }

private:
    const EmbeddedDataset* ds_;
    Metric metric_;
    std::vector<double> norms_;
};

}  // namespace uniformity
