#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace uniformity {

enum class Strategy { greedy_maxmin, random, min_distance, mixed, head };

inline std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::greedy_maxmin: return "maxmin";
        case Strategy::random: return "random";
        case Strategy::min_distance: return "mindist";
        case Strategy::mixed: return "mixed";
        case Strategy::head: return "head";
    }
    return "?";
}

inline Strategy parse_strategy(std::string_view s) {
    if (s == "maxmin" || s == "greedy_maxmin") return Strategy::greedy_maxmin;
    if (s == "random") return Strategy::random;
    if (s == "mindist" || s == "min_distance") return Strategy::min_distance;
    if (s == "mixed") return Strategy::mixed;
    if (s == "head") return Strategy::head;
    throw ValidationError("unknown strategy '" + std::string(s) + "'");
}

/// A chosen subset of dataset indices.
///
/// `step_min_dist[j]` is the selection criterion value attained by pick
/// j + 1 (pick 0 has none): for greedy max-min the maximized min-distance,
/// for min-distance the minimized one. Random and head leave it empty.
struct Selection {
    Strategy strategy = Strategy::greedy_maxmin;
    std::vector<std::size_t> indices;
    Metric metric = Metric::euclidean;
    std::uint64_t seed = 0;
    std::vector<double> step_min_dist;
};

namespace detail {

inline void check_k(std::size_t k, std::size_t n, std::size_t min_k) {
    if (k < min_k) throw ValidationError("k=" + std::to_string(k) + " must be >= " + std::to_string(min_k));
    if (k > n) throw ValidationError("k=" + std::to_string(k) + " exceeds dataset size " + std::to_string(n));
}

// Index of the extreme value among unselected candidates; ties go to the
// smallest index. Per-candidate values are already materialized, so the
// scan order alone fixes the result.
template <typename Better>
std::size_t pick_extreme(const std::vector<double>& value, const std::vector<char>& taken, Better better) {
    std::size_t best = value.size();
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (taken[i]) continue;
        if (best == value.size() || better(value[i], value[best])) best = i;
    }
    return best;
}

}  // namespace detail

/// Farthest-point selection with an explicit first index.
inline Selection greedy_maxmin_from(const EmbeddedDataset& ds, std::size_t k, std::size_t start, Metric metric,
                                    std::uint64_t seed = 0) {
    const std::size_t n = ds.size();
    detail::check_k(k, n, 1);
    if (start >= n) throw ValidationError("start index out of range");
    const DistanceFn dist(ds, metric);

    Selection sel{Strategy::greedy_maxmin, {start}, metric, seed, {}};
    sel.indices.reserve(k);
    std::vector<char> taken(n, 0);
    taken[start] = 1;
    // nearest[i] = distance from i to the closest selected point
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

    std::size_t last = start;
    while (sel.indices.size() < k) {
        parallel_for(n, [&](std::size_t i) {
            if (!taken[i]) nearest[i] = std::min(nearest[i], dist(i, last));
        });
        const std::size_t next = detail::pick_extreme(nearest, taken, [](double a, double b) { return a > b; });
        const double achieved = nearest[next];
        if (!sel.step_min_dist.empty() && achieved > sel.step_min_dist.back())
            throw NumericalError("greedy max-min produced an increasing min-distance trace");
        sel.step_min_dist.push_back(achieved);
        sel.indices.push_back(next);
        taken[next] = 1;
        last = next;
    }
    return sel;
}

/// Farthest-point (greedy max-min) selection. The first index is drawn
/// uniformly with the seeded generator; each later pick maximizes its
/// distance to the nearest already-selected point.
inline Selection greedy_maxmin(const EmbeddedDataset& ds, std::size_t k, std::uint64_t seed, Metric metric) {
    detail::check_k(k, ds.size(), 1);
    Rng rng(seed);
    const auto start = static_cast<std::size_t>(rng.uniform_index(ds.size()));
    return greedy_maxmin_from(ds, k, start, metric, seed);
}

/// Uniform sample without replacement: first k entries of a seeded
/// Fisher-Yates shuffle.
inline Selection random_subset(const EmbeddedDataset& ds, std::size_t k, std::uint64_t seed) {
    const std::size_t n = ds.size();
    detail::check_k(k, n, 1);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(n - i));
        std::swap(perm[i], perm[j]);
    }
    perm.resize(k);
    return Selection{Strategy::random, std::move(perm), ds.metric_hint(), seed, {}};
}

/// The first k points in dataset order.
inline Selection head_subset(const EmbeddedDataset& ds, std::size_t k) {
    detail::check_k(k, ds.size(), 1);
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return Selection{Strategy::head, std::move(idx), ds.metric_hint(), 0, {}};
}

namespace detail {

// Greedy min-distance order over `pool` (dataset indices), taking `count`
// points: closest pair first (lexicographic tie-break on pool positions),
// then repeatedly the point nearest to the selected set.
inline void min_distance_order(const DistanceFn& dist, const std::vector<std::size_t>& pool, std::size_t count,
                               std::vector<std::size_t>& out, std::vector<double>& trace) {
    const std::size_t m = pool.size();
    if (count == 0) return;
    if (m == 1) {
        out.push_back(pool[0]);
        return;
    }
    std::size_t bi = 0, bj = 1;
    double best = dist(pool[0], pool[1]);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
            const double h = dist(pool[i], pool[j]);
            if (h < best) {
                best = h;
                bi = i;
                bj = j;
            }
        }
    std::vector<char> taken(m, 0);
    std::vector<double> nearest(m, std::numeric_limits<double>::infinity());
    auto take = [&](std::size_t p) {
        taken[p] = 1;
        out.push_back(pool[p]);
        for (std::size_t q = 0; q < m; ++q)
            if (!taken[q]) nearest[q] = std::min(nearest[q], dist(pool[q], pool[p]));
    };
    take(bi);
    if (count == 1) return;
    trace.push_back(best);
    take(bj);
    for (std::size_t c = 2; c < count; ++c) {
        const std::size_t p = pick_extreme(nearest, taken, [](double a, double b) { return a < b; });
        trace.push_back(nearest[p]);
        take(p);
    }
}

}  // namespace detail

/// Greedy dual of max-min: seeds with the closest pair, then keeps adding
/// the point nearest to the selected set.
inline Selection min_distance_subset(const EmbeddedDataset& ds, std::size_t k, Metric metric) {
    detail::check_k(k, ds.size(), 2);
    const DistanceFn dist(ds, metric);
    std::vector<std::size_t> pool(ds.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    Selection sel{Strategy::min_distance, {}, metric, 0, {}};
    detail::min_distance_order(dist, pool, k, sel.indices, sel.step_min_dist);
    return sel;
}

/// ceil(k/2) points sampled uniformly, the remaining floor(k/2) chosen by the
/// min-distance rule among the points not yet taken.
inline Selection mixed_subset(const EmbeddedDataset& ds, std::size_t k, std::uint64_t seed, Metric metric) {
    detail::check_k(k, ds.size(), 2);
    const DistanceFn dist(ds, metric);
    const std::size_t n_random = (k + 1) / 2;
    Selection sel = random_subset(ds, n_random, seed);
    sel.strategy = Strategy::mixed;
    sel.metric = metric;

    std::vector<char> taken(ds.size(), 0);
    for (std::size_t i : sel.indices) taken[i] = 1;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (!taken[i]) rest.push_back(i);
    detail::min_distance_order(dist, rest, k - n_random, sel.indices, sel.step_min_dist);
    return sel;
}

inline Selection select(Strategy strategy, const EmbeddedDataset& ds, std::size_t k, std::uint64_t seed,
                        Metric metric) {
    switch (strategy) {
        case Strategy::greedy_maxmin: return greedy_maxmin(ds, k, seed, metric);
        case Strategy::random: {
            auto s = random_subset(ds, k, seed);
            s.metric = metric;
            return s;
        }
        case Strategy::min_distance: return min_distance_subset(ds, k, metric);
        case Strategy::mixed: return mixed_subset(ds, k, seed, metric);
        case Strategy::head: {
            auto s = head_subset(ds, k);
            s.metric = metric;
            s.seed = seed;
            return s;
        }
    }
    throw ValidationError("unknown strategy");
}

}  // namespace uniformity
