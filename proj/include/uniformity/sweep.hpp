#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "error.hpp"
#include "geometry.hpp"
#include "network.hpp"
#include "selection.hpp"
#include "trainer.hpp"

namespace uniformity {

/// Base data for the h_min sweep: inputs, targets and the pair of rows that
/// is contracted towards its midpoint.
struct PlantedPairData {
    Samples base;
    std::size_t first = 0;
    std::size_t second = 1;
};

/// Eight points in [0,1]^2: six spread around the border plus a horizontal
/// pair centred at (0.5, 0.5) whose members carry opposite targets. Targets
/// are fixed per point and do not follow the geometry, so contracting the
/// pair makes the fit strictly harder.
inline PlantedPairData planted_pair_fixture() {
    const double pts[8][2] = {{0.1, 0.1}, {0.9, 0.1}, {0.1, 0.9}, {0.9, 0.9},
                              {0.5, 0.05}, {0.5, 0.95}, {0.25, 0.5}, {0.75, 0.5}};
    const double y[8] = {0.3, -0.2, -0.4, 0.1, 0.2, -0.1, 0.5, -0.5};
    PlantedPairData out{Samples{Matrix(8, 2), Matrix(8, 1)}, 6, 7};
    for (std::size_t i = 0; i < 8; ++i) {
        out.base.x(i, 0) = pts[i][0];
        out.base.x(i, 1) = pts[i][1];
        out.base.y(i, 0) = y[i];
    }
    return out;
}

/// Moves the designated pair symmetrically about its midpoint (along the
/// line joining it) so that the two points end up `distance` apart.
inline Samples plant_pair(const PlantedPairData& data, double distance) {
    if (!(distance >= 0.0)) throw ValidationError("planted distance must be >= 0");
    Samples s = data.base;
    const std::size_t d = s.x.cols();
    std::vector<double> mid(d), dir(d);
    for (std::size_t a = 0; a < d; ++a) {
        mid[a] = 0.5 * (s.x(data.first, a) + s.x(data.second, a));
        dir[a] = s.x(data.second, a) - s.x(data.first, a);
    }
    const double len = norm2(dir);
    if (len == 0.0) throw ValidationError("designated pair is coincident in the base data");
    for (std::size_t a = 0; a < d; ++a) {
        s.x(data.first, a) = mid[a] - 0.5 * distance * dir[a] / len;
        s.x(data.second, a) = mid[a] + 0.5 * distance * dir[a] / len;
    }
    return s;
}

inline EmbeddedDataset to_dataset(const Matrix& x) {
    EmbeddedDataset ds(x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) ds.add(std::to_string(i), x.row(i));
    return ds;
}

struct SweepConfig {
    std::vector<double> grid{0.5, 0.1, 0.02, 0.0};
    NetConfig net = NetConfig::uniform(2, 2, 32, 0.2, 1);
    GdConfig gd{1.0, 20000, std::nullopt, 0, 0, 3};
    std::uint64_t init_seed = 7;
    double tau_fraction = 0.01;  // threshold = tau_fraction * L(theta^0)
    std::size_t window = 3;
};

struct SweepRow {
    double pair_distance = 0.0;
    double h_min = 0.0;
    double mu_low0 = 0.0;
    double loss0 = 0.0;
    double final_loss = 0.0;
    double threshold = 0.0;
    std::optional<std::size_t> steps_to_threshold;
};

/// For every planted distance: rebuild the data, re-initialize with the same
/// seed, run GD, and record mu_low at theta^0 and the steps needed to push
/// the moving-average loss below tau_fraction * L(theta^0).
inline std::vector<SweepRow> sweep_hmin(const PlantedPairData& data, const SweepConfig& cfg) {
    if (cfg.grid.empty()) throw ValidationError("sweep grid is empty");
    std::vector<SweepRow> rows;
    for (double dist : cfg.grid) {
        const Samples s = plant_pair(data, dist);
        const ResidualNetParams theta0 = init_params(cfg.net, cfg.init_seed);
        GdConfig gd = cfg.gd;
        gd.seed = cfg.init_seed;
        gd.mu_low_every = 0;
        const TrainTrace trace = gd_run(theta0, cfg.net, s, gd);
        if (trace.steps.empty()) throw NumericalError("sweep: training produced no steps");

        SweepRow row;
        row.pair_distance = dist;
        row.h_min = h_min(to_dataset(s.x));
        row.mu_low0 = mu_low(theta0, cfg.net, s.x);
        row.loss0 = trace.steps.front().loss;
        row.final_loss = trace.steps.back().loss;
        row.threshold = cfg.tau_fraction * row.loss0;
        row.steps_to_threshold = steps_to_threshold(trace, row.threshold, cfg.window);
        rows.push_back(row);
    }
    return rows;
}

inline std::vector<SweepRow> sweep_hmin(const SweepConfig& cfg) { return sweep_hmin(planted_pair_fixture(), cfg); }

/// One cell of a strategy x threshold table.
struct ThresholdCell {
    Strategy strategy;
    double threshold;
    std::optional<std::size_t> steps;
};

struct StrategyRun {
    Strategy strategy;
    Selection selection;
    double h_min = 0.0;
    double mu_low0 = 0.0;
    TrainTrace trace;
};

/// Selects k points from `pool` with each strategy, trains the same network
/// from the same initialization on each subset (targets from `targets`,
/// one row per pool point) and tabulates steps to each loss threshold.
inline std::vector<StrategyRun> threshold_study(const EmbeddedDataset& pool, const Matrix& targets,
                                                const std::vector<Strategy>& strategies, std::size_t k,
                                                std::uint64_t selection_seed, Metric metric, const NetConfig& net,
                                                const GdConfig& gd, std::uint64_t init_seed) {
    if (targets.rows() != pool.size()) throw ValidationError("threshold_study: one target row per pool point");
    std::vector<StrategyRun> runs;
    for (Strategy st : strategies) {
        StrategyRun run{st, select(st, pool, k, selection_seed, metric), 0.0, 0.0, {}};
        Samples s{Matrix(k, pool.dim()), Matrix(k, targets.cols())};
        for (std::size_t r = 0; r < k; ++r) {
            const std::size_t i = run.selection.indices[r];
            for (std::size_t a = 0; a < pool.dim(); ++a) s.x(r, a) = pool.point(i)[a];
            for (std::size_t a = 0; a < targets.cols(); ++a) s.y(r, a) = targets(i, a);
        }
        run.h_min = k >= 2 ? h_min(pool.subset(run.selection.indices)) : 0.0;
        const ResidualNetParams theta0 = init_params(net, init_seed);
        run.mu_low0 = mu_low(theta0, net, s.x);
        run.trace = gd_run(theta0, net, s, gd);
        runs.push_back(std::move(run));
    }
    return runs;
}

inline std::vector<ThresholdCell> threshold_table(const std::vector<StrategyRun>& runs,
                                                  const std::vector<double>& thresholds, std::size_t window) {
    std::vector<ThresholdCell> cells;
    for (const auto& r : runs)
        for (double t : thresholds) cells.push_back({r.strategy, t, steps_to_threshold(r.trace, t, window)});
    return cells;
}

}  // namespace uniformity
