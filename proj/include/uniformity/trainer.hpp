#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "linalg.hpp"
#include "network.hpp"
#include "rng.hpp"

namespace uniformity {

/// Full-batch gradient descent settings.
struct GdConfig {
    double eta = 0.1;
    std::size_t max_steps = 100;
    std::optional<double> stop_loss;
    std::size_t mu_low_every = 1;  // cadence of the frame-bound eigen-solve; 0 disables it
    std::uint64_t seed = 0;
    /// Retry with block_scale * (1 + 1e-3) while mu_low at theta^0 is below
    /// 1e-12 (at most this many times).
    std::size_t degenerate_retries = 3;

    void validate() const {
        if (!(eta >= 0.0) || !std::isfinite(eta)) throw ValidationError("eta must be finite and >= 0");
    }
};

struct TraceStep {
    std::size_t k = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    std::optional<double> mu_low;
    std::optional<double> grad_lb_residual;      // |grad|^2 - (mu_low / N) L
    std::optional<double> conv_factor_residual;  // factor * L_k - L_{k+1}
    std::optional<double> descent_S_estimate;    // local smoothness L_hat_k
};

/// Per-step record of a GD run plus a config echo.
struct TrainTrace {
    std::vector<TraceStep> steps;
    double eta = 0.0;
    std::size_t max_steps = 0;
    std::uint64_t seed = 0;
    std::size_t n_points = 0;
    double block_scale = 1.0;
    std::optional<double> l_hat;  // running max of the smoothness estimates
    bool aborted = false;
    std::string abort_reason;
    std::vector<double> final_theta;

    std::vector<double> losses() const {
        std::vector<double> out;
        out.reserve(steps.size());
        for (const auto& s : steps) out.push_back(s.loss);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Trace probes
// ---------------------------------------------------------------------------

/// |grad L|^2 - (mu_low / N) L. Non-negative up to rounding whenever mu_low is
/// the smallest eigenvalue of J J^T at the same theta.
inline double check_grad_lower_bound(double grad_norm, double mu_low, double loss, std::size_t n) {
    return grad_norm * grad_norm - mu_low / static_cast<double>(n) * loss;
}

/// Tolerance the gradient lower-bound residual must clear.
inline double grad_lower_bound_tolerance(double grad_norm) {
    return -1e-9 * std::max(1.0, grad_norm * grad_norm);
}

struct SmoothnessEstimate {
    std::vector<std::optional<double>> per_step;  // L_hat_k for the step k -> k+1
    std::optional<double> running_max;
};

/// Local smoothness obtained by inverting the descent inequality on each
/// step: L_hat_k = 2 (L_{k+1} - L_k + eta |g_k|^2) / (eta^2 |g_k|^2), floored at
/// zero. Steps with |g_k| <= 1e-14 (or eta = 0) give no estimate.
inline SmoothnessEstimate descent_smoothness_estimate(const TrainTrace& trace) {
    SmoothnessEstimate out;
    out.per_step.assign(trace.steps.size(), std::nullopt);
    const double eta = trace.eta;
    for (std::size_t i = 0; i + 1 < trace.steps.size(); ++i) {
        const auto& s = trace.steps[i];
        if (!(s.grad_norm > 1e-14) || !(eta > 0.0)) continue;
        const double g2 = s.grad_norm * s.grad_norm;
        const double l = 2.0 * (trace.steps[i + 1].loss - s.loss + eta * g2) / (eta * eta * g2);
        const double v = std::max(0.0, l);
        out.per_step[i] = v;
        out.running_max = std::max(out.running_max.value_or(0.0), v);
    }
    return out;
}

struct ConvergenceCheck {
    std::size_t k = 0;
    double factor = 1.0;    // 1 - eta (1 - eta L_hat / 2) mu_low_k / N
    double residual = 0.0;  // factor * L_k - L_{k+1}
    bool passed = false;
};

/// Stepwise contraction check L_{k+1} <= (1 - eta (1 - eta L_hat/2) mu_k / N) L_k
/// with 1e-9 relative slack, on every step whose mu_low was recorded.
inline std::vector<ConvergenceCheck> convergence_factor_check(const TrainTrace& trace, double eta, double l_hat) {
    std::vector<ConvergenceCheck> out;
    const auto n = static_cast<double>(std::max<std::size_t>(1, trace.n_points));
    for (std::size_t i = 0; i + 1 < trace.steps.size(); ++i) {
        const auto& s = trace.steps[i];
        if (!s.mu_low) continue;
        ConvergenceCheck c;
        c.k = s.k;
        c.factor = 1.0 - eta * (1.0 - eta * l_hat / 2.0) * (*s.mu_low) / n;
        c.residual = c.factor * s.loss - trace.steps[i + 1].loss;
        c.passed = c.residual >= -1e-9 * std::max(s.loss, std::numeric_limits<double>::min());
        out.push_back(c);
    }
    return out;
}

/// First step k at which the mean of the `window` losses ending at k is
/// <= tau. Only full windows count, so the earliest answer is window - 1.
inline std::optional<std::size_t> steps_to_threshold(std::span<const double> losses, double tau, std::size_t window) {
    if (window < 1) throw ValidationError("steps_to_threshold: window must be >= 1");
    for (std::size_t k = window - 1; k < losses.size(); ++k) {
        double w = 0.0;
        for (std::size_t j = k + 1 - window; j <= k; ++j) w += losses[j];
        if (w / static_cast<double>(window) <= tau) return k;
    }
    return std::nullopt;
}

inline std::optional<std::size_t> steps_to_threshold(const TrainTrace& trace, double tau, std::size_t window) {
    const auto losses = trace.losses();
    const auto idx = steps_to_threshold(std::span<const double>(losses), tau, window);
    if (!idx) return std::nullopt;
    return trace.steps[*idx].k;
}

// ---------------------------------------------------------------------------
// Generic driver
// ---------------------------------------------------------------------------

/// Fills the derived trace columns (smoothness estimate, gradient lower
/// bound residual, contraction residual) from the raw loss/grad/mu record.
inline void annotate_trace(TrainTrace& trace) {
    const SmoothnessEstimate est = descent_smoothness_estimate(trace);
    trace.l_hat = est.running_max;
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
        auto& s = trace.steps[i];
        s.descent_S_estimate = est.per_step[i];
        if (s.mu_low) s.grad_lb_residual = check_grad_lower_bound(s.grad_norm, *s.mu_low, s.loss, trace.n_points);
    }
    if (trace.l_hat) {
        for (const auto& c : convergence_factor_check(trace, trace.eta, *trace.l_hat)) {
            for (auto& s : trace.steps)
                if (s.k == c.k) s.conv_factor_residual = c.residual;
        }
    }
}

/// theta^{k+1} = theta^k - eta grad L(theta^k) on an arbitrary objective.
///
/// `objective(theta)` returns a LossAndGradient; `frame_bound(theta)` returns
/// mu_low at theta and is called every `gd.mu_low_every` steps. A record is
/// written for every iterate theta^0 .. theta^K; the run stops after
/// max_steps updates or once the loss is <= stop_loss. A non-finite loss
/// ends the run with `aborted` set and the trace up to the failure.
template <typename Objective, typename FrameBound>
TrainTrace gd_run_objective(std::vector<double> theta, Objective&& objective, FrameBound&& frame_bound,
                            const GdConfig& gd, std::size_t n_points) {
    gd.validate();
    TrainTrace trace;
    trace.eta = gd.eta;
    trace.max_steps = gd.max_steps;
    trace.seed = gd.seed;
    trace.n_points = n_points;
    for (std::size_t k = 0;; ++k) {
        LossAndGradient lg;
        try {
            lg = objective(theta);
        } catch (const NumericalError& e) {
            trace.aborted = true;
            trace.abort_reason = e.what();
            break;
        }
        if (!std::isfinite(lg.loss)) {
            trace.aborted = true;
            trace.abort_reason = "non-finite loss at step " + std::to_string(k);
            break;
        }
        TraceStep s;
        s.k = k;
        s.loss = lg.loss;
        s.grad_norm = norm2(lg.grad);
        if (gd.mu_low_every > 0 && k % gd.mu_low_every == 0) s.mu_low = frame_bound(theta);
        trace.steps.push_back(s);
        if (k >= gd.max_steps || (gd.stop_loss && lg.loss <= *gd.stop_loss)) break;
        for (std::size_t q = 0; q < theta.size(); ++q) theta[q] -= gd.eta * lg.grad[q];
    }
    trace.final_theta = std::move(theta);
    annotate_trace(trace);
    return trace;
}

// ---------------------------------------------------------------------------
// Network-specific entry points
// ---------------------------------------------------------------------------

/// Frame lower bound mu_low = lambda_min(J J^T) of the stacked parameter
/// Jacobian. Eigenvalues within 1e-12 * max(1, lambda_max) of zero are
/// rounding noise of a singular frame operator and are returned as 0.
inline double mu_low(const ResidualNetParams& params, const NetConfig& cfg, const Matrix& x) {
    const Matrix j = jacobian_stack(params, cfg, x);
    const SymmetricEigen eig = jacobi_eigen(gram_rows(j));
    const double lo = eig.values.back();
    if (std::abs(lo) <= 1e-12 * std::max(1.0, eig.values.front())) return 0.0;
    return lo;
}

/// Whether dim(theta) >= N * out_dim, the precondition for mu_low > 0.
inline bool frame_bound_can_be_positive(const NetConfig& cfg, std::size_t n) {
    return cfg.parameter_count() >= n * cfg.out_dim;
}

/// Full-batch GD on the squared loss of the residual network. If mu_low at
/// theta^0 is below 1e-12 the block scale is nudged by (1 + 1e-3) and the
/// check repeated (up to gd.degenerate_retries times); the scale actually
/// used is echoed in the trace.
inline TrainTrace gd_run(const ResidualNetParams& params0, NetConfig cfg, const Samples& data, const GdConfig& gd) {
    cfg.validate();
    if (data.size() == 0) throw ValidationError("gd_run: empty dataset");
    if (gd.mu_low_every > 0) {
        for (std::size_t r = 0; r < gd.degenerate_retries && mu_low(params0, cfg, data.x) < 1e-12; ++r)
            cfg.block_scale *= 1.0 + 1e-3;
    }
    ResidualNetParams work = params0;
    auto objective = [&](const std::vector<double>& theta) {
        work.theta = theta;
        return grad_loss(work, cfg, data);
    };
    auto frame = [&](const std::vector<double>& theta) {
        work.theta = theta;
        return mu_low(work, cfg, data.x);
    };
    TrainTrace t = gd_run_objective(params0.theta, objective, frame, gd, data.size());
    t.block_scale = cfg.block_scale;
    return t;
}

/// Largest step-size estimate 2 / L_hat seen on a trace, if any.
inline std::optional<double> stable_step_bound(const TrainTrace& trace) {
    if (!trace.l_hat || *trace.l_hat <= 0.0) return std::nullopt;
    return 2.0 / *trace.l_hat;
}

// ---------------------------------------------------------------------------
// Dissipativity
// ---------------------------------------------------------------------------

/// Gradient-norm floor below which dissipativity samples are discarded.
inline constexpr double kDissipativityGradFloor = 1e-8;

/// Empirical relaxed-dissipativity constant around a stationary point:
///   rho_hat = max_y  -grad f(y)^T (y - x*) / |grad f(y)|^2
/// over `samples` points y = x* + r u, u a uniform random direction and r
/// uniform on [0, radius]. Samples with |grad f(y)| <= 1e-8 are skipped.
template <typename Objective>
double dissipativity_rho(Objective&& objective, std::span<const double> theta_star, double radius,
                         std::size_t samples, std::uint64_t seed) {
    if (samples < 1) throw ValidationError("dissipativity_rho: samples must be >= 1");
    if (!(radius >= 0.0)) throw ValidationError("dissipativity_rho: radius must be >= 0");
    const std::size_t p = theta_star.size();
    Rng rng(seed);
    std::vector<double> y(p), dir(p);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        double nd = 0.0;
        do {
            for (double& v : dir) v = rng.normal();
            nd = norm2(dir);
        } while (nd == 0.0);
        const double r = radius * rng.uniform();
        for (std::size_t q = 0; q < p; ++q) y[q] = theta_star[q] + r * dir[q] / nd;
        const LossAndGradient lg = objective(y);
        const double g2 = dot(lg.grad, lg.grad);
        if (std::sqrt(g2) <= kDissipativityGradFloor) continue;
        double inner = 0.0;
        for (std::size_t q = 0; q < p; ++q) inner += lg.grad[q] * (y[q] - theta_star[q]);
        best = std::max(best, -inner / g2);
        ++used;
    }
    if (used == 0) throw NumericalError("gradient vanishes on sample set");
    return best;
}

inline double dissipativity_rho(const NetConfig& cfg, const Samples& data, const ResidualNetParams& theta_star,
                                double radius, std::size_t samples, std::uint64_t seed) {
    ResidualNetParams work = theta_star;
    auto objective = [&](std::span<const double> theta) {
        work.theta.assign(theta.begin(), theta.end());
        return grad_loss(work, cfg, data);
    };
    return dissipativity_rho(objective, theta_star.theta, radius, samples, seed);
}

struct StationaryPoint {
    ResidualNetParams params;
    double grad_norm = 0.0;
    double loss = 0.0;
    std::size_t steps = 0;
    bool converged = false;
};

/// Runs GD until |grad L| <= tol (the convergence target eps_L) or max_steps.
inline StationaryPoint find_stationary_point(const ResidualNetParams& params0, const NetConfig& cfg,
                                             const Samples& data, double eta, std::size_t max_steps,
                                             double tol = 1e-8) {
    StationaryPoint out{params0, 0.0, 0.0, 0, false};
    for (std::size_t k = 0;; ++k) {
        const LossAndGradient lg = grad_loss(out.params, cfg, data);
        out.grad_norm = norm2(lg.grad);
        out.loss = lg.loss;
        out.steps = k;
        if (out.grad_norm <= tol) {
            out.converged = true;
            break;
        }
        if (k >= max_steps) break;
        for (std::size_t q = 0; q < lg.grad.size(); ++q) out.params.theta[q] -= eta * lg.grad[q];
    }
    return out;
}

}  // namespace uniformity
