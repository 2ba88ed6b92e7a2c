#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "uniformity/trainer.hpp"

using namespace uniformity;

namespace {

Samples random_samples(const NetConfig& cfg, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Samples s{Matrix(n, cfg.d), Matrix(n, cfg.out_dim)};
    for (double& v : s.x.data()) v = rng.uniform(-1, 1);
    for (double& v : s.y.data()) v = rng.normal() * 0.5;
    return s;
}

// L(theta) = lambda/2 |theta|^2
auto quadratic(double lambda) {
    return [lambda](const std::vector<double>& t) {
        LossAndGradient lg{0.5 * lambda * dot(t, t), t};
        for (double& g : lg.grad) g *= lambda;
        return lg;
    };
}

auto no_frame = [](const std::vector<double>&) { return 0.0; };

}  // namespace

TEST(GdRun, StationaryStart) {
    const auto cfg = NetConfig::uniform(2, 1, 6, 1.0, 1);
    const auto p = init_params(cfg, 1);
    auto s = random_samples(cfg, 3, 1);
    for (std::size_t i = 0; i < 3; ++i) s.y(i, 0) = evaluate(p, cfg, s.x.row(i))[0];
    const auto t = gd_run(p, cfg, s, GdConfig{0.1, 10, std::nullopt, 1, 0, 3});
    ASSERT_EQ(t.steps.size(), 11u);
    for (const auto& st : t.steps) EXPECT_EQ(st.loss, 0.0);
    EXPECT_EQ(t.final_theta, p.theta);
    EXPECT_FALSE(t.l_hat);
}

TEST(GdRun, ZeroStepSizeFreezesTrace) {
    const auto cfg = NetConfig::uniform(2, 1, 6, 1.0, 1);
    const auto s = random_samples(cfg, 3, 2);
    const auto t = gd_run(init_params(cfg, 2), cfg, s, GdConfig{0.0, 5, std::nullopt, 1, 0, 3});
    for (const auto& st : t.steps) {
        EXPECT_EQ(st.loss, t.steps[0].loss);
        EXPECT_EQ(st.grad_norm, t.steps[0].grad_norm);
        EXPECT_EQ(st.mu_low, t.steps[0].mu_low);
    }
}

TEST(GdRun, QuadraticDecayAndSmoothnessIdentity) {
    const double lambda = 3.0, eta = 0.2;
    const auto t = gd_run_objective({1.5}, quadratic(lambda), no_frame, GdConfig{eta, 20, std::nullopt, 1, 0, 0}, 1);
    ASSERT_EQ(t.steps.size(), 21u);
    const double factor = (1 - eta * lambda) * (1 - eta * lambda);
    for (std::size_t k = 1; k < t.steps.size(); ++k)
        EXPECT_NEAR(t.steps[k].loss, factor * t.steps[k - 1].loss, 1e-10 * t.steps[k - 1].loss);
    for (std::size_t k = 0; k + 1 < t.steps.size(); ++k) EXPECT_NEAR(*t.steps[k].descent_S_estimate, lambda, 1e-8);
    EXPECT_NEAR(*t.l_hat, lambda, 1e-8);
    EXPECT_NEAR(*stable_step_bound(t), 2.0 / lambda, 1e-8);
}

TEST(GdRun, StopLossAndAbort) {
    const auto t = gd_run_objective({1.0}, quadratic(1.0), no_frame, GdConfig{0.5, 100, 1e-3, 0, 0, 0}, 1);
    EXPECT_LE(t.steps.back().loss, 1e-3);
    EXPECT_GT(t.steps[t.steps.size() - 2].loss, 1e-3);
    const auto bad = gd_run_objective({1.0}, quadratic(1.0), no_frame, GdConfig{1e200, 10, std::nullopt, 0, 0, 0}, 1);
    EXPECT_TRUE(bad.aborted);
    for (const auto& st : bad.steps) EXPECT_TRUE(std::isfinite(st.loss));
    for (std::size_t k = 1; k < bad.steps.size(); ++k) EXPECT_GT(bad.steps[k].k, bad.steps[k - 1].k);
}

TEST(GdRun, MonotoneDescentBelowStableStep) {
    const auto cfg = NetConfig::uniform(2, 2, 8, 1.0, 1);
    const auto s = random_samples(cfg, 6, 3);
    const auto t = gd_run(init_params(cfg, 3), cfg, s, GdConfig{0.05, 300, std::nullopt, 10, 0, 0});
    ASSERT_TRUE(stable_step_bound(t));
    ASSERT_LT(t.eta, *stable_step_bound(t));
    for (std::size_t k = 1; k < t.steps.size(); ++k) EXPECT_LE(t.steps[k].loss, t.steps[k - 1].loss + 1e-12);
    for (const auto& c : convergence_factor_check(t, t.eta, *t.l_hat)) EXPECT_TRUE(c.passed) << "step " << c.k;
}

TEST(MuLow, SinglePointIsGradientNormSquared) {
    const auto cfg = NetConfig::uniform(3, 2, 4, 1.0, 1);
    const auto p = init_params(cfg, 4);
    Matrix x(1, 3);
    x(0, 0) = 0.2;
    x(0, 1) = -0.7;
    x(0, 2) = 1.1;
    const auto fd = oracle::fd_gradient(
        [&](const std::vector<double>& t) { return evaluate(ResidualNetParams{t}, cfg, x.row(0))[0]; }, p.theta, 1e-5);
    const double expect = dot(fd, fd);
    EXPECT_NEAR(mu_low(p, cfg, x), expect, 1e-8 * expect);
}

TEST(MuLow, TwoPointsMatchQuadraticFormula) {
    const auto cfg = NetConfig::uniform(2, 2, 5, 0.7, 1);
    const auto p = init_params(cfg, 9);
    const auto s = random_samples(cfg, 2, 9);
    const Matrix j = jacobian_stack(p, cfg, s.x);
    const double a = dot(j.row(0), j.row(0)), b = dot(j.row(0), j.row(1)), c = dot(j.row(1), j.row(1));
    const double tr = a + c, det = a * c - b * b;
    const double lam = tr / 2 - std::sqrt(tr * tr / 4 - det);
    EXPECT_NEAR(mu_low(p, cfg, s.x), lam, 1e-10 * tr);
}

TEST(MuLow, DuplicateIsZero) {
    const auto cfg = NetConfig::uniform(2, 2, 16, 1.0, 1);
    const auto p = init_params(cfg, 2);
    auto s = random_samples(cfg, 5, 2);
    EXPECT_GT(mu_low(p, cfg, s.x), 1e-8);
    s.x(3, 0) = s.x(1, 0);
    s.x(3, 1) = s.x(1, 1);
    EXPECT_EQ(mu_low(p, cfg, s.x), 0.0);
    EXPECT_TRUE(frame_bound_can_be_positive(cfg, 5));
    EXPECT_FALSE(frame_bound_can_be_positive(NetConfig::uniform(2, 0, 1, 1.0, 1), 5));
}

TEST(GradLowerBound, Examples) {
    EXPECT_EQ(check_grad_lower_bound(0.3, 5.0, 0.0, 4), 0.09);
    // f = theta x, N = 1: |g|^2 = r^2 x^2, mu = x^2, L = r^2/2, so the
    // residual is exactly mu L / N (the bound is tight up to the factor 2).
    const double x = 1.7, theta = 0.4, y = -0.3, r = theta * x - y;
    const double res = check_grad_lower_bound(std::abs(r * x), x * x, 0.5 * r * r, 1);
    EXPECT_NEAR(res, x * x * 0.5 * r * r, 1e-15);
}

TEST(GradLowerBound, HoldsOnEveryRecordedStep) {
    const auto cfg = NetConfig::uniform(2, 2, 12, 1.0, 1);
    const auto s = random_samples(cfg, 6, 5);
    const auto t = gd_run(init_params(cfg, 5), cfg, s, GdConfig{0.2, 60, std::nullopt, 3, 0, 3});
    std::size_t checked = 0;
    for (const auto& st : t.steps)
        if (st.mu_low) {
            EXPECT_GE(*st.grad_lb_residual, grad_lower_bound_tolerance(st.grad_norm));
            ++checked;
        }
    EXPECT_EQ(checked, 21u);
}

TEST(ConvergenceFactor, DegenerateCases) {
    TrainTrace t;
    t.n_points = 2;
    t.eta = 0.1;
    for (std::size_t k = 0; k < 4; ++k) {
        TraceStep s;
        s.k = k;
        s.loss = 1.0 / static_cast<double>(k + 1);
        s.mu_low = 0.0;
        t.steps.push_back(s);
    }
    for (const auto& c : convergence_factor_check(t, 0.1, 5.0)) {
        EXPECT_EQ(c.factor, 1.0);
        EXPECT_TRUE(c.passed);
    }
    for (auto& s : t.steps) s.mu_low = 3.0;
    for (const auto& c : convergence_factor_check(t, 0.1, 20.0)) {
        EXPECT_DOUBLE_EQ(c.factor, 1.0);
        EXPECT_TRUE(c.passed);
    }
    t.steps[2].loss = 2.0;  // an increase must fail
    EXPECT_FALSE(convergence_factor_check(t, 0.1, 5.0)[1].passed);
}

TEST(Smoothness, StationarySkippedAndNonNegative) {
    TrainTrace t;
    t.eta = 0.1;
    t.steps = {{0, 1.0, 0.0}, {1, 1.0, 2.0}, {2, 0.9, 1.0}, {3, 0.91, 1.0}};
    const auto e = descent_smoothness_estimate(t);
    EXPECT_FALSE(e.per_step[0]);
    EXPECT_FALSE(e.per_step[3]);
    EXPECT_DOUBLE_EQ(*e.per_step[1], 2 * (0.9 - 1.0 + 0.1 * 4) / (0.01 * 4));
    EXPECT_GE(*e.per_step[2], 0.0);
}

TEST(StepsToThreshold, Examples) {
    std::vector<double> mono{9, 8, 7, 6, 5, 4, 3, 2, 1};
    EXPECT_EQ(steps_to_threshold(mono, 2.0, 1), 7u);
    EXPECT_FALSE(steps_to_threshold(mono, 0.5, 1));
    std::vector<double> osc{0.5, 0.2, 0.5, 0.2, 0.5, 0.2};
    // (0.5 + 0.2 + 0.5) / 3 rounds to 0.39999999999999997 <= 0.4
    EXPECT_EQ(steps_to_threshold(osc, 0.4, 3), 2u);
    EXPECT_EQ(steps_to_threshold(osc, 0.35, 3), 3u);
    EXPECT_THROW(steps_to_threshold(osc, 0.4, 0), ValidationError);
}

TEST(Dissipativity, ConvexQuadraticIsNonPositive) {
    const double rho = dissipativity_rho(quadratic(2.0), std::vector<double>{0, 0, 0}, 1.0, 500, 1);
    EXPECT_LE(rho, 0.0);
}

TEST(Dissipativity, DoubleWellAcrossBarrierIsPositive) {
    auto well = [](std::span<const double> t) {
        const double y = t[0];
        return LossAndGradient{(y * y - 1) * (y * y - 1), {4 * y * (y * y - 1)}};
    };
    const double rho = dissipativity_rho(well, std::vector<double>{1.0}, 2.5, 400, 3);
    EXPECT_GT(rho, 0.0);
    double grid_max = -1e300;
    for (int i = 0; i <= 100000; ++i) {
        const double y = -1.5 + 5.0 * i / 100000.0;
        const double g = 4 * y * (y * y - 1);
        if (std::abs(g) > 1e-8) grid_max = std::max(grid_max, -g * (y - 1.0) / (g * g));
    }
    EXPECT_LE(rho, grid_max * (1 + 1e-9));
}

TEST(Dissipativity, SmallRadiusFiniteAndAllExcludedThrows) {
    const auto cfg = NetConfig::uniform(2, 1, 8, 1.0, 1);
    const auto s = random_samples(cfg, 3, 6);
    const auto star = find_stationary_point(init_params(cfg, 6), cfg, s, 0.5, 20000, 1e-8);
    ASSERT_TRUE(star.converged);
    const double rho = dissipativity_rho(cfg, s, star.params, 1e-4, 50, 2);
    EXPECT_TRUE(std::isfinite(rho));
    auto flat = [](std::span<const double>) { return LossAndGradient{0.0, {0.0}}; };
    EXPECT_THROW(dissipativity_rho(flat, std::vector<double>{0.0}, 1.0, 10, 0), NumericalError);
}
