#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "uniformity/network.hpp"
#include "uniformity/network_io.hpp"

using namespace uniformity;

namespace {

Samples random_samples(const NetConfig& cfg, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Samples s{Matrix(n, cfg.d), Matrix(n, cfg.out_dim)};
    for (double& v : s.x.data()) v = rng.uniform(-1.5, 1.5);
    for (double& v : s.y.data()) v = rng.normal();
    return s;
}

double loss_at(const NetConfig& cfg, const Samples& s, const std::vector<double>& theta) {
    // loss from forward passes only
    double l = 0.0;
    ResidualNetParams p{theta};
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto f = evaluate(p, cfg, s.x.row(i));
        for (std::size_t k = 0; k < cfg.out_dim; ++k) l += 0.5 * (f[k] - s.y(i, k)) * (f[k] - s.y(i, k));
    }
    return l / static_cast<double>(s.size());
}

}  // namespace

TEST(TauEps, Examples) {
    const double zero[2] = {0, 0};
    EXPECT_EQ(tau_eps(zero, 0.5), (std::vector<double>{0, 0}));
    const double u[2] = {3, 4};
    const auto t = tau_eps(u, 1.0);
    EXPECT_DOUBLE_EQ(t[0], 3.0 / std::sqrt(26.0));
    EXPECT_DOUBLE_EQ(t[1], 4.0 / std::sqrt(26.0));
    const double big[2] = {6e5, 8e5};
    const double n = norm2(tau_eps(big, 1.0));
    EXPECT_LT(n, 1.0);
    EXPECT_GT(n, 1.0 - 1e-10);
}

TEST(TauEps, JacobianNormAtMostInverseEps) {
    Rng rng(2);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> u(4);
        for (double& v : u) v = rng.normal() * std::pow(10.0, rng.uniform(-3, 1));
        const double eps = std::pow(10.0, rng.uniform(-2, 1));
        EXPECT_LE(spectral_norm(tau_eps_jacobian(u, eps)), 1.0 / eps * (1 + 1e-9));
        // jvp agrees with the dense Jacobian
        std::vector<double> v(4);
        for (double& x : v) x = rng.normal();
        const auto a = tau_eps_jvp(u, v, eps);
        const Matrix j = tau_eps_jacobian(u, eps);
        for (std::size_t r = 0; r < 4; ++r) EXPECT_NEAR(a[r], dot(j.row(r), v), 1e-12 / eps);
    }
}

TEST(Gelu, ValuesAndDerivative) {
    EXPECT_EQ(gelu(0.0), 0.0);
    EXPECT_NEAR(gelu(1.0), 0.8413447460685429, 1e-15);
    EXPECT_NEAR(gelu(-1.0), -0.15865525393145707, 1e-15);
    for (double x : {-3.0, -0.5, 0.0, 0.7, 2.5})
        EXPECT_NEAR(gelu_derivative(x), (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6, 1e-8);
}

TEST(Init, DeterministicAndScaled) {
    const auto cfg = NetConfig::uniform(4, 1, 400, 1.0, 1);
    const auto a = init_params(cfg, 1);
    EXPECT_EQ(a, init_params(cfg, 1));
    EXPECT_NE(a, init_params(cfg, 2));
    const WeightView w = w1(a, cfg, 0);
    double s2 = 0.0;
    for (std::size_t i = 0; i < 400; ++i)
        for (std::size_t k = 0; k < 4; ++k) s2 += w(i, k) * w(i, k);
    EXPECT_NEAR(std::sqrt(s2 / 1600.0), 0.5, 0.05);
}

TEST(Forward, ZeroWeightsAndNoBlocks) {
    const auto cfg = NetConfig::uniform(3, 2, 4, 1.0, 2);
    ResidualNetParams p{std::vector<double>(cfg.parameter_count(), 0.0)};
    const double x[3] = {1, -2, 0.5};
    EXPECT_EQ(evaluate(p, cfg, x), (std::vector<double>{0, 0}));

    const auto lin = NetConfig::uniform(3, 0, 1, 0.5, 1);
    ResidualNetParams q{{1.0, 2.0, -1.0}};
    const auto t = tau_eps(x, 0.5);
    EXPECT_DOUBLE_EQ(evaluate(q, lin, x)[0], t[0] + 2 * t[1] - t[2]);
    EXPECT_THROW(evaluate(q, lin, std::vector<double>{1, 2}), ValidationError);
}

TEST(Forward, HandComputedTwoTwoTwo) {
    NetConfig cfg{2, {2}, 0.5, 2, 0.7};
    // W1 = [[1,-2],[0.5,3]], W2 = [[2,-1],[0.25,1]], Wout = [[1,0],[-1,2]]
    ResidualNetParams p{{1, -2, 0.5, 3, 2, -1, 0.25, 1, 1, 0, -1, 2}};
    const double x0 = 0.3, x1 = -0.8;
    const double r0 = std::sqrt(x0 * x0 + x1 * x1 + 0.25);
    const double z0 = x0 / r0, z1 = x1 / r0;
    const double a0 = z0 - 2 * z1, a1 = 0.5 * z0 + 3 * z1;
    const double g0 = 0.5 * a0 * std::erfc(-a0 / std::sqrt(2.0));
    const double g1 = 0.5 * a1 * std::erfc(-a1 / std::sqrt(2.0));
    const double u0 = x0 + 0.7 * (2 * g0 - g1), u1 = x1 + 0.7 * (0.25 * g0 + g1);
    const double r1 = std::sqrt(u0 * u0 + u1 * u1 + 0.25);
    const double f0 = u0 / r1, f1 = -u0 / r1 + 2 * u1 / r1;
    const double x[2] = {x0, x1};
    const auto f = evaluate(p, cfg, x);
    EXPECT_NEAR(f[0], f0, 1e-15);
    EXPECT_NEAR(f[1], f1, 1e-15);
}

TEST(GradLoss, MatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(1000 + seed);
        const std::size_t d = 1 + rng.uniform_index(4), blocks = rng.uniform_index(4), m = 1 + rng.uniform_index(8);
        const std::size_t out = 1 + rng.uniform_index(2), n = 1 + rng.uniform_index(4);
        const auto cfg = NetConfig::uniform(d, blocks, m, rng.uniform(0.3, 2.0), out);
        const auto p = init_params(cfg, seed);
        const auto s = random_samples(cfg, n, seed);
        const auto lg = grad_loss(p, cfg, s);
        EXPECT_NEAR(lg.loss, loss_at(cfg, s, p.theta), 1e-14 * (1 + lg.loss));
        const auto fd = oracle::fd_gradient([&](const std::vector<double>& t) { return loss_at(cfg, s, t); }, p.theta, 1e-5);
        EXPECT_LT(oracle::max_relative_error(lg.grad, fd), 1e-5) << "seed " << seed;
    }
}

TEST(GradLoss, ZeroAtInterpolationAndQuadraticHomogeneity) {
    const auto cfg = NetConfig::uniform(2, 2, 5, 1.0, 1);
    const auto p = init_params(cfg, 3);
    auto s = random_samples(cfg, 3, 3);
    for (std::size_t i = 0; i < 3; ++i) s.y(i, 0) = evaluate(p, cfg, s.x.row(i))[0];
    const auto z = grad_loss(p, cfg, s);
    EXPECT_EQ(z.loss, 0.0);
    for (double g : z.grad) EXPECT_EQ(g, 0.0);

    // residuals r_i -> c r_i by moving targets
    auto s1 = random_samples(cfg, 3, 4);
    auto s2 = s1;
    const double c = 2.5;
    for (std::size_t i = 0; i < 3; ++i) {
        const double f = evaluate(p, cfg, s1.x.row(i))[0];
        s2.y(i, 0) = f - c * (f - s1.y(i, 0));
    }
    const auto a = grad_loss(p, cfg, s1), b = grad_loss(p, cfg, s2);
    EXPECT_NEAR(b.loss, c * c * a.loss, 1e-12 * b.loss);
    for (std::size_t q = 0; q < a.grad.size(); ++q) EXPECT_NEAR(b.grad[q], c * a.grad[q], 1e-12 * (1 + std::abs(b.grad[q])));
    EXPECT_THROW(grad_loss(p, cfg, Samples{Matrix(0, 2), Matrix(0, 1)}), ValidationError);
}

TEST(Jacobian, ChainRuleIdentityAndDuplicates) {
    const auto cfg = NetConfig::uniform(3, 2, 4, 0.8, 2);
    const auto p = init_params(cfg, 5);
    auto s = random_samples(cfg, 3, 5);
    for (std::size_t k = 0; k < 3; ++k) s.x(2, k) = s.x(0, k);
    const Matrix j = jacobian_stack(p, cfg, s.x);
    ASSERT_EQ(j.rows(), 6u);
    ASSERT_EQ(j.cols(), cfg.parameter_count());
    std::vector<double> r(6);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto f = evaluate(p, cfg, s.x.row(i));
        for (std::size_t k = 0; k < 2; ++k) r[i * 2 + k] = f[k] - s.y(i, k);
    }
    const auto lg = grad_loss(p, cfg, s);
    for (std::size_t q = 0; q < j.cols(); ++q) {
        double v = 0.0;
        for (std::size_t row = 0; row < 6; ++row) v += j(row, q) * r[row];
        EXPECT_NEAR(v / 3.0, lg.grad[q], 1e-12);
    }
    for (std::size_t q = 0; q < j.cols(); ++q) {
        EXPECT_EQ(j(0, q), j(4, q));
        EXPECT_EQ(j(1, q), j(5, q));
    }
}

TEST(Jacobian, SinglePointMatchesFiniteDifferences) {
    const auto cfg = NetConfig::uniform(2, 3, 6, 1.0, 1);
    const auto p = init_params(cfg, 8);
    Matrix x(1, 2);
    x(0, 0) = 0.4;
    x(0, 1) = -1.1;
    const Matrix j = jacobian_stack(p, cfg, x);
    const auto fd = oracle::fd_gradient(
        [&](const std::vector<double>& t) { return evaluate(ResidualNetParams{t}, cfg, x.row(0))[0]; }, p.theta, 1e-5);
    std::vector<double> row(j.row(0).begin(), j.row(0).end());
    EXPECT_LT(oracle::max_relative_error(row, fd), 1e-5);
}

TEST(Forward, ResidualStreamStaysBounded) {
    Rng rng(6);
    for (int t = 0; t < 20; ++t) {
        NetConfig cfg = NetConfig::uniform(3, 3, 5, rng.uniform(0.2, 2.0), 1);
        cfg.block_scale = rng.uniform(0.1, 2.0);
        const auto p = init_params(cfg, t);
        std::vector<double> x(3);
        for (double& v : x) v = rng.normal() * 3;
        const auto c = forward(p, cfg, x);
        // |GELU(t)| <= |t| and |tau_eps(u)| < 1
        double bound = norm2(x);
        for (std::size_t l = 0; l < cfg.blocks(); ++l)
            bound += cfg.block_scale * spectral_norm(w2(p, cfg, l).to_matrix()) * spectral_norm(w1(p, cfg, l).to_matrix());
        EXPECT_LE(norm2(c.u.back()), bound * (1 + 1e-9));
    }
}

TEST(NetworkIo, ParamBundleRoundTripsBitExact) {
    namespace fs = std::filesystem;
    NetConfig cfg{3, {4, 2}, 0.3, 2, 0.5};
    auto p = init_params(cfg, 11);
    p.theta[0] = 0.1;
    const fs::path dir = fs::temp_directory_path() / "uniformity_param_bundle";
    fs::remove_all(dir);
    write_params(dir, p, cfg);
    const auto b = read_params(dir);
    EXPECT_EQ(b.cfg.hidden, cfg.hidden);
    EXPECT_EQ(b.cfg.d, cfg.d);
    EXPECT_EQ(b.cfg.out_dim, cfg.out_dim);
    EXPECT_EQ(b.cfg.eps, cfg.eps);
    EXPECT_EQ(b.cfg.block_scale, cfg.block_scale);
    EXPECT_EQ(b.params, p);
    fs::remove_all(dir);
}

TEST(NetworkIo, ShortMatrixFileIsRejected) {
    namespace fs = std::filesystem;
    NetConfig cfg{2, {2}, 1.0, 1, 1.0};
    const auto p = init_params(cfg, 1);
    const fs::path dir = fs::temp_directory_path() / "uniformity_param_bundle_bad";
    fs::remove_all(dir);
    write_params(dir, p, cfg);
    std::ofstream(dir / "W_out.csv") << "0x1p+0\n";
    EXPECT_THROW(read_params(dir), ValidationError);
    fs::remove_all(dir);
}
