#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace uniformity {

/// Architecture of the residual network
///   u_0 = x,  u_{l+1} = u_l + s * W2_l GELU(W1_l tau_eps(u_l)),  f = W_out tau_eps(u_L)
/// with one two-layer GELU block per entry of `hidden`.
struct NetConfig {
    std::size_t d = 2;                 // width of the residual stream (input dimension)
    std::vector<std::size_t> hidden;   // m_l per block; L = hidden.size()
    double eps = 1.0;                  // tau_eps parameter
    std::size_t out_dim = 1;
    double block_scale = 1.0;          // s

    static NetConfig uniform(std::size_t d, std::size_t blocks, std::size_t width, double eps = 1.0,
                             std::size_t out_dim = 1) {
        return NetConfig{d, std::vector<std::size_t>(blocks, width), eps, out_dim, 1.0};
    }

    std::size_t blocks() const noexcept { return hidden.size(); }

    /// dim(theta).
    std::size_t parameter_count() const {
        std::size_t p = out_dim * d;
        for (std::size_t m : hidden) p += 2 * m * d;
        return p;
    }

    void validate() const {
        if (d < 1 || out_dim < 1) throw ValidationError("network widths must be >= 1");
        for (std::size_t m : hidden)
            if (m < 1) throw ValidationError("hidden widths must be >= 1");
        if (!(eps > 0.0)) throw ValidationError("eps must be > 0");
        if (!std::isfinite(block_scale)) throw ValidationError("block_scale must be finite");
    }

    // offsets into the flat parameter vector
    std::size_t w1_offset(std::size_t l) const {
        std::size_t off = 0;
        for (std::size_t k = 0; k < l; ++k) off += 2 * hidden[k] * d;
        return off;
    }
    std::size_t w2_offset(std::size_t l) const { return w1_offset(l) + hidden[l] * d; }
    std::size_t out_offset() const { return w1_offset(blocks()); }
};

/// All weights theta = (W1_0, W2_0, ..., W1_{L-1}, W2_{L-1}, W_out), each
/// matrix row-major, concatenated in that order.
struct ResidualNetParams {
    std::vector<double> theta;

    bool operator==(const ResidualNetParams&) const = default;
};

/// Row-major read-only view of one weight matrix inside theta.
struct WeightView {
    const double* data;
    std::size_t rows, cols;

    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    Matrix to_matrix() const {
        Matrix m(rows, cols);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) m(r, c) = (*this)(r, c);
        return m;
    }
};

inline WeightView w1(const ResidualNetParams& p, const NetConfig& cfg, std::size_t l) {
    return {p.theta.data() + cfg.w1_offset(l), cfg.hidden[l], cfg.d};
}
inline WeightView w2(const ResidualNetParams& p, const NetConfig& cfg, std::size_t l) {
    return {p.theta.data() + cfg.w2_offset(l), cfg.d, cfg.hidden[l]};
}
inline WeightView w_out(const ResidualNetParams& p, const NetConfig& cfg) {
    return {p.theta.data() + cfg.out_offset(), cfg.out_dim, cfg.d};
}

// ---------------------------------------------------------------------------
// Elementwise pieces
// ---------------------------------------------------------------------------

/// tau_eps(u) = u / sqrt(|u|^2 + eps^2); maps R^d into the open unit ball.
inline std::vector<double> tau_eps(std::span<const double> u, double eps) {
    if (!(eps > 0.0)) throw ValidationError("tau_eps: eps must be > 0");
    const double rho = std::sqrt(dot(u, u) + eps * eps);
    std::vector<double> out(u.begin(), u.end());
    for (double& x : out) x /= rho;
    return out;
}

/// Applies the (symmetric) Jacobian of tau_eps at u to v:
///   v / rho - u (u.v) / rho^3,  rho = sqrt(|u|^2 + eps^2).
inline std::vector<double> tau_eps_jvp(std::span<const double> u, std::span<const double> v, double eps) {
    const double rho2 = dot(u, u) + eps * eps;
    const double rho = std::sqrt(rho2);
    const double uv = dot(u, v) / (rho2 * rho);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / rho - u[i] * uv;
    return out;
}

/// Dense Jacobian of tau_eps at u.
inline Matrix tau_eps_jacobian(std::span<const double> u, double eps) {
    const std::size_t d = u.size();
    const double rho2 = dot(u, u) + eps * eps;
    const double rho = std::sqrt(rho2);
    Matrix j(d, d);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) j(a, b) = (a == b ? 1.0 / rho : 0.0) - u[a] * u[b] / (rho2 * rho);
    return j;
}

/// Standard normal CDF.
inline double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// GELU(x) = x Phi(x), exact erf form.
inline double gelu(double x) { return x * phi_cdf(x); }

inline double gelu_derivative(double x) {
    return phi_cdf(x) + x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Initialization, forward, reverse mode
// ---------------------------------------------------------------------------

/// i.i.d. Gaussian weights with std 1/sqrt(fan_in) per matrix.
inline ResidualNetParams init_params(const NetConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ResidualNetParams p{std::vector<double>(cfg.parameter_count())};
    Rng rng(seed);
    auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in) {
        const double sd = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < count; ++i) p.theta[offset + i] = rng.normal(0.0, sd);
    };
    for (std::size_t l = 0; l < cfg.blocks(); ++l) {
        fill(cfg.w1_offset(l), cfg.hidden[l] * cfg.d, cfg.d);
        fill(cfg.w2_offset(l), cfg.d * cfg.hidden[l], cfg.hidden[l]);
    }
    fill(cfg.out_offset(), cfg.out_dim * cfg.d, cfg.d);
    return p;
}

/// Intermediates of one forward pass, kept for the reverse sweep.
struct ForwardCache {
    std::vector<std::vector<double>> u;    // u_0 .. u_L
    std::vector<std::vector<double>> z;    // tau_eps(u_0) .. tau_eps(u_L)
    std::vector<std::vector<double>> pre;  // W1_l z_l
    std::vector<std::vector<double>> act;  // GELU(pre_l)
    std::vector<double> f;
};

inline ForwardCache forward(const ResidualNetParams& params, const NetConfig& cfg, std::span<const double> x) {
    if (x.size() != cfg.d) throw ValidationError("forward: input has dimension " + std::to_string(x.size()) +
                                                 ", network expects " + std::to_string(cfg.d));
    if (params.theta.size() != cfg.parameter_count()) throw ValidationError("forward: parameter vector has wrong size");
    const std::size_t d = cfg.d;
    ForwardCache c;
    c.u.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l < cfg.blocks(); ++l) {
        const std::size_t m = cfg.hidden[l];
        c.z.push_back(tau_eps(c.u[l], cfg.eps));
        const WeightView a = w1(params, cfg, l), b = w2(params, cfg, l);
        std::vector<double> pre(m), act(m);
        for (std::size_t i = 0; i < m; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += a(i, k) * c.z[l][k];
            pre[i] = s;
            act[i] = gelu(s);
        }
        std::vector<double> next = c.u[l];
        for (std::size_t k = 0; k < d; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += b(k, i) * act[i];
            next[k] += cfg.block_scale * s;
        }
        c.pre.push_back(std::move(pre));
        c.act.push_back(std::move(act));
        c.u.push_back(std::move(next));
    }
    c.z.push_back(tau_eps(c.u.back(), cfg.eps));
    const WeightView o = w_out(params, cfg);
    c.f.assign(cfg.out_dim, 0.0);
    for (std::size_t r = 0; r < cfg.out_dim; ++r)
        for (std::size_t k = 0; k < d; ++k) c.f[r] += o(r, k) * c.z.back()[k];
    for (double v : c.f)
        if (!std::isfinite(v)) throw NumericalError("forward: non-finite network output");
    return c;
}

/// f(theta; x).
inline std::vector<double> evaluate(const ResidualNetParams& params, const NetConfig& cfg, std::span<const double> x) {
    return forward(params, cfg, x).f;
}

/// Reverse sweep: adds weight * (df/dtheta)^T cotangent into `grad`.
inline void accumulate_vjp(const ResidualNetParams& params, const NetConfig& cfg, const ForwardCache& c,
                           std::span<const double> cotangent, double weight, std::span<double> grad) {
    const std::size_t d = cfg.d;
    const std::size_t L = cfg.blocks();
    const WeightView o = w_out(params, cfg);

    // output layer
    std::vector<double> gz(d, 0.0);
    for (std::size_t r = 0; r < cfg.out_dim; ++r) {
        const double g = weight * cotangent[r];
        double* row = grad.data() + cfg.out_offset() + r * d;
        for (std::size_t k = 0; k < d; ++k) {
            row[k] += g * c.z[L][k];
            gz[k] += o(r, k) * g;
        }
    }
    std::vector<double> gu = tau_eps_jvp(c.u[L], gz, cfg.eps);

    for (std::size_t l = L; l-- > 0;) {
        const std::size_t m = cfg.hidden[l];
        const WeightView a = w1(params, cfg, l), b = w2(params, cfg, l);
        double* gb = grad.data() + cfg.w2_offset(l);
        double* ga = grad.data() + cfg.w1_offset(l);
        std::vector<double> gpre(m, 0.0);
        for (std::size_t k = 0; k < d; ++k) {
            const double g = cfg.block_scale * gu[k];
            for (std::size_t i = 0; i < m; ++i) {
                gb[k * m + i] += g * c.act[l][i];
                gpre[i] += b(k, i) * g;
            }
        }
        for (std::size_t i = 0; i < m; ++i) gpre[i] *= gelu_derivative(c.pre[l][i]);
        std::fill(gz.begin(), gz.end(), 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t k = 0; k < d; ++k) {
                ga[i * d + k] += gpre[i] * c.z[l][k];
                gz[k] += a(i, k) * gpre[i];
            }
        const std::vector<double> back = tau_eps_jvp(c.u[l], gz, cfg.eps);
        for (std::size_t k = 0; k < d; ++k) gu[k] += back[k];
    }
}

/// Inputs x_i (rows of `x`) and targets y_i (rows of `y`).
struct Samples {
    Matrix x;
    Matrix y;

    std::size_t size() const noexcept { return x.rows(); }
};

struct LossAndGradient {
    double loss = 0.0;
    std::vector<double> grad;
};

/// L(theta) = (1/N) sum_i 0.5 |y_i - f(theta; x_i)|^2 and its exact gradient.
/// Per-point contributions are summed in point order.
inline LossAndGradient grad_loss(const ResidualNetParams& params, const NetConfig& cfg, const Samples& data) {
    const std::size_t n = data.size();
    if (n == 0) throw ValidationError("grad_loss: empty batch");
    if (data.y.rows() != n || data.y.cols() != cfg.out_dim || data.x.cols() != cfg.d)
        throw ValidationError("grad_loss: data shape does not match the network");
    const std::size_t p = cfg.parameter_count();
    std::vector<std::vector<double>> per_point(n, std::vector<double>(p, 0.0));
    std::vector<double> per_loss(n, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    parallel_for(n, [&](std::size_t i) {
        const ForwardCache c = forward(params, cfg, data.x.row(i));
        std::vector<double> r(cfg.out_dim);
        double sq = 0.0;
        for (std::size_t k = 0; k < cfg.out_dim; ++k) {
            r[k] = c.f[k] - data.y(i, k);
            sq += r[k] * r[k];
        }
        per_loss[i] = 0.5 * sq;
        accumulate_vjp(params, cfg, c, r, inv_n, per_point[i]);
    });
    LossAndGradient out{0.0, std::vector<double>(p, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        out.loss += per_loss[i];
        for (std::size_t q = 0; q < p; ++q) out.grad[q] += per_point[i][q];
    }
    out.loss *= inv_n;
    if (!std::isfinite(out.loss)) throw NumericalError("grad_loss: non-finite loss");
    return out;
}

/// Stacked parameter Jacobian: row i*out_dim + k holds d f_k(theta; x_i) / d theta.
inline Matrix jacobian_stack(const ResidualNetParams& params, const NetConfig& cfg, const Matrix& x) {
    const std::size_t n = x.rows();
    if (n == 0) throw ValidationError("jacobian_stack: no points");
    const std::size_t p = cfg.parameter_count();
    Matrix j(n * cfg.out_dim, p);
    parallel_for(n, [&](std::size_t i) {
        const ForwardCache c = forward(params, cfg, x.row(i));
        std::vector<double> e(cfg.out_dim, 0.0);
        for (std::size_t k = 0; k < cfg.out_dim; ++k) {
            e[k] = 1.0;
            accumulate_vjp(params, cfg, c, e, 1.0, j.row(i * cfg.out_dim + k));
            e[k] = 0.0;
        }
    });
    return j;
}

}  // namespace uniformity
