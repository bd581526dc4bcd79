#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdet/rng.hpp"

namespace cdet {

enum class Activation { LeakyRelu, Relu };

/// Architecture of a feedforward network: input -> hidden layers -> output.
/// Hidden layers use the configured activation; the output layer is affine.
struct FnnSpec {
    int input_dim = 0;
    std::vector<int> hidden_widths;
    int output_dim = 0;
    Activation activation = Activation::LeakyRelu;
    double leaky_slope = 0.01;  // in [0, 1); ignored for plain ReLU
    std::uint64_t seed = 0;

    double slope() const { return activation == Activation::Relu ? 0.0 : leaky_slope; }

    void validate() const {
        if (input_dim <= 0) throw std::invalid_argument("FnnSpec: input_dim must be positive");
        if (output_dim <= 0) throw std::invalid_argument("FnnSpec: output_dim must be positive");
        if (hidden_widths.empty())
            throw std::invalid_argument("FnnSpec: at least one hidden layer is required");
        for (int w : hidden_widths)
            if (w <= 0) throw std::invalid_argument("FnnSpec: hidden widths must be positive");
        if (leaky_slope < 0.0 || leaky_slope >= 1.0)
            throw std::invalid_argument("FnnSpec: leaky slope must lie in [0, 1)");
    }

    /// Layer dimensions d_0, ..., d_{L} including input and output.
    std::vector<int> layer_dims() const {
        std::vector<int> dims;
        dims.reserve(hidden_widths.size() + 2);
        dims.push_back(input_dim);
        dims.insert(dims.end(), hidden_widths.begin(), hidden_widths.end());
        dims.push_back(output_dim);
        return dims;
    }
};

/// Per-layer weight matrices and bias vectors. weights[i] maps layer i
/// activations (d_i) to layer i+1 pre-activations (d_{i+1}).
struct FnnParams {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    std::size_t layer_count() const { return weights.size(); }

    bool all_finite() const {
        for (const auto& w : weights)
            if (!w.allFinite()) return false;
        for (const auto& b : biases)
            if (!b.allFinite()) return false;
        return true;
    }

    void set_zero() {
        for (auto& w : weights) w.setZero();
        for (auto& b : biases) b.setZero();
    }

    FnnParams zeros_like() const {
        FnnParams g;
        g.weights.reserve(weights.size());
        g.biases.reserve(biases.size());
        for (const auto& w : weights) g.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        for (const auto& b : biases) g.biases.push_back(Eigen::VectorXd::Zero(b.size()));
        return g;
    }
};

/// He-style initialization: weights ~ N(0, 2/fan_in), biases zero.
/// Deterministic for a fixed spec seed.
inline FnnParams init_params(const FnnSpec& spec) {
    spec.validate();
    auto rng = make_rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto dims = spec.layer_dims();

    FnnParams params;
    params.weights.reserve(dims.size() - 1);
    params.biases.reserve(dims.size() - 1);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        const int fan_in = dims[i];
        const int fan_out = dims[i + 1];
        const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = scale * gauss(rng);
        params.weights.push_back(std::move(w));
        params.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return params;
}

namespace detail {

inline double softplus(double v) {
    if (v > 30.0) return v;
    if (v < -30.0) return std::exp(v);
    return std::log1p(std::exp(v));
}

inline double sigmoid(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

inline void activate_inplace(Eigen::MatrixXd& z, double slope) {
    z = z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
}

// Derivative of the activation; the subgradient at 0 is the slope.
inline Eigen::MatrixXd activation_derivative(const Eigen::MatrixXd& pre, double slope) {
    return pre.unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; });
}

}  // namespace detail

/// Cached intermediate values of a batched forward pass, consumed by
/// backward_batch. acts[0] is the input batch; acts[i] (i >= 1) the
/// post-activation output of hidden layer i; pre[i] the pre-activation
/// input of hidden layer i+1.
struct ForwardTrace {
    std::vector<Eigen::MatrixXd> acts;
    std::vector<Eigen::MatrixXd> pre;
    Eigen::MatrixXd out;
};

/// Batched forward pass. `input` has one sample per row (B x input_dim).
inline Eigen::MatrixXd forward_batch(const FnnParams& params, const FnnSpec& spec,
                                     const Eigen::MatrixXd& input, ForwardTrace* trace = nullptr) {
    if (input.cols() != spec.input_dim)
        throw std::invalid_argument("forward: input has " + std::to_string(input.cols()) +
                                    " columns, expected " + std::to_string(spec.input_dim));
    const double slope = spec.slope();
    const std::size_t layers = params.layer_count();
    if (trace) {
        trace->acts.assign(1, input);
        trace->pre.clear();
    }
    Eigen::MatrixXd h = input;
    for (std::size_t i = 0; i < layers; ++i) {
        Eigen::MatrixXd z = h * params.weights[i].transpose();
        z.rowwise() += params.biases[i].transpose();
        if (i + 1 < layers) {
            if (trace) trace->pre.push_back(z);
            detail::activate_inplace(z, slope);
            if (trace) trace->acts.push_back(z);
        }
        h = std::move(z);
    }
    if (trace) trace->out = h;
    return h;
}

/// Forward pass for a single input vector.
inline Eigen::VectorXd forward(const FnnParams& params, const FnnSpec& spec,
                               const Eigen::VectorXd& x) {
    return forward_batch(params, spec, x.transpose()).row(0).transpose();
}

/// Gradients of sum_b upstream_b . F(x_b) with respect to every parameter,
/// plus the gradient with respect to the input batch.
struct FnnGradients {
    FnnParams params;
    Eigen::MatrixXd input;  // B x input_dim
};

inline FnnGradients backward_batch(const FnnParams& params, const FnnSpec& spec,
                                   const ForwardTrace& trace, const Eigen::MatrixXd& upstream) {
    if (upstream.cols() != spec.output_dim)
        throw std::invalid_argument("backward: upstream gradient has " +
                                    std::to_string(upstream.cols()) + " columns, expected " +
                                    std::to_string(spec.output_dim));
    if (upstream.rows() != trace.acts[0].rows())
        throw std::invalid_argument("backward: upstream batch size does not match trace");
    const double slope = spec.slope();
    const std::size_t layers = params.layer_count();

    FnnGradients grads;
    grads.params = params.zeros_like();
    Eigen::MatrixXd g = upstream;
    for (std::size_t i = layers; i-- > 0;) {
        grads.params.weights[i] = g.transpose() * trace.acts[i];
        grads.params.biases[i] = g.colwise().sum().transpose();
        Eigen::MatrixXd g_prev = g * params.weights[i];
        if (i > 0) g_prev.array() *= detail::activation_derivative(trace.pre[i - 1], slope).array();
        g = std::move(g_prev);
    }
    grads.input = std::move(g);
    return grads;
}

/// Reverse-mode gradients for a single input/upstream pair.
inline FnnGradients backward(const FnnParams& params, const FnnSpec& spec,
                             const Eigen::VectorXd& x, const Eigen::VectorXd& upstream) {
    ForwardTrace trace;
    forward_batch(params, spec, x.transpose(), &trace);
    return backward_batch(params, spec, trace, upstream.transpose());
}

}  // namespace cdet
