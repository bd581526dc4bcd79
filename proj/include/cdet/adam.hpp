#pragma once

#include <cmath>
#include <stdexcept>

#include "cdet/fnn.hpp"

namespace cdet {

/// Adam optimizer state: bias-corrected first/second moment accumulators
/// shaped like the parameters they update.
struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step = 0;
    FnnParams m;
    FnnParams v;

    static AdamState create(const FnnParams& params, double learning_rate = 1e-3) {
        AdamState s;
        s.learning_rate = learning_rate;
        s.m = params.zeros_like();
        s.v = params.zeros_like();
        return s;
    }
};

namespace detail {

template <typename Mat>
void adam_update(Mat& param, const Mat& grad, Mat& m, Mat& v, const AdamState& s,
                 double corr1, double corr2) {
    m.array() = s.beta1 * m.array() + (1.0 - s.beta1) * grad.array();
    v.array() = s.beta2 * v.array() + (1.0 - s.beta2) * grad.array().square();
    param.array() -=
        s.learning_rate * (m.array() / corr1) / ((v.array() / corr2).sqrt() + s.epsilon);
}

}  // namespace detail

/// One Adam update. Throws if any gradient entry is non-finite.
inline void adam_step(FnnParams& params, const FnnParams& grads, AdamState& state) {
    if (grads.weights.size() != params.weights.size())
        throw std::invalid_argument("adam_step: gradient/parameter layer counts differ");
    if (!grads.all_finite())
        throw std::runtime_error("adam_step: non-finite gradient, training diverged");

    state.step += 1;
    const double corr1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double corr2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.weights.size(); ++i) {
        detail::adam_update(params.weights[i], grads.weights[i], state.m.weights[i],
                            state.v.weights[i], state, corr1, corr2);
        detail::adam_update(params.biases[i], grads.biases[i], state.m.biases[i],
                            state.v.biases[i], state, corr1, corr2);
    }
}

}  // namespace cdet
