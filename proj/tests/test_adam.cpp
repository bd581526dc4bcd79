#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "cdet/adam.hpp"

using namespace cdet;

namespace {

// A 1x1 "network" used to drive the optimizer on scalar objectives.
FnnParams scalar_params(double value) {
    FnnParams p;
    p.weights = {Eigen::MatrixXd::Constant(1, 1, value)};
    p.biases = {Eigen::VectorXd::Zero(1)};
    return p;
}

}  // namespace

TEST_CASE("zero gradient leaves parameters unchanged and bumps the step") {
    FnnParams params = scalar_params(1.5);
    AdamState state = AdamState::create(params);
    const FnnParams grads = params.zeros_like();
    adam_step(params, grads, state);
    REQUIRE(params.weights[0](0, 0) == 1.5);
    REQUIRE(state.step == 1);
}

TEST_CASE("constant gradient moves parameters against its sign") {
    FnnParams params = scalar_params(0.0);
    AdamState state = AdamState::create(params, 0.01);
    FnnParams grads = params.zeros_like();
    grads.weights[0](0, 0) = 2.0;
    for (int i = 0; i < 50; ++i) adam_step(params, grads, state);
    REQUIRE(params.weights[0](0, 0) < 0.0);

    params = scalar_params(0.0);
    state = AdamState::create(params, 0.01);
    grads.weights[0](0, 0) = -2.0;
    for (int i = 0; i < 50; ++i) adam_step(params, grads, state);
    REQUIRE(params.weights[0](0, 0) > 0.0);
}

TEST_CASE("Adam minimizes a scalar quadratic") {
    // d/dtheta (theta - 3)^2 = 2 (theta - 3)
    FnnParams params = scalar_params(0.0);
    AdamState state = AdamState::create(params, 0.01);
    FnnParams grads = params.zeros_like();
    for (int i = 0; i < 5000; ++i) {
        grads.weights[0](0, 0) = 2.0 * (params.weights[0](0, 0) - 3.0);
        adam_step(params, grads, state);
    }
    REQUIRE(std::abs(params.weights[0](0, 0) - 3.0) < 0.01);
}

TEST_CASE("non-finite gradient raises a divergence error") {
    FnnParams params = scalar_params(0.0);
    AdamState state = AdamState::create(params);
    FnnParams grads = params.zeros_like();
    grads.weights[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
    REQUIRE_THROWS_AS(adam_step(params, grads, state), std::runtime_error);
    grads.weights[0](0, 0) = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(adam_step(params, grads, state), std::runtime_error);
}
