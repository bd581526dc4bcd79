#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cdet/dataset.hpp"
#include "cdet/gca.hpp"
#include "cdet/rng.hpp"

namespace cdet {

/// The seven synthetic two-sample generators. Only the second sample's
/// intercept moves between regimes, so the covariate shift between the two
/// samples is always present and the conditional law is what changes.
enum class SimModel { M1 = 1, M2, M3, M4, M5, M6, M7 };

enum class Regime { Null, Alternative };

struct ModelInfo {
    int p = 1;
    int d = 5;
    double alt_intercept = 0.5;  // second-sample intercept under the alternative
    std::vector<int> mdn_hidden;
    std::vector<int> clf_hidden;
    int mixtures = 2;
};

inline ModelInfo model_info(SimModel model) {
    switch (model) {
        case SimModel::M1: return {1, 5, 0.5, {8, 4}, {32}, 2};
        case SimModel::M2: return {1, 5, 0.5, {8, 4}, {32}, 2};
        case SimModel::M3: return {1, 5, 0.5, {32, 16}, {64}, 2};
        case SimModel::M4: return {1, 10, 0.5, {32, 16}, {512}, 2};
        case SimModel::M5: return {1, 10, 0.5, {64, 32}, {32}, 8};
        case SimModel::M6: return {1, 100, 1.0, {1024, 512}, {64}, 2};
        case SimModel::M7: return {2, 5, 0.5, {8, 4}, {32}, 2};
    }
    throw std::invalid_argument("model_info: unknown model");
}

inline SimModel model_from_number(int k) {
    if (k < 1 || k > 7) throw std::invalid_argument("model number must lie in 1..7");
    return static_cast<SimModel>(k);
}

namespace detail {

inline Eigen::VectorXd model_beta() {
    Eigen::VectorXd beta(5);
    beta << 1.0, -1.0, 1.0, -1.0, 1.0;
    return beta;
}

// Mean used by models 4 and 6; the heteroskedastic factor multiplies the
// noise separately.
inline double hetero_mean(const Eigen::RowVectorXd& x) {
    return x(0) * x(0) + std::exp(x(1) + x(2) / 3.0) + x(3) - x(4);
}

inline double hetero_scale(const Eigen::RowVectorXd& x) {
    return 0.5 + x(5) * x(5) / 2.0 + x(6) * x(6) / 2.0;
}

inline double donut_mean(const Eigen::RowVectorXd& x, const Eigen::VectorXd& beta) {
    double mean = 0.0;
    for (int j = 0; j < 5; ++j) {
        const double rho = x(2 * j) * x(2 * j) + x(2 * j + 1) * x(2 * j + 1);
        mean += beta(j) * rho * std::sin(rho);
    }
    return mean;
}

inline double m3_mean(const Eigen::RowVectorXd& x) {
    return std::exp(x(0) / 2.0 + x(1) / 2.0) - x(2) * std::sin(x(3) + x(4));
}

// One covariate draw from Unif(([-1,-0.5] u [0.5,1])^d).
inline void uniform_shell_row(Eigen::Ref<Eigen::RowVectorXd> row, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.5, 1.0);
    std::bernoulli_distribution coin(0.5);
    for (Eigen::Index j = 0; j < row.size(); ++j)
        row(j) = coin(rng) ? unif(rng) : -unif(rng);
}

}  // namespace detail

/// Generates one trial's (data1, data2) pair. Covariate and noise draws
/// depend only on the seed, never on the regime; the regime enters through
/// the second sample's intercept alone.
inline std::pair<Dataset, Dataset> generate_model(SimModel model, Regime regime,
                                                  Eigen::Index n1, Eigen::Index n2,
                                                  std::uint64_t seed) {
    if (n1 < 1 || n2 < 1) throw std::invalid_argument("generate_model: sample sizes must be positive");
    const ModelInfo info = model_info(model);
    const Eigen::VectorXd beta = detail::model_beta();
    const double alpha2 = regime == Regime::Alternative ? info.alt_intercept : 0.0;

    auto rng = make_rng(derive_seed(seed, 1));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif01(0.0, 1.0);

    auto fill = [&](Eigen::Index n, int which_sample, double intercept) {
        Dataset data;
        data.y.resize(n, info.p);
        data.x.resize(n, info.d);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::RowVectorXd x(info.d);
            // Covariates.
            if (which_sample == 1) {
                for (int j = 0; j < info.d; ++j) x(j) = gauss(rng);
            } else {
                switch (model) {
                    case SimModel::M1:
                        for (int j = 0; j < info.d; ++j) x(j) = gauss(rng);
                        x(0) += 1.0;
                        x(1) += 1.0;
                        x(2) -= 1.0;
                        x(3) -= 1.0;
                        break;
                    case SimModel::M5:
                        for (int j = 0; j < 5; ++j) {
                            const double r = 0.5 + 0.5 * unif01(rng);
                            const double u = 2.0 * M_PI * unif01(rng);
                            x(2 * j) = r * std::sin(u);
                            x(2 * j + 1) = r * std::cos(u);
                        }
                        break;
                    default:
                        detail::uniform_shell_row(x, rng);
                        break;
                }
            }
            data.x.row(i) = x;

            // Responses.
            switch (model) {
                case SimModel::M1:
                case SimModel::M2:
                    data.y(i, 0) = intercept + beta.dot(x) + gauss(rng);
                    break;
                case SimModel::M3:
                    data.y(i, 0) = intercept + detail::m3_mean(x) + gauss(rng);
                    break;
                case SimModel::M4:
                case SimModel::M6:
                    data.y(i, 0) = intercept + detail::hetero_mean(x) +
                                   detail::hetero_scale(x) * gauss(rng);
                    break;
                case SimModel::M5:
                    data.y(i, 0) = intercept + detail::donut_mean(x, beta) + gauss(rng);
                    break;
                case SimModel::M7: {
                    const double u = 2.0 * M_PI * unif01(rng);
                    const double base = intercept + beta.dot(x);
                    data.y(i, 0) = base + (u / (2.0 * M_PI)) * std::sin(2.0 * u) + 0.1 * gauss(rng);
                    data.y(i, 1) = base + (u / (2.0 * M_PI)) * std::cos(2.0 * u) + 0.1 * gauss(rng);
                    break;
                }
            }
        }
        return data;
    };

    Dataset data1 = fill(n1, 1, 0.0);
    Dataset data2 = fill(n2, 2, alpha2);
    return {std::move(data1), std::move(data2)};
}

/// The first sample's true conditional law, for the oracle benchmark.
inline ConditionalSampler true_conditional_sampler(SimModel model) {
    const Eigen::VectorXd beta = detail::model_beta();
    switch (model) {
        case SimModel::M1:
        case SimModel::M2:
            return [beta](const Eigen::RowVectorXd& x, std::mt19937_64& rng) {
                std::normal_distribution<double> gauss(0.0, 1.0);
                Eigen::RowVectorXd y(1);
                y(0) = beta.dot(x) + gauss(rng);
                return y;
            };
        case SimModel::M3:
            return [](const Eigen::RowVectorXd& x, std::mt19937_64& rng) {
                std::normal_distribution<double> gauss(0.0, 1.0);
                Eigen::RowVectorXd y(1);
                y(0) = detail::m3_mean(x) + gauss(rng);
                return y;
            };
        case SimModel::M4:
        case SimModel::M6:
            return [](const Eigen::RowVectorXd& x, std::mt19937_64& rng) {
                std::normal_distribution<double> gauss(0.0, 1.0);
                Eigen::RowVectorXd y(1);
                y(0) = detail::hetero_mean(x) + detail::hetero_scale(x) * gauss(rng);
                return y;
            };
        case SimModel::M5:
            return [beta](const Eigen::RowVectorXd& x, std::mt19937_64& rng) {
                std::normal_distribution<double> gauss(0.0, 1.0);
                Eigen::RowVectorXd y(1);
                y(0) = detail::donut_mean(x, beta) + gauss(rng);
                return y;
            };
        case SimModel::M7:
            return [beta](const Eigen::RowVectorXd& x, std::mt19937_64& rng) {
                std::normal_distribution<double> gauss(0.0, 1.0);
                std::uniform_real_distribution<double> unif01(0.0, 1.0);
                const double u = 2.0 * M_PI * unif01(rng);
                const double base = beta.dot(x);
                Eigen::RowVectorXd y(2);
                y(0) = base + (u / (2.0 * M_PI)) * std::sin(2.0 * u) + 0.1 * gauss(rng);
                y(1) = base + (u / (2.0 * M_PI)) * std::cos(2.0 * u) + 0.1 * gauss(rng);
                return y;
            };
    }
    throw std::invalid_argument("true_conditional_sampler: unknown model");
}

/// Drops rows of data2 whose covariates leave the axis-aligned envelope of
/// data1's covariates, so the generator never extrapolates. `dropped`
/// reports how many rows went.
inline Dataset trim_support(const Dataset& data2, const Dataset& data1, int* dropped = nullptr) {
    if (data1.d() != data2.d())
        throw std::invalid_argument("trim_support: covariate dimensions differ");
    const Eigen::RowVectorXd lo = data1.x.colwise().minCoeff();
    const Eigen::RowVectorXd hi = data1.x.colwise().maxCoeff();
    std::vector<Eigen::Index> keep;
    keep.reserve(static_cast<std::size_t>(data2.n()));
    for (Eigen::Index i = 0; i < data2.n(); ++i) {
        const auto row = data2.x.row(i);
        if ((row.array() >= lo.array()).all() && (row.array() <= hi.array()).all())
            keep.push_back(i);
    }
    if (dropped) *dropped = static_cast<int>(data2.n() - static_cast<Eigen::Index>(keep.size()));
    if (keep.empty())
        throw std::runtime_error(
            "trim_support: every row of the second sample falls outside the first sample's "
            "covariate envelope; increase n1 or disable trimming");
    return data2.select(keep);
}

}  // namespace cdet
