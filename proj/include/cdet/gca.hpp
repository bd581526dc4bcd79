#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>

#include "cdet/classifier.hpp"
#include "cdet/dataset.hpp"
#include "cdet/mdn.hpp"

namespace cdet {

struct AccTestOutcome {
    double e1_hat = 0.0;
    double e0_hat = 0.0;
    double statistic = 0.0;
    double z_alpha = 0.0;
    double alpha = 0.0;
    bool reject = false;
    Eigen::Index n_train_per_class = 0;
    Eigen::Index n_eval_per_class = 0;
    int dropped_rows = 0;
    int generator_epochs = 0;
};

/// Draws one response at a covariate row; the oracle variant plugs in the
/// true conditional law, the learned variant a trained generator.
using ConditionalSampler =
    std::function<Eigen::RowVectorXd(const Eigen::RowVectorXd& x, std::mt19937_64& rng)>;

/// Classification-accuracy test fed by an arbitrary conditional sampler.
/// data2 is split into quarters: generated-vs-held-out training halves fit
/// the classifier, the remaining quarters measure its error rates, and the
/// one-sided z-test rejects when accuracy significantly exceeds chance.
inline AccTestOutcome gca_test_with_sampler(const ConditionalSampler& sampler,
                                            const Dataset& data2, double alpha,
                                            const ClassifierSpec& clf_spec, std::uint64_t seed,
                                            Eigen::Index response_dim) {
    if (alpha <= 0.0 || alpha >= 1.0)
        throw std::invalid_argument("gca test: alpha must lie in (0, 1)");
    if (data2.n() < 8) throw std::invalid_argument("gca test: need n2 >= 8");

    auto split_rng = make_rng(derive_seed(seed, 10));
    const auto order = random_permutation(data2.n(), split_rng);
    const Eigen::Index quarter = data2.n() / 4;
    const int dropped = static_cast<int>(data2.n() - 4 * quarter);

    auto take = [&](Eigen::Index from, Eigen::Index count) {
        std::vector<Eigen::Index> idx(order.begin() + from, order.begin() + from + count);
        return data2.select(idx);
    };
    const Dataset d21 = take(0, 2 * quarter);
    const Dataset d221 = take(2 * quarter, quarter);
    const Dataset d222 = take(3 * quarter, quarter);

    // Synthetic responses on the first half's covariates.
    Dataset d_hat21;
    d_hat21.x = d21.x;
    d_hat21.y.resize(d21.n(), response_dim);
    auto gen_rng = make_rng(derive_seed(seed, 11));
    for (Eigen::Index i = 0; i < d21.n(); ++i)
        d_hat21.y.row(i) = sampler(d21.x.row(i), gen_rng);

    auto take_hat = [&](Eigen::Index from, Eigen::Index count) {
        Dataset out;
        out.y = d_hat21.y.middleRows(from, count);
        out.x = d_hat21.x.middleRows(from, count);
        return out;
    };
    const Dataset d_hat211 = take_hat(0, quarter);
    const Dataset d_hat212 = take_hat(quarter, quarter);

    const Classifier clf =
        fit_classifier(d_hat211, d221, clf_spec, derive_seed(seed, 12));
    const auto [e1, e0] = error_rates(clf, d_hat212, d222);

    AccTestOutcome out;
    out.e1_hat = e1;
    out.e0_hat = e0;
    out.statistic = acc_statistic(e1, e0, quarter);
    out.z_alpha = norm_ppf(1.0 - alpha);
    out.alpha = alpha;
    out.reject = out.statistic < -out.z_alpha;
    out.n_train_per_class = quarter;
    out.n_eval_per_class = quarter;
    out.dropped_rows = dropped;
    return out;
}

inline AccTestOutcome gca_cdet_with_generator(const MdnGenerator& gen, const Dataset& data2,
                                              double alpha, const ClassifierSpec& clf_spec,
                                              std::uint64_t seed) {
    if (data2.p() != gen.spec.p || data2.d() != gen.spec.d)
        throw std::invalid_argument("gca_cdet: generator and data dimensions differ");
    ConditionalSampler sampler = [&gen](const Eigen::RowVectorXd& x, std::mt19937_64& rng) {
        return Eigen::RowVectorXd(detail::sample_with_rng(gen, x, rng).transpose());
    };
    AccTestOutcome out =
        gca_test_with_sampler(sampler, data2, alpha, clf_spec, seed, gen.spec.p);
    out.generator_epochs = gen.summary.epochs_run;
    return out;
}

/// End-to-end classification-accuracy conditional distribution equality
/// test: learn the generator on data1, then run the split/classify/z-test
/// pipeline on data2.
inline AccTestOutcome gca_cdet(const Dataset& data1, const Dataset& data2, double alpha,
                               const MdnSpec& mdn_spec, const ClassifierSpec& clf_spec,
                               std::uint64_t seed) {
    if (data1.p() != data2.p() || data1.d() != data2.d())
        throw std::invalid_argument("gca_cdet: datasets have inconsistent dimensions");
    if (data2.n() < 8) throw std::invalid_argument("gca_cdet: need n2 >= 8");
    const MdnGenerator gen = train_mdn(data1, mdn_spec, derive_seed(seed, 0));
    return gca_cdet_with_generator(gen, data2, alpha, clf_spec, seed);
}

/// Benchmark variant with the true conditional law standing in for a
/// learned generator.
inline AccTestOutcome oracle_gca_cdet(const ConditionalSampler& true_sampler,
                                      const Dataset& data2, double alpha,
                                      const ClassifierSpec& clf_spec, std::uint64_t seed) {
    return gca_test_with_sampler(true_sampler, data2, alpha, clf_spec, seed, data2.p());
}

}  // namespace cdet
