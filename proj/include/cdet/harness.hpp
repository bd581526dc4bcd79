#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cdet/dataset.hpp"
#include "cdet/gca.hpp"
#include "cdet/mdn.hpp"
#include "cdet/permutation.hpp"
#include "cdet/sim_models.hpp"

namespace cdet {

enum class TestKind { Gp, GpAdaptive, GcaNn, GcaLlr, OracleNn, OracleLlr };

inline std::string test_kind_name(TestKind kind) {
    switch (kind) {
        case TestKind::Gp: return "gp";
        case TestKind::GpAdaptive: return "gp-adaptive";
        case TestKind::GcaNn: return "gca-nn";
        case TestKind::GcaLlr: return "gca-llr";
        case TestKind::OracleNn: return "oracle-nn";
        case TestKind::OracleLlr: return "oracle-llr";
    }
    return "?";
}

inline TestKind test_kind_from_name(const std::string& name) {
    if (name == "gp") return TestKind::Gp;
    if (name == "gp-adaptive") return TestKind::GpAdaptive;
    if (name == "gca-nn") return TestKind::GcaNn;
    if (name == "gca-llr") return TestKind::GcaLlr;
    if (name == "oracle-nn") return TestKind::OracleNn;
    if (name == "oracle-llr") return TestKind::OracleLlr;
    throw std::invalid_argument("unknown test kind: " + name);
}

struct SimulationSpec {
    SimModel model = SimModel::M1;
    Regime regime = Regime::Null;
    Eigen::Index n1 = 1000;
    Eigen::Index n2 = 1000;
    TestKind test = TestKind::GcaNn;
    double alpha = 0.05;
    std::uint64_t base_seed = 1;
    int trials = 100;
    int n_perm = 300;
    double bin_side = 0.0;  // 0 -> default rule
    bool trim = true;
    int workers = 1;

    // Architecture overrides; empty/zero means "use the model defaults".
    std::vector<int> mdn_hidden;
    std::vector<int> clf_hidden;
    int mixtures = 0;
    MdnTraining mdn_training;
    ClassifierTraining clf_training;
};

struct TrialRecord {
    std::uint64_t seed = 0;
    int reject = -1;  // 1 reject, 0 accept, -1 failed
    std::string error;
};

struct TrialTable {
    std::string label;
    double alpha = 0.0;
    std::vector<TrialRecord> trials;
    int rejections = 0;
    int completed = 0;
    int failed = 0;
    double rejection_rate = 0.0;
    double wall_seconds = 0.0;

    void finalize() {
        rejections = completed = failed = 0;
        for (const auto& t : trials) {
            if (t.reject < 0)
                ++failed;
            else {
                ++completed;
                rejections += t.reject;
            }
        }
        rejection_rate =
            completed > 0 ? static_cast<double>(rejections) / static_cast<double>(completed)
                          : 0.0;
    }

    std::string to_text() const {
        std::ostringstream os;
        char buf[64];
        os << "configuration        trials  completed  failed  rejections  rate\n";
        std::snprintf(buf, sizeof(buf), "%-20s %6zu  %9d  %6d  %10d  %.4f\n", label.c_str(),
                      trials.size(), completed, failed, rejections, rejection_rate);
        os << buf;
        return os.str();
    }

    /// Per-trial seed ledger, one row per trial.
    std::string to_csv() const {
        std::ostringstream os;
        os << "trial,seed,reject,error\n";
        for (std::size_t t = 0; t < trials.size(); ++t) {
            os << t << ',' << trials[t].seed << ',' << trials[t].reject << ','
               << trials[t].error << '\n';
        }
        return os.str();
    }
};

namespace detail {

inline MdnSpec build_mdn_spec(const SimulationSpec& spec, const ModelInfo& info) {
    MdnSpec mdn = MdnSpec::make(info.p, info.d, spec.mixtures > 0 ? spec.mixtures : info.mixtures,
                                spec.mdn_hidden.empty() ? info.mdn_hidden : spec.mdn_hidden);
    mdn.training = spec.mdn_training;
    return mdn;
}

inline ClassifierSpec build_clf_spec(const SimulationSpec& spec, const ModelInfo& info,
                                     bool linear) {
    ClassifierSpec clf;
    clf.kind = linear ? ClassifierKind::Linear : ClassifierKind::Neural;
    clf.hidden_widths = spec.clf_hidden.empty() ? info.clf_hidden : spec.clf_hidden;
    clf.training = spec.clf_training;
    return clf;
}

inline bool run_single_trial(const SimulationSpec& spec, std::uint64_t trial_seed) {
    auto [d1, d2] = generate_model(spec.model, spec.regime, spec.n1, spec.n2,
                                   derive_seed(trial_seed, 1));
    if (spec.trim) d2 = trim_support(d2, d1);
    const ModelInfo info = model_info(spec.model);
    const std::uint64_t test_seed = derive_seed(trial_seed, 2);

    switch (spec.test) {
        case TestKind::Gp:
            return gp_cdet(d1, d2, spec.alpha, spec.bin_side, build_mdn_spec(spec, info),
                           spec.n_perm, test_seed)
                .reject;
        case TestKind::GpAdaptive:
            return adaptive_gp_cdet(d1, d2, spec.alpha, build_mdn_spec(spec, info), spec.n_perm,
                                    test_seed)
                .reject;
        case TestKind::GcaNn:
            return gca_cdet(d1, d2, spec.alpha, build_mdn_spec(spec, info),
                            build_clf_spec(spec, info, false), test_seed)
                .reject;
        case TestKind::GcaLlr:
            return gca_cdet(d1, d2, spec.alpha, build_mdn_spec(spec, info),
                            build_clf_spec(spec, info, true), test_seed)
                .reject;
        case TestKind::OracleNn:
            return oracle_gca_cdet(true_conditional_sampler(spec.model), d2, spec.alpha,
                                   build_clf_spec(spec, info, false), test_seed)
                .reject;
        case TestKind::OracleLlr:
            return oracle_gca_cdet(true_conditional_sampler(spec.model), d2, spec.alpha,
                                   build_clf_spec(spec, info, true), test_seed)
                .reject;
    }
    throw std::invalid_argument("run_trials: unknown test kind");
}

/// Runs `count` independent jobs over a small worker pool. Each job owns
/// its slot, so results are identical for any worker count.
template <typename Job>
void parallel_for(int count, int workers, Job&& job) {
    workers = std::max(1, std::min(workers, count));
    if (workers == 1) {
        for (int t = 0; t < count; ++t) job(t);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int t = next.fetch_add(1); t < count; t = next.fetch_add(1)) job(t);
        });
    for (auto& th : pool) th.join();
}

}  // namespace detail

/// Repeats the configured test across seeded trials and aggregates the
/// rejection frequency. Per-trial failures are recorded, counted, and
/// excluded from the rate, never silently dropped.
inline TrialTable run_trials(const SimulationSpec& spec) {
    if (spec.trials < 0) throw std::invalid_argument("run_trials: negative trial count");
    const auto start = std::chrono::steady_clock::now();

    TrialTable table;
    table.label = "model-" + std::to_string(static_cast<int>(spec.model)) + "/" +
                  (spec.regime == Regime::Null ? "null" : "alternative") + "/" +
                  test_kind_name(spec.test);
    table.alpha = spec.alpha;
    table.trials.resize(static_cast<std::size_t>(spec.trials));

    detail::parallel_for(spec.trials, spec.workers, [&](int t) {
        auto& rec = table.trials[static_cast<std::size_t>(t)];
        rec.seed = derive_seed(spec.base_seed, static_cast<std::uint64_t>(t));
        try {
            rec.reject = detail::run_single_trial(spec, rec.seed) ? 1 : 0;
        } catch (const std::exception& e) {
            rec.reject = -1;
            rec.error = e.what();
        }
    });

    table.finalize();
    table.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return table;
}

/// Null-by-construction experiment on a user-supplied dataset: draw two
/// disjoint subsamples per trial, shift the second sample's responses, and
/// run the configured test. shift = 0 keeps the null true by exchangeable
/// subsampling.
inline TrialTable real_data_split_experiment(const Dataset& data, Eigen::Index n1,
                                             Eigen::Index n2, double shift, int trials,
                                             TestKind test, double alpha, std::uint64_t seed,
                                             int workers = 1, int n_perm = 300,
                                             std::vector<int> mdn_hidden = {64, 32},
                                             int mixtures = 2,
                                             std::vector<int> clf_hidden = {32},
                                             bool trim = true) {
    if (n1 + n2 > data.n())
        throw std::invalid_argument("real_data_split_experiment: n1 + n2 exceeds dataset rows");
    if (n1 < 1 || n2 < 1)
        throw std::invalid_argument("real_data_split_experiment: sample sizes must be positive");
    if (test == TestKind::OracleNn || test == TestKind::OracleLlr)
        throw std::invalid_argument(
            "real_data_split_experiment: oracle tests need a known generative law");
    const auto start = std::chrono::steady_clock::now();

    TrialTable table;
    table.label = "data-split/" + test_kind_name(test);
    table.alpha = alpha;
    table.trials.resize(static_cast<std::size_t>(trials));

    MdnSpec mdn = MdnSpec::make(static_cast<int>(data.p()), static_cast<int>(data.d()), mixtures,
                                std::move(mdn_hidden));
    ClassifierSpec clf;
    clf.kind = test == TestKind::GcaLlr ? ClassifierKind::Linear : ClassifierKind::Neural;
    clf.hidden_widths = std::move(clf_hidden);

    detail::parallel_for(trials, workers, [&](int t) {
        auto& rec = table.trials[static_cast<std::size_t>(t)];
        rec.seed = derive_seed(seed, static_cast<std::uint64_t>(t));
        try {
            auto rng = make_rng(derive_seed(rec.seed, 1));
            const auto order = random_permutation(data.n(), rng);
            std::vector<Eigen::Index> idx1(order.begin(), order.begin() + n1);
            std::vector<Eigen::Index> idx2(order.begin() + n1, order.begin() + n1 + n2);
            Dataset d1 = data.select(idx1);
            Dataset d2 = data.select(idx2);
            d2.y.array() += shift;
            if (trim) d2 = trim_support(d2, d1);

            const std::uint64_t test_seed = derive_seed(rec.seed, 2);
            bool reject = false;
            switch (test) {
                case TestKind::Gp:
                    reject = gp_cdet(d1, d2, alpha, 0.0, mdn, n_perm, test_seed).reject;
                    break;
                case TestKind::GpAdaptive:
                    reject = adaptive_gp_cdet(d1, d2, alpha, mdn, n_perm, test_seed).reject;
                    break;
                default:
                    reject = gca_cdet(d1, d2, alpha, mdn, clf, test_seed).reject;
                    break;
            }
            rec.reject = reject ? 1 : 0;
        } catch (const std::exception& e) {
            rec.reject = -1;
            rec.error = e.what();
        }
    });

    table.finalize();
    table.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return table;
}

}  // namespace cdet
