#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cdet/csv.hpp"
#include "cdet/gca.hpp"
#include "cdet/harness.hpp"
#include "cdet/mdn_io.hpp"
#include "cdet/permutation.hpp"
#include "cdet/report.hpp"

namespace cdet {

/// Everything a CLI invocation needs, validated up front so configuration
/// mistakes surface before any computation starts.
struct RunConfig {
    enum class Command { Test, Simulate, TrainGenerator };
    Command command = Command::Test;

    // Tabular inputs (test, train-generator, simulate --data).
    std::string data1_path;
    std::string data2_path;
    std::vector<std::string> response_cols;
    std::vector<std::string> covariate_cols;

    std::string method = "gca-nn";  // gp | gp-adaptive | gca-nn | gca-llr
    std::string generator_in;       // reuse a saved generator
    std::string generator_out;      // persist the trained generator

    double alpha = 0.05;
    std::uint64_t seed = 1;
    int n_perm = 500;
    double bin_side = 0.0;  // 0 -> default rule
    int mixtures = 2;
    std::vector<int> mdn_hidden = {64, 32};
    std::vector<int> clf_hidden = {32};
    bool trim = true;
    int workers = 1;
    std::string out_path;

    // simulate
    int model = 1;
    std::string regime = "null";
    int trials = 100;
    long n1 = 1000;
    long n2 = 1000;
    std::string sim_test = "gca-nn";
    std::string data_path;  // switches simulate into the data-split experiment
    double shift = 0.0;

    void validate() const {
        if (alpha <= 0.0 || alpha >= 1.0)
            throw std::invalid_argument("config: alpha must lie in (0, 1)");
        if (workers < 1) throw std::invalid_argument("config: workers must be positive");
        if (n_perm < 1) throw std::invalid_argument("config: n-perm must be positive");
        if (mixtures < 1) throw std::invalid_argument("config: g-components must be positive");
        if (command == Command::Simulate) {
            if (trials < 0) throw std::invalid_argument("config: trials must be non-negative");
            if (data_path.empty()) {
                if (model < 1 || model > 7)
                    throw std::invalid_argument("config: model must lie in 1..7");
                if (regime != "null" && regime != "alternative")
                    throw std::invalid_argument("config: regime must be null or alternative");
            }
            (void)test_kind_from_name(sim_test);
        } else {
            if (response_cols.empty() || covariate_cols.empty())
                throw std::invalid_argument(
                    "config: --response and --covariates must name at least one column each");
            if (command == Command::Test && method != "gp" && method != "gp-adaptive" &&
                method != "gca-nn" && method != "gca-llr")
                throw std::invalid_argument("config: unknown method '" + method + "'");
            if (command == Command::TrainGenerator && out_path.empty())
                throw std::invalid_argument("config: train-generator needs --out for the model");
        }
    }
};

struct RunOutput {
    TestReport report;
    std::string human;      // aligned summary for standard output
    std::string trial_csv;  // per-trial ledger (simulate only)
};

namespace detail {

inline void add_skipped(TestReport& report, const std::string& key,
                        const std::vector<long>& skipped) {
    report.add(key, skipped.size());
    if (!skipped.empty()) {
        std::ostringstream os;
        for (std::size_t i = 0; i < skipped.size() && i < 20; ++i)
            os << (i ? ";" : "") << skipped[i];
        if (skipped.size() > 20) os << ";...";
        report.add(key + "_rows", os.str());
    }
}

inline std::string joined(const std::vector<double>& values) {
    std::ostringstream os;
    char buf[40];
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.10g", values[i]);
        os << (i ? ";" : "") << buf;
    }
    return os.str();
}

inline RunOutput run_test(const RunConfig& cfg) {
    RunOutput out;
    TestReport& rep = out.report;
    rep.add("command", "test");
    rep.add("method", cfg.method);
    rep.add("hypothesis", "H0: P1(Y|X) = P2(Y|X)");
    rep.add("alpha", cfg.alpha);
    rep.add("seed", cfg.seed);

    const LoadResult l1 = load_table(cfg.data1_path, cfg.response_cols, cfg.covariate_cols);
    const LoadResult l2 = load_table(cfg.data2_path, cfg.response_cols, cfg.covariate_cols);
    rep.add("n1", l1.data.n());
    rep.add("n2_before_trim", l2.data.n());
    add_skipped(rep, "data1_skipped", l1.skipped_rows);
    add_skipped(rep, "data2_skipped", l2.skipped_rows);

    Dataset d2 = l2.data;
    int dropped = 0;
    if (cfg.trim) d2 = trim_support(d2, l1.data, &dropped);
    rep.add("n2_after_trim", d2.n());
    rep.add("trim_dropped", dropped);

    MdnGenerator gen;
    if (!cfg.generator_in.empty()) {
        gen = load_generator(cfg.generator_in);
        rep.add("generator_source", cfg.generator_in);
    } else {
        MdnSpec spec = MdnSpec::make(static_cast<int>(l1.data.p()),
                                     static_cast<int>(l1.data.d()), cfg.mixtures,
                                     cfg.mdn_hidden);
        gen = train_mdn(l1.data, spec, derive_seed(cfg.seed, 0));
        rep.add("generator_source", "trained");
        rep.add("generator_epochs", gen.summary.epochs_run);
        rep.add("generator_best_epoch", gen.summary.best_epoch);
        rep.add("generator_best_validation_nll", gen.summary.best_validation_nll);
        rep.add("generator_warnings", gen.summary.warnings.size());
    }
    if (!cfg.generator_out.empty()) {
        save_generator(gen, cfg.generator_out);
        rep.add("generator_saved_to", cfg.generator_out);
    }

    std::ostringstream human;
    human << "conditional distribution equality test (" << cfg.method << ")\n";
    bool reject = false;
    double p_or_stat = 0.0;
    if (cfg.method == "gp" || cfg.method == "gp-adaptive") {
        const PermTestOutcome res =
            cfg.method == "gp"
                ? gp_cdet_with_generator(gen, d2, cfg.alpha, cfg.bin_side, cfg.n_perm, cfg.seed)
                : adaptive_gp_cdet_with_generator(gen, d2, cfg.alpha, cfg.n_perm, cfg.seed);
        rep.add("u_statistic", res.u_stat);
        rep.add("p_value", res.p_value);
        rep.add("critical_value", res.critical_value);
        rep.add("n_permutations", res.n_permutations);
        rep.add("decision_level", res.alpha);
        rep.add("bin_side", res.side);
        rep.add("cells_per_axis", res.cells_per_axis);
        rep.add("clamped_points", res.clamped);
        if (!res.scale_sides.empty()) {
            rep.add("scale_sides", joined(res.scale_sides));
            rep.add("scale_p_values", joined(res.scale_p_values));
        }
        reject = res.reject;
        p_or_stat = res.p_value;
        human << "  U statistic      " << res.u_stat << "\n"
              << "  p-value          " << res.p_value << "\n"
              << "  critical value   " << res.critical_value << "\n";
    } else {
        ClassifierSpec clf;
        clf.kind = cfg.method == "gca-llr" ? ClassifierKind::Linear : ClassifierKind::Neural;
        clf.hidden_widths = cfg.clf_hidden;
        const AccTestOutcome res = gca_cdet_with_generator(gen, d2, cfg.alpha, clf, cfg.seed);
        rep.add("e1_hat", res.e1_hat);
        rep.add("e0_hat", res.e0_hat);
        rep.add("statistic", res.statistic);
        rep.add("z_alpha", res.z_alpha);
        rep.add("n_train_per_class", res.n_train_per_class);
        rep.add("n_eval_per_class", res.n_eval_per_class);
        rep.add("split_dropped_rows", res.dropped_rows);
        reject = res.reject;
        p_or_stat = res.statistic;
        human << "  error rate e1    " << res.e1_hat << "\n"
              << "  error rate e0    " << res.e0_hat << "\n"
              << "  z statistic      " << res.statistic << "\n"
              << "  reject if below  " << -res.z_alpha << "\n";
    }
    rep.add("reject", reject);
    rep.add("decision", reject ? "reject H0" : "fail to reject H0");
    human << "  decision         " << (reject ? "reject H0" : "fail to reject H0") << "\n";
    out.human = human.str();
    (void)p_or_stat;
    return out;
}

inline RunOutput run_simulate(const RunConfig& cfg) {
    RunOutput out;
    TestReport& rep = out.report;
    rep.add("command", "simulate");

    TrialTable table;
    if (cfg.data_path.empty()) {
        SimulationSpec spec;
        spec.model = model_from_number(cfg.model);
        spec.regime = cfg.regime == "alternative" ? Regime::Alternative : Regime::Null;
        spec.n1 = cfg.n1;
        spec.n2 = cfg.n2;
        spec.test = test_kind_from_name(cfg.sim_test);
        spec.alpha = cfg.alpha;
        spec.base_seed = cfg.seed;
        spec.trials = cfg.trials;
        spec.n_perm = cfg.n_perm;
        spec.bin_side = cfg.bin_side;
        spec.trim = cfg.trim;
        spec.workers = cfg.workers;
        if (cfg.mixtures > 0) spec.mixtures = cfg.mixtures;
        table = run_trials(spec);
        rep.add("model", cfg.model);
        rep.add("regime", cfg.regime);
    } else {
        const LoadResult loaded =
            load_table(cfg.data_path, cfg.response_cols, cfg.covariate_cols);
        table = real_data_split_experiment(loaded.data, cfg.n1, cfg.n2, cfg.shift, cfg.trials,
                                           test_kind_from_name(cfg.sim_test), cfg.alpha,
                                           cfg.seed, cfg.workers, cfg.n_perm, cfg.mdn_hidden,
                                           cfg.mixtures, cfg.clf_hidden, cfg.trim);
        rep.add("data", cfg.data_path);
        rep.add("shift", cfg.shift);
    }
    rep.add("test", cfg.sim_test);
    rep.add("n1", cfg.n1);
    rep.add("n2", cfg.n2);
    rep.add("alpha", cfg.alpha);
    rep.add("seed", cfg.seed);
    rep.add("trials", table.trials.size());
    rep.add("completed", table.completed);
    rep.add("failed", table.failed);
    rep.add("rejections", table.rejections);
    rep.add("rejection_rate", table.rejection_rate);
    rep.add("wall_seconds", table.wall_seconds);

    out.human = table.to_text();
    out.trial_csv = table.to_csv();
    return out;
}

inline RunOutput run_train_generator(const RunConfig& cfg) {
    RunOutput out;
    TestReport& rep = out.report;
    rep.add("command", "train-generator");
    rep.add("seed", cfg.seed);

    const LoadResult l1 = load_table(cfg.data1_path, cfg.response_cols, cfg.covariate_cols);
    rep.add("n1", l1.data.n());
    add_skipped(rep, "data1_skipped", l1.skipped_rows);

    MdnSpec spec = MdnSpec::make(static_cast<int>(l1.data.p()), static_cast<int>(l1.data.d()),
                                 cfg.mixtures, cfg.mdn_hidden);
    const MdnGenerator gen = train_mdn(l1.data, spec, derive_seed(cfg.seed, 0));
    save_generator(gen, cfg.out_path);
    rep.add("generator_epochs", gen.summary.epochs_run);
    rep.add("generator_best_epoch", gen.summary.best_epoch);
    rep.add("generator_best_validation_nll", gen.summary.best_validation_nll);
    rep.add("generator_warnings", gen.summary.warnings.size());
    rep.add("generator_saved_to", cfg.out_path);

    std::ostringstream human;
    human << "trained mixture density generator on " << l1.data.n() << " rows; saved to "
          << cfg.out_path << "\n";
    out.human = human.str();
    return out;
}

}  // namespace detail

/// Dispatches a validated configuration, writes the report (and trial
/// ledger) when an output path is set, and returns everything printable.
inline RunOutput run(const RunConfig& cfg) {
    cfg.validate();
    RunOutput out;
    switch (cfg.command) {
        case RunConfig::Command::Test: out = detail::run_test(cfg); break;
        case RunConfig::Command::Simulate: out = detail::run_simulate(cfg); break;
        case RunConfig::Command::TrainGenerator: out = detail::run_train_generator(cfg); break;
    }
    out.report.add("timestamp", iso_timestamp());
    // train-generator uses --out for the model file itself.
    if (!cfg.out_path.empty() && cfg.command != RunConfig::Command::TrainGenerator) {
        out.report.write(cfg.out_path);
        if (!out.trial_csv.empty()) {
            std::ofstream ledger(cfg.out_path + ".trials.csv");
            ledger << out.trial_csv;
        }
    }
    return out;
}

}  // namespace cdet
