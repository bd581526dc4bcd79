// Command-line front end: test two datasets for conditional distribution
// equality, run the simulation suite, or train and persist a generator.

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cdet/cli.hpp"

namespace {

void add_common_options(CLI::App* cmd, cdet::RunConfig& cfg) {
    cmd->add_option("--alpha", cfg.alpha, "significance level in (0, 1)");
    cmd->add_option("--seed", cfg.seed, "base random seed");
    cmd->add_option("--n-perm", cfg.n_perm, "Monte Carlo permutations for the gp tests");
    cmd->add_option("--bin-side", cfg.bin_side,
                    "hypercube side length in (0, 1]; 0 selects the default rule");
    cmd->add_option("--g-components", cfg.mixtures, "Gaussian mixture components");
    cmd->add_option("--mdn-hidden", cfg.mdn_hidden, "generator hidden layer widths");
    cmd->add_option("--classifier-hidden", cfg.clf_hidden, "classifier hidden layer widths");
    cmd->add_flag("--trim,!--no-trim", cfg.trim,
                  "drop second-sample rows outside the first sample's covariate envelope");
    cmd->add_option("--workers", cfg.workers, "worker threads for repeated trials");
    cmd->add_option("--out", cfg.out_path, "write the report (or trained generator) here");
}

void add_column_options(CLI::App* cmd, cdet::RunConfig& cfg, bool required) {
    auto* r = cmd->add_option("--response", cfg.response_cols,
                              "response column names (comma separated)")
                  ->delimiter(',');
    auto* c = cmd->add_option("--covariates", cfg.covariate_cols,
                              "covariate column names (comma separated)")
                  ->delimiter(',');
    if (required) {
        r->required();
        c->required();
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conditional distribution equality testing"};
    app.require_subcommand(1);
    cdet::RunConfig cfg;

    auto* test = app.add_subcommand("test", "test two datasets for P1(Y|X) = P2(Y|X)");
    test->add_option("data1", cfg.data1_path, "first-sample CSV (trains the generator)")
        ->required();
    test->add_option("data2", cfg.data2_path, "second-sample CSV (tested against)")->required();
    add_column_options(test, cfg, true);
    test->add_option("--method", cfg.method, "gp | gp-adaptive | gca-nn | gca-llr");
    test->add_option("--generator", cfg.generator_in, "reuse a saved generator file");
    test->add_option("--save-generator", cfg.generator_out, "persist the trained generator");
    add_common_options(test, cfg);

    auto* sim = app.add_subcommand("simulate", "repeated trials of a configured test");
    sim->add_option("--model", cfg.model, "synthetic model number 1..7");
    sim->add_option("--regime", cfg.regime, "null | alternative");
    sim->add_option("--test", cfg.sim_test,
                    "gp | gp-adaptive | gca-nn | gca-llr | oracle-nn | oracle-llr");
    sim->add_option("--trials", cfg.trials, "number of repetitions");
    sim->add_option("--n1", cfg.n1, "first-sample size");
    sim->add_option("--n2", cfg.n2, "second-sample size");
    sim->add_option("--data", cfg.data_path,
                    "run the data-split experiment on this CSV instead of a synthetic model");
    sim->add_option("--shift", cfg.shift, "response shift added to the second subsample");
    add_column_options(sim, cfg, false);
    add_common_options(sim, cfg);

    auto* train = app.add_subcommand("train-generator", "fit and save a conditional generator");
    train->add_option("data1", cfg.data1_path, "training CSV")->required();
    add_column_options(train, cfg, true);
    add_common_options(train, cfg);

    CLI11_PARSE(app, argc, argv);

    if (test->parsed())
        cfg.command = cdet::RunConfig::Command::Test;
    else if (sim->parsed())
        cfg.command = cdet::RunConfig::Command::Simulate;
    else
        cfg.command = cdet::RunConfig::Command::TrainGenerator;

    try {
        const cdet::RunOutput out = cdet::run(cfg);
        std::cout << out.human;
        std::cout << out.report.to_string();
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
