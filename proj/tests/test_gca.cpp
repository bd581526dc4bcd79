#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "cdet/classifier.hpp"
#include "cdet/gca.hpp"

using namespace cdet;

namespace {

Dataset gaussian_cloud(Eigen::Index n, double shift, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd y(n, 1), x(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i, 0) = shift + gauss(rng);
        x(i, 0) = gauss(rng);
    }
    return Dataset{y, x};
}

}  // namespace

TEST_CASE("norm_ppf inverts the standard normal CDF") {
    REQUIRE(norm_ppf(0.5) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(norm_ppf(0.975) == Catch::Approx(1.959963984540054).margin(1e-9));
    REQUIRE(norm_ppf(0.95) == Catch::Approx(1.6448536269514722).margin(1e-9));
    REQUIRE(norm_ppf(0.05) == Catch::Approx(-1.6448536269514722).margin(1e-9));
    REQUIRE_THROWS_AS(norm_ppf(0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(norm_ppf(1.0), std::invalid_argument);
}

TEST_CASE("logistic loss hand values and stability") {
    REQUIRE(logistic_loss(0.0, 1) == Catch::Approx(std::log(2.0)).margin(1e-15));
    REQUIRE(logistic_loss(0.0, 0) == Catch::Approx(std::log(2.0)).margin(1e-15));
    REQUIRE(logistic_loss(2.0, 1) == Catch::Approx(-2.0 + std::log1p(std::exp(2.0))).margin(1e-12));
    REQUIRE(logistic_loss(2.0, 1) == Catch::Approx(0.126928).epsilon(1e-4));
    // Stable far from zero in both directions.
    REQUIRE(std::isfinite(logistic_loss(1000.0, 1)));
    REQUIRE(logistic_loss(1000.0, 1) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(logistic_loss(-1000.0, 0) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE_THROWS_AS(logistic_loss(std::numeric_limits<double>::infinity(), 1),
                      std::invalid_argument);
}

TEST_CASE("perfectly separated classes train to near-zero loss") {
    std::mt19937_64 rng(41);
    const Dataset pos = gaussian_cloud(100, 5.0, rng);
    const Dataset neg = gaussian_cloud(100, -5.0, rng);
    for (auto kind : {ClassifierKind::Linear, ClassifierKind::Neural}) {
        ClassifierSpec spec;
        spec.kind = kind;
        const Classifier clf = fit_classifier(pos, neg, spec, 7);
        double loss = 0.0;
        const Eigen::VectorXd sp = clf.score_batch(pos);
        const Eigen::VectorXd sn = clf.score_batch(neg);
        for (Eigen::Index i = 0; i < sp.size(); ++i) loss += logistic_loss(sp(i), 1);
        for (Eigen::Index i = 0; i < sn.size(); ++i) loss += logistic_loss(sn(i), 0);
        loss /= static_cast<double>(sp.size() + sn.size());
        REQUIRE(loss < 0.05);
    }
}

TEST_CASE("identical class distributions give near-zero linear coefficients") {
    std::mt19937_64 rng(42);
    const Dataset pos = gaussian_cloud(1000, 0.0, rng);
    const Dataset neg = gaussian_cloud(1000, 0.0, rng);
    ClassifierSpec spec;
    spec.kind = ClassifierKind::Linear;
    const Classifier clf = fit_classifier(pos, neg, spec, 3);
    REQUIRE(clf.coef.norm() < 0.2);

    std::mt19937_64 rng2(43);
    const Dataset ep = gaussian_cloud(500, 0.0, rng2);
    const Dataset en = gaussian_cloud(500, 0.0, rng2);
    const auto [e1, e0] = error_rates(clf, ep, en);
    const double accuracy = 1.0 - 0.5 * (e1 + e0);
    REQUIRE(accuracy == Catch::Approx(0.5).margin(0.1));
}

TEST_CASE("large identical samples shrink the linear coefficients") {
    std::mt19937_64 rng(44);
    const Dataset pos = gaussian_cloud(10000, 0.0, rng);
    const Dataset neg = gaussian_cloud(10000, 0.0, rng);
    ClassifierSpec spec;
    spec.kind = ClassifierKind::Linear;
    const Classifier clf = fit_classifier(pos, neg, spec, 3);
    REQUIRE(clf.coef.norm() < 0.1);
}

TEST_CASE("single-point classes order correctly") {
    Eigen::MatrixXd yp(1, 1), xp(1, 1), yn(1, 1), xn(1, 1);
    yp << 2.0;
    xp << 0.0;
    yn << -2.0;
    xn << 0.0;
    const Dataset pos{yp, xp}, neg{yn, xn};
    ClassifierSpec spec;
    spec.kind = ClassifierKind::Linear;
    const Classifier clf = fit_classifier(pos, neg, spec, 1);
    REQUIRE(clf.score(yp.row(0), xp.row(0)) > clf.score(yn.row(0), xn.row(0)));
}

TEST_CASE("fit_classifier rejects empty classes") {
    std::mt19937_64 rng(45);
    const Dataset pos = gaussian_cloud(10, 0.0, rng);
    Dataset empty;
    empty.y.resize(0, 1);
    empty.x.resize(0, 1);
    ClassifierSpec spec;
    REQUIRE_THROWS_AS(fit_classifier(pos, empty, spec, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(fit_classifier(empty, pos, spec, 1), std::invalid_argument);
}

TEST_CASE("constant classifiers produce the degenerate error-rate pairs") {
    std::mt19937_64 rng(46);
    const Dataset ep = gaussian_cloud(50, 0.0, rng);
    const Dataset en = gaussian_cloud(50, 0.0, rng);

    Classifier always_one;
    always_one.spec.kind = ClassifierKind::Linear;
    always_one.spec.decision_threshold = 0.0;
    always_one.standardize.shift = Eigen::VectorXd::Zero(2);
    always_one.standardize.scale = Eigen::VectorXd::Ones(2);
    always_one.coef = Eigen::VectorXd::Zero(2);
    always_one.intercept = 1e6;
    auto [e1, e0] = error_rates(always_one, ep, en);
    REQUIRE(e1 == 0.0);
    REQUIRE(e0 == 1.0);

    always_one.intercept = -1e-9;  // just below the threshold
    std::tie(e1, e0) = error_rates(always_one, ep, en);
    REQUIRE(e1 == 1.0);
    REQUIRE(e0 == 0.0);
}

TEST_CASE("random scores keep both error rates near one half") {
    std::mt19937_64 rng(47);
    std::bernoulli_distribution coin(0.5);
    Eigen::Index n = 1000;
    int miss1 = 0, miss0 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!coin(rng)) ++miss1;
        if (coin(rng)) ++miss0;
    }
    const double e1 = static_cast<double>(miss1) / n;
    const double e0 = static_cast<double>(miss0) / n;
    REQUIRE(e1 == Catch::Approx(0.5).margin(0.05));
    REQUIRE(e0 == Catch::Approx(0.5).margin(0.05));
}

TEST_CASE("acc_statistic hand values") {
    REQUIRE(acc_statistic(0.5, 0.5, 100) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(acc_statistic(0.4, 0.4, 100) == Catch::Approx(-2.8868).margin(1e-4));
    // Degenerate rates clamp to 1/(2n) before the variance.
    REQUIRE(acc_statistic(0.0, 0.0, 100) == Catch::Approx(-99.2).margin(0.1));
    REQUIRE_THROWS_AS(acc_statistic(0.5, 0.5, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(acc_statistic(-0.1, 0.5, 10), std::invalid_argument);
}

TEST_CASE("acc_statistic is antisymmetric around chance accuracy") {
    std::mt19937_64 rng(48);
    std::uniform_real_distribution<double> unif(0.05, 0.95);
    for (int i = 0; i < 100; ++i) {
        const double e1 = unif(rng), e0 = unif(rng);
        REQUIRE(acc_statistic(1.0 - e1, 1.0 - e0, 200) ==
                Catch::Approx(-acc_statistic(e1, e0, 200)).margin(1e-12));
    }
}

TEST_CASE("rejection is monotone in e1 for fixed e0") {
    const Eigen::Index n = 100;
    double prev = acc_statistic(1.0 / (2.0 * n), 0.4, n);
    for (double e1 = 0.02; e1 <= 0.5 + 1e-9; e1 += 0.02) {
        const double cur = acc_statistic(e1, 0.4, n);
        REQUIRE(cur >= prev);
        prev = cur;
    }
}

TEST_CASE("gca pipeline splits into disjoint quarters and is deterministic") {
    std::mt19937_64 rng(49);
    const Dataset d2 = gaussian_cloud(203, 0.0, rng);  // forces 3 dropped rows
    ConditionalSampler sampler = [](const Eigen::RowVectorXd&, std::mt19937_64& r) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::RowVectorXd y(1);
        y(0) = gauss(r);
        return y;
    };
    ClassifierSpec spec;
    spec.kind = ClassifierKind::Linear;
    const auto a = gca_test_with_sampler(sampler, d2, 0.05, spec, 11, 1);
    const auto b = gca_test_with_sampler(sampler, d2, 0.05, spec, 11, 1);
    REQUIRE(a.statistic == b.statistic);
    REQUIRE(a.dropped_rows == 3);
    REQUIRE(a.n_eval_per_class == 50);
    REQUIRE(a.n_train_per_class == 50);
    REQUIRE(a.z_alpha == Catch::Approx(norm_ppf(0.95)));
    REQUIRE(a.reject == (a.statistic < -a.z_alpha));
}

TEST_CASE("oracle test rejects a clear mean shift and accepts the null") {
    std::mt19937_64 rng(50);
    ConditionalSampler truth = [](const Eigen::RowVectorXd& x, std::mt19937_64& r) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::RowVectorXd y(1);
        y(0) = x(0) + gauss(r);
        return y;
    };
    ClassifierSpec spec;
    spec.kind = ClassifierKind::Linear;

    // Alternative: responses shifted by 2.
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd y(400, 1), x(400, 1);
    for (Eigen::Index i = 0; i < 400; ++i) {
        x(i, 0) = gauss(rng);
        y(i, 0) = x(i, 0) + 2.0 + gauss(rng);
    }
    const auto shifted = oracle_gca_cdet(truth, Dataset{y, x}, 0.05, spec, 13);
    REQUIRE(shifted.reject);

    int rejections = 0;
    for (int t = 0; t < 20; ++t) {
        for (Eigen::Index i = 0; i < 400; ++i) {
            x(i, 0) = gauss(rng);
            y(i, 0) = x(i, 0) + gauss(rng);
        }
        const auto nul = oracle_gca_cdet(truth, Dataset{y, x}, 0.05, spec, 1000 + t);
        rejections += nul.reject ? 1 : 0;
    }
    REQUIRE(rejections <= 4);
}

TEST_CASE("gca input validation") {
    std::mt19937_64 rng(51);
    const Dataset d2 = gaussian_cloud(7, 0.0, rng);
    ConditionalSampler sampler = [](const Eigen::RowVectorXd&, std::mt19937_64&) {
        return Eigen::RowVectorXd::Zero(1);
    };
    ClassifierSpec spec;
    REQUIRE_THROWS_AS(gca_test_with_sampler(sampler, d2, 0.05, spec, 1, 1),
                      std::invalid_argument);
    const Dataset ok = gaussian_cloud(100, 0.0, rng);
    REQUIRE_THROWS_AS(gca_test_with_sampler(sampler, ok, 1.0, spec, 1, 1),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(gca_test_with_sampler(sampler, ok, 0.0, spec, 1, 1),
                      std::invalid_argument);
}

TEST_CASE("label-swap keeps rejection behaviour consistent") {
    // Swapping which sample plays class 1 at train and eval time flips the
    // classifier's sign but the decision frequency stays put.
    std::mt19937_64 rng(52);
    ClassifierSpec spec;
    spec.kind = ClassifierKind::Linear;
    int rej_a = 0, rej_b = 0;
    const int trials = 60;
    for (int t = 0; t < trials; ++t) {
        const Dataset pos_train = gaussian_cloud(80, 0.0, rng);
        const Dataset neg_train = gaussian_cloud(80, 0.0, rng);
        const Dataset pos_eval = gaussian_cloud(80, 0.0, rng);
        const Dataset neg_eval = gaussian_cloud(80, 0.0, rng);

        const Classifier ca = fit_classifier(pos_train, neg_train, spec, 100 + t);
        const auto [a1, a0] = error_rates(ca, pos_eval, neg_eval);
        rej_a += acc_statistic(a1, a0, 80) < -norm_ppf(0.95) ? 1 : 0;

        const Classifier cb = fit_classifier(neg_train, pos_train, spec, 100 + t);
        const auto [b1, b0] = error_rates(cb, neg_eval, pos_eval);
        rej_b += acc_statistic(b1, b0, 80) < -norm_ppf(0.95) ? 1 : 0;
    }
    REQUIRE(std::abs(rej_a - rej_b) <= static_cast<int>(0.15 * trials));
}
