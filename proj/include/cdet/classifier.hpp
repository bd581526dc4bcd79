#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cdet/adam.hpp"
#include "cdet/affine_map.hpp"
#include "cdet/dataset.hpp"
#include "cdet/fnn.hpp"

namespace cdet {

/// Standard normal quantile Phi^{-1}(q). Acklam's rational approximation
/// polished by one Halley step; accurate to ~1e-15 over (0, 1).
inline double norm_ppf(double q) {
    if (q <= 0.0 || q >= 1.0)
        throw std::invalid_argument("norm_ppf: argument must lie in (0, 1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double q_low = 0.02425;
    double x;
    if (q < q_low) {
        const double u = std::sqrt(-2.0 * std::log(q));
        x = (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
            ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
    } else if (q <= 1.0 - q_low) {
        const double u = q - 0.5;
        const double t = u * u;
        x = (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * u /
            (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1.0);
    } else {
        const double u = std::sqrt(-2.0 * std::log(1.0 - q));
        x = -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
            ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
    }
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - q;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

/// Logistic classification loss -s r + log(1 + e^r), evaluated stably.
inline double logistic_loss(double r, int s) {
    if (!std::isfinite(r)) throw std::invalid_argument("logistic_loss: non-finite score");
    const double softplus = r > 30.0 ? r + std::log1p(std::exp(-r)) : std::log1p(std::exp(r));
    return -static_cast<double>(s) * r + softplus;
}

enum class ClassifierKind { Neural, Linear };

struct ClassifierTraining {
    int max_epochs = 300;
    double learning_rate = 1e-3;
    int batch_size = 64;
    int patience = 30;
};

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::Neural;
    std::vector<int> hidden_widths = {32};  // neural only
    ClassifierTraining training;
    double decision_threshold = 0.0;  // predicted class 1 iff score >= threshold
};

/// A fitted score function R(y, x) over standardized (y, x) inputs.
struct Classifier {
    ClassifierSpec spec;
    AffineMap standardize;
    // Neural backbone, or the linear coefficients when kind == Linear.
    FnnSpec net_spec;
    FnnParams net;
    Eigen::VectorXd coef;
    double intercept = 0.0;

    double score(const Eigen::RowVectorXd& y, const Eigen::RowVectorXd& x) const {
        Eigen::RowVectorXd z(y.size() + x.size());
        z << y, x;
        z = standardize.apply(z);
        if (spec.kind == ClassifierKind::Linear) return coef.dot(z) + intercept;
        return forward(net, net_spec, z.transpose())(0);
    }

    Eigen::VectorXd score_batch(const Dataset& data) const {
        const Eigen::MatrixXd z = standardize.apply(data.joint());
        if (spec.kind == ClassifierKind::Linear)
            return ((z * coef).array() + intercept).matrix();
        return forward_batch(net, net_spec, z).col(0);
    }

    bool predict_positive(const Eigen::RowVectorXd& y, const Eigen::RowVectorXd& x) const {
        return score(y, x) >= spec.decision_threshold;
    }
};

namespace detail {

inline double mean_logistic_loss(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < scores.size(); ++i)
        total += logistic_loss(scores(i), static_cast<int>(labels(i)));
    return total / static_cast<double>(scores.size());
}

// dL/dr for the logistic loss: sigmoid(r) - s.
inline Eigen::VectorXd logistic_grad(const Eigen::VectorXd& scores,
                                     const Eigen::VectorXd& labels) {
    return scores.unaryExpr([](double r) { return sigmoid(r); }) - labels;
}

inline void fit_linear(Classifier& clf, const Eigen::MatrixXd& z, const Eigen::VectorXd& s) {
    // Full-batch gradient descent with a bold-driver step size, run to a
    // 1e-8 loss-change tolerance.
    const Eigen::Index n = z.rows();
    clf.coef = Eigen::VectorXd::Zero(z.cols());
    clf.intercept = 0.0;
    double lr = 1.0;
    double loss = mean_logistic_loss(Eigen::VectorXd::Zero(n), s);
    for (int iter = 0; iter < 50000; ++iter) {
        const Eigen::VectorXd scores = (z * clf.coef).array() + clf.intercept;
        const Eigen::VectorXd g = logistic_grad(scores, s) / static_cast<double>(n);
        const Eigen::VectorXd grad_w = z.transpose() * g;
        const double grad_b = g.sum();

        const Eigen::VectorXd w_new = clf.coef - lr * grad_w;
        const double b_new = clf.intercept - lr * grad_b;
        const double loss_new = mean_logistic_loss(((z * w_new).array() + b_new).matrix(), s);
        if (!std::isfinite(loss_new))
            throw std::runtime_error("fit_classifier: linear fit diverged");
        if (loss_new <= loss) {
            clf.coef = w_new;
            clf.intercept = b_new;
            if (loss - loss_new < 1e-8) return;
            loss = loss_new;
            lr *= 1.1;
        } else {
            lr *= 0.5;
            if (lr < 1e-12) return;
        }
    }
}

inline void fit_neural(Classifier& clf, const Eigen::MatrixXd& z, const Eigen::VectorXd& s,
                       std::uint64_t seed) {
    const auto& cfg = clf.spec.training;
    clf.net_spec.input_dim = static_cast<int>(z.cols());
    clf.net_spec.hidden_widths = clf.spec.hidden_widths;
    clf.net_spec.output_dim = 1;
    clf.net_spec.activation = Activation::Relu;
    clf.net_spec.seed = derive_seed(seed, 1);
    clf.net = init_params(clf.net_spec);
    AdamState opt = AdamState::create(clf.net, cfg.learning_rate);

    const Eigen::Index n = z.rows();
    const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, n);
    const Eigen::Index n_batches = n / batch;
    auto rng = make_rng(derive_seed(seed, 2));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    FnnParams best = clf.net;
    double best_loss = std::numeric_limits<double>::infinity();
    int stale = 0;
    Eigen::MatrixXd bz(batch, z.cols());
    Eigen::VectorXd bs(batch);
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (Eigen::Index b = 0; b < n_batches; ++b) {
            for (Eigen::Index i = 0; i < batch; ++i) {
                const Eigen::Index r = order[static_cast<std::size_t>(b * batch + i)];
                bz.row(i) = z.row(r);
                bs(i) = s(r);
            }
            ForwardTrace trace;
            const Eigen::VectorXd scores = forward_batch(clf.net, clf.net_spec, bz, &trace);
            epoch_loss += mean_logistic_loss(scores, bs);
            const Eigen::MatrixXd upstream =
                logistic_grad(scores, bs) / static_cast<double>(batch);
            FnnGradients grads = backward_batch(clf.net, clf.net_spec, trace, upstream);
            adam_step(clf.net, grads.params, opt);
        }
        epoch_loss /= static_cast<double>(n_batches);
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("fit_classifier: training diverged at epoch " +
                                     std::to_string(epoch));
        if (epoch_loss < best_loss - 1e-10) {
            best_loss = epoch_loss;
            best = clf.net;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }
    clf.net = std::move(best);
}

}  // namespace detail

/// Fits the binary classifier on pooled labeled data: rows of `train_pos`
/// carry label 1, rows of `train_neg` label 0. Inputs are z-scored with a
/// transform estimated from these training rows and stored on the result.
inline Classifier fit_classifier(const Dataset& train_pos, const Dataset& train_neg,
                                 const ClassifierSpec& spec, std::uint64_t seed) {
    if (train_pos.n() == 0 || train_neg.n() == 0)
        throw std::invalid_argument("fit_classifier: both classes must be non-empty");
    if (train_pos.p() != train_neg.p() || train_pos.d() != train_neg.d())
        throw std::invalid_argument("fit_classifier: class dimensions differ");

    const Eigen::Index n = train_pos.n() + train_neg.n();
    Eigen::MatrixXd z(n, train_pos.p() + train_pos.d());
    z.topRows(train_pos.n()) = train_pos.joint();
    z.bottomRows(train_neg.n()) = train_neg.joint();
    Eigen::VectorXd labels(n);
    labels.head(train_pos.n()).setOnes();
    labels.tail(train_neg.n()).setZero();

    Classifier clf;
    clf.spec = spec;
    clf.standardize = fit_zscore(z);
    z = clf.standardize.apply(z);

    if (spec.kind == ClassifierKind::Linear)
        detail::fit_linear(clf, z, labels);
    else
        detail::fit_neural(clf, z, labels, seed);
    return clf;
}

/// Per-class misclassification rates on held-out data: e1 is the fraction
/// of class-1 rows not predicted 1, e0 the fraction of class-0 rows
/// predicted 1.
inline std::pair<double, double> error_rates(const Classifier& clf, const Dataset& eval_pos,
                                             const Dataset& eval_neg) {
    if (eval_pos.n() == 0 || eval_neg.n() == 0)
        throw std::invalid_argument("error_rates: both evaluation sets must be non-empty");
    const Eigen::VectorXd s1 = clf.score_batch(eval_pos);
    const Eigen::VectorXd s0 = clf.score_batch(eval_neg);
    const double thr = clf.spec.decision_threshold;
    const double e1 =
        static_cast<double>((s1.array() < thr).count()) / static_cast<double>(s1.size());
    const double e0 =
        static_cast<double>((s0.array() >= thr).count()) / static_cast<double>(s0.size());
    return {e1, e0};
}

/// Accuracy z-statistic (e1 + e0 - 1) / sqrt(e1(1-e1)/n + e0(1-e0)/n).
/// Degenerate rates are clamped into [1/(2n), 1 - 1/(2n)] so the variance
/// stays positive while the decision direction is preserved.
inline double acc_statistic(double e1, double e0, Eigen::Index n_eval_per_class) {
    if (n_eval_per_class < 2)
        throw std::invalid_argument("acc_statistic: need at least two evaluation rows per class");
    if (e1 < 0.0 || e1 > 1.0 || e0 < 0.0 || e0 > 1.0)
        throw std::invalid_argument("acc_statistic: error rates must lie in [0, 1]");
    const double n = static_cast<double>(n_eval_per_class);
    const double lo = 1.0 / (2.0 * n), hi = 1.0 - lo;
    const double c1 = std::clamp(e1, lo, hi);
    const double c0 = std::clamp(e0, lo, hi);
    const double var = c1 * (1.0 - c1) / n + c0 * (1.0 - c0) / n;
    return (c1 + c0 - 1.0) / std::sqrt(var);
}

}  // namespace cdet
