#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cdet/adam.hpp"
#include "cdet/affine_map.hpp"
#include "cdet/dataset.hpp"
#include "cdet/fnn.hpp"
#include "cdet/rng.hpp"

namespace cdet {

struct MdnTraining {
    int batch_size = 128;
    int max_epochs = 500;
    int patience = 20;
    double validation_fraction = 0.1;
    double learning_rate = 1e-3;
    // Independent optimizer restarts, combined into an equal-weight mixture
    // of the `ensemble` runs with the best validation NLL. Mixture fits land
    // in bad local optima often enough that single runs are not trustworthy,
    // and averaging fits cancels init-driven extrapolation bias.
    int restarts = 4;
    int ensemble = 2;
};

/// Mixture-density-network configuration: a backbone FNN mapping a
/// d-dimensional covariate to G(p+2) head outputs (G mixing logits,
/// G*p component means, G log-scales).
struct MdnSpec {
    int p = 1;
    int d = 1;
    int mixtures = 2;
    FnnSpec backbone;
    double sigma_floor = 1e-3;
    MdnTraining training;

    int head_dim() const { return mixtures * (p + 2); }

    void validate() const {
        if (p <= 0 || d <= 0) throw std::invalid_argument("MdnSpec: dimensions must be positive");
        if (mixtures < 1) throw std::invalid_argument("MdnSpec: need at least one mixture component");
        if (sigma_floor <= 0.0) throw std::invalid_argument("MdnSpec: sigma_floor must be positive");
        backbone.validate();
        if (backbone.input_dim != d)
            throw std::invalid_argument("MdnSpec: backbone input dimension must equal d");
        if (backbone.output_dim != head_dim())
            throw std::invalid_argument("MdnSpec: backbone output dimension must be G*(p+2)");
        if (training.batch_size < 1 || training.max_epochs < 1)
            throw std::invalid_argument("MdnSpec: invalid training configuration");
        if (training.validation_fraction < 0.0 || training.validation_fraction >= 1.0)
            throw std::invalid_argument("MdnSpec: validation fraction must lie in [0, 1)");
    }

    /// Convenience constructor from hidden widths.
    static MdnSpec make(int p, int d, int mixtures, std::vector<int> hidden,
                        std::uint64_t seed = 0) {
        MdnSpec spec;
        spec.p = p;
        spec.d = d;
        spec.mixtures = mixtures;
        spec.backbone.input_dim = d;
        spec.backbone.hidden_widths = std::move(hidden);
        spec.backbone.output_dim = spec.head_dim();
        spec.backbone.activation = Activation::LeakyRelu;
        spec.backbone.seed = seed;
        return spec;
    }
};

/// Mixture parameters at one covariate value: weights on the simplex,
/// component means (G x p), isotropic scales bounded below by the floor.
struct MixtureHead {
    Eigen::VectorXd alphas;
    Eigen::MatrixXd mus;
    Eigen::VectorXd sigmas;
};

/// Maps raw head outputs to constrained mixture parameters:
/// softmax for the weights, floored softplus for the scales.
inline MixtureHead head_transform(const Eigen::VectorXd& raw, int mixtures, int p,
                                  double sigma_floor) {
    const int G = mixtures;
    if (raw.size() != static_cast<Eigen::Index>(G) * (p + 2))
        throw std::invalid_argument("head_transform: raw vector has wrong length");
    MixtureHead head;
    const Eigen::VectorXd logits = raw.head(G);
    const double top = logits.maxCoeff();
    Eigen::VectorXd ex = (logits.array() - top).exp();
    head.alphas = ex / ex.sum();
    head.mus = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                              Eigen::RowMajor>>(raw.data() + G, G, p);
    head.sigmas.resize(G);
    for (int g = 0; g < G; ++g)
        head.sigmas(g) = sigma_floor + detail::softplus(raw(G + G * p + g));
    return head;
}

/// Log-density of an isotropic Gaussian mixture at y, via log-sum-exp.
inline double mixture_log_density(const MixtureHead& head, const Eigen::VectorXd& y) {
    const int G = static_cast<int>(head.alphas.size());
    const int p = static_cast<int>(head.mus.cols());
    const double log2pi = std::log(2.0 * M_PI);
    Eigen::VectorXd comp(G);
    for (int g = 0; g < G; ++g) {
        const double r2 = (y.transpose() - head.mus.row(g)).squaredNorm();
        comp(g) = std::log(head.alphas(g)) - 0.5 * p * log2pi -
                  p * std::log(head.sigmas(g)) - r2 / (2.0 * head.sigmas(g) * head.sigmas(g));
    }
    const double top = comp.maxCoeff();
    return top + std::log((comp.array() - top).exp().sum());
}

struct MdnTrainingSummary {
    int epochs_run = 0;
    int best_epoch = 0;
    double best_validation_nll = std::numeric_limits<double>::infinity();
    std::vector<double> checkpoint_validation_nll;  // value at each improvement
    std::vector<std::string> warnings;
};

/// A trained conditional generator: an equal-weight ensemble of fitted
/// mixture networks, which is itself one Gaussian mixture with
/// members * G components. Density evaluation and sampling operate in the
/// stored normalized coordinates; sampling maps results back to original
/// units. Immutable after training; safe to share across threads.
struct MdnGenerator {
    MdnSpec spec;
    std::vector<FnnParams> members;
    AffineMap y_norm;
    AffineMap x_norm;
    MdnTrainingSummary summary;

    /// Combined mixture parameters at a covariate in normalized coordinates:
    /// per-member heads concatenated with mixing weights scaled by 1/members.
    MixtureHead head_at_normalized(const Eigen::RowVectorXd& xn) const {
        const int G = spec.mixtures;
        const int R = static_cast<int>(members.size());
        MixtureHead first = head_transform(forward(members[0], spec.backbone, xn.transpose()),
                                           G, spec.p, spec.sigma_floor);
        if (R == 1) return first;
        MixtureHead out;
        out.alphas.resize(R * G);
        out.mus.resize(R * G, spec.p);
        out.sigmas.resize(R * G);
        out.alphas.head(G) = first.alphas / R;
        out.mus.topRows(G) = first.mus;
        out.sigmas.head(G) = first.sigmas;
        for (int r = 1; r < R; ++r) {
            const MixtureHead head = head_transform(
                forward(members[r], spec.backbone, xn.transpose()), G, spec.p,
                spec.sigma_floor);
            out.alphas.segment(r * G, G) = head.alphas / R;
            out.mus.middleRows(r * G, G) = head.mus;
            out.sigmas.segment(r * G, G) = head.sigmas;
        }
        return out;
    }

    /// Mixture parameters at a covariate in original units.
    MixtureHead head_at(const Eigen::RowVectorXd& x) const {
        return head_at_normalized(x_norm.apply(x));
    }
};

/// Log conditional density log f(y | x) with y, x in normalized coordinates.
inline double log_density(const MdnGenerator& gen, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& x) {
    if (y.size() != gen.spec.p || x.size() != gen.spec.d)
        throw std::invalid_argument("log_density: dimension mismatch");
    if (!y.allFinite() || !x.allFinite())
        throw std::invalid_argument("log_density: non-finite input");
    return mixture_log_density(gen.head_at_normalized(x.transpose()), y);
}

/// Conditional mean E[Y | X = x] in original units.
inline Eigen::VectorXd conditional_mean(const MdnGenerator& gen, const Eigen::RowVectorXd& x) {
    const MixtureHead head = gen.head_at(x);
    Eigen::RowVectorXd mean = head.alphas.transpose() * head.mus;
    return gen.y_norm.invert(mean).transpose();
}

namespace detail {

// Negative log-likelihood of one normalized (y, x) row plus the gradient of
// the NLL with respect to the raw head outputs.
inline double mdn_nll_and_head_grad(const MixtureHead& head, const Eigen::VectorXd& raw,
                                    const Eigen::RowVectorXd& y, int G, int p,
                                    Eigen::Ref<Eigen::RowVectorXd> grad) {
    const double log2pi = std::log(2.0 * M_PI);
    Eigen::VectorXd comp(G);
    for (int g = 0; g < G; ++g) {
        const double r2 = (y - head.mus.row(g)).squaredNorm();
        comp(g) = std::log(head.alphas(g)) - 0.5 * p * log2pi -
                  p * std::log(head.sigmas(g)) - r2 / (2.0 * head.sigmas(g) * head.sigmas(g));
    }
    const double top = comp.maxCoeff();
    const double lse = top + std::log((comp.array() - top).exp().sum());

    // Posterior responsibilities.
    Eigen::VectorXd w = (comp.array() - lse).exp();

    // Mixing logits: d(-log f)/da_k = alpha_k - w_k.
    grad.head(G) = (head.alphas - w).transpose();
    // Means: d(-log f)/dmu_g = -w_g (y - mu_g) / sigma_g^2.
    for (int g = 0; g < G; ++g) {
        const double inv_s2 = 1.0 / (head.sigmas(g) * head.sigmas(g));
        grad.segment(G + g * p, p) = -w(g) * inv_s2 * (y - head.mus.row(g));
    }
    // Log-scales through the floored softplus.
    for (int g = 0; g < G; ++g) {
        const double s = head.sigmas(g);
        const double r2 = (y - head.mus.row(g)).squaredNorm();
        const double dl_ds = -static_cast<double>(p) / s + r2 / (s * s * s);
        grad(G + G * p + g) = -w(g) * dl_ds * sigmoid(raw(G + G * p + g));
    }
    return -lse;
}

inline double mean_nll(const FnnParams& params, const MdnSpec& spec, const Eigen::MatrixXd& yn,
                       const Eigen::MatrixXd& xn) {
    const Eigen::MatrixXd raw = forward_batch(params, spec.backbone, xn);
    double total = 0.0;
    for (Eigen::Index i = 0; i < yn.rows(); ++i) {
        const MixtureHead head = head_transform(raw.row(i).transpose(), spec.mixtures, spec.p,
                                                spec.sigma_floor);
        total -= mixture_log_density(head, yn.row(i).transpose());
    }
    return total / static_cast<double>(yn.rows());
}

}  // namespace detail

namespace detail {

/// One optimizer run: minibatch Adam descent on the negative mean
/// log-likelihood, stopping at max_epochs or when validation NLL fails to
/// improve for `patience` epochs, returning the best-validation parameters.
inline MdnGenerator train_mdn_once(const Dataset& data1, const MdnSpec& spec,
                                   std::uint64_t seed) {
    spec.validate();
    if (data1.p() != spec.p || data1.d() != spec.d)
        throw std::invalid_argument("train_mdn: dataset dimensions do not match spec");
    if (data1.n() < spec.training.batch_size)
        throw std::invalid_argument("train_mdn: need at least batch_size rows, have " +
                                    std::to_string(data1.n()));
    if (!data1.all_finite()) throw std::invalid_argument("train_mdn: non-finite data");

    MdnGenerator gen;
    gen.spec = spec;

    std::vector<Eigen::Index> degenerate;
    gen.y_norm = fit_minmax(data1.y, &degenerate);
    for (Eigen::Index j : degenerate)
        gen.summary.warnings.push_back("response column " + std::to_string(j) +
                                       " is constant; normalization widened to unit range");
    degenerate.clear();
    gen.x_norm = fit_minmax(data1.x, &degenerate);
    for (Eigen::Index j : degenerate)
        gen.summary.warnings.push_back("covariate column " + std::to_string(j) +
                                       " is constant; normalization widened to unit range");

    const Eigen::MatrixXd yn_all = gen.y_norm.apply(data1.y);
    const Eigen::MatrixXd xn_all = gen.x_norm.apply(data1.x);

    auto rng = make_rng(derive_seed(seed, 0));
    const auto order = random_permutation(data1.n(), rng);
    Eigen::Index n_val = 0;
    if (spec.training.validation_fraction > 0.0)
        n_val = std::max<Eigen::Index>(
            1, static_cast<Eigen::Index>(std::llround(spec.training.validation_fraction *
                                                      static_cast<double>(data1.n()))));
    const Eigen::Index n_train = data1.n() - n_val;
    if (n_train < spec.training.batch_size)
        throw std::invalid_argument("train_mdn: too few rows left after validation split");

    Eigen::MatrixXd yn(n_train, spec.p), xn(n_train, spec.d);
    Eigen::MatrixXd yv(n_val, spec.p), xv(n_val, spec.d);
    for (Eigen::Index i = 0; i < n_train; ++i) {
        yn.row(i) = yn_all.row(order[static_cast<std::size_t>(i)]);
        xn.row(i) = xn_all.row(order[static_cast<std::size_t>(i)]);
    }
    for (Eigen::Index i = 0; i < n_val; ++i) {
        yv.row(i) = yn_all.row(order[static_cast<std::size_t>(n_train + i)]);
        xv.row(i) = xn_all.row(order[static_cast<std::size_t>(n_train + i)]);
    }

    FnnSpec backbone = spec.backbone;
    backbone.seed = derive_seed(seed, 1);
    FnnParams params = init_params(backbone);

    // Start the head at the marginal law of the normalized response:
    // uniform mixing, component means at the sample mean, scales at the
    // sample standard deviation.
    {
        const Eigen::RowVectorXd y_mean = yn_all.colwise().mean();
        const double y_sd = std::sqrt(
            (yn_all.rowwise() - y_mean).array().square().mean());
        const double sigma0 = std::max(y_sd, 2.0 * spec.sigma_floor);
        Eigen::VectorXd& head_bias = params.biases.back();
        const int G = spec.mixtures;
        for (int g = 0; g < G; ++g)
            for (int j = 0; j < spec.p; ++j) head_bias(G + g * spec.p + j) = y_mean(j);
        const double raw_scale = std::log(std::expm1(sigma0 - spec.sigma_floor));
        for (int g = 0; g < G; ++g) head_bias(G + G * spec.p + g) = raw_scale;
    }
    AdamState opt = AdamState::create(params, spec.training.learning_rate);

    FnnParams best_params = params;
    int stale = 0;
    const int G = spec.mixtures;
    const int m = spec.training.batch_size;
    const Eigen::Index n_batches = n_train / m;
    std::vector<Eigen::Index> batch_order(static_cast<std::size_t>(n_train));
    std::iota(batch_order.begin(), batch_order.end(), Eigen::Index{0});

    Eigen::MatrixXd by(m, spec.p), bx(m, spec.d), upstream(m, spec.head_dim());
    for (int epoch = 1; epoch <= spec.training.max_epochs; ++epoch) {
        std::shuffle(batch_order.begin(), batch_order.end(), rng);
        double epoch_loss = 0.0;
        for (Eigen::Index b = 0; b < n_batches; ++b) {
            for (Eigen::Index i = 0; i < m; ++i) {
                const Eigen::Index r = batch_order[static_cast<std::size_t>(b * m + i)];
                by.row(i) = yn.row(r);
                bx.row(i) = xn.row(r);
            }
            ForwardTrace trace;
            const Eigen::MatrixXd raw = forward_batch(params, backbone, bx, &trace);
            double batch_loss = 0.0;
            Eigen::RowVectorXd grad_row(spec.head_dim());
            for (Eigen::Index i = 0; i < m; ++i) {
                const Eigen::VectorXd raw_i = raw.row(i).transpose();
                const MixtureHead head = head_transform(raw_i, G, spec.p, spec.sigma_floor);
                batch_loss +=
                    detail::mdn_nll_and_head_grad(head, raw_i, by.row(i), G, spec.p, grad_row);
                upstream.row(i) = grad_row;
            }
            batch_loss /= static_cast<double>(m);
            epoch_loss += batch_loss;
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train_mdn: loss diverged at epoch " +
                                         std::to_string(epoch));
            FnnGradients grads =
                backward_batch(params, backbone, trace, upstream / static_cast<double>(m));
            adam_step(params, grads.params, opt);
        }
        gen.summary.epochs_run = epoch;

        if (n_val > 0) {
            const double val = detail::mean_nll(params, spec, yv, xv);
            if (!std::isfinite(val))
                throw std::runtime_error("train_mdn: validation loss diverged at epoch " +
                                         std::to_string(epoch));
            if (val < gen.summary.best_validation_nll) {
                gen.summary.best_validation_nll = val;
                gen.summary.best_epoch = epoch;
                gen.summary.checkpoint_validation_nll.push_back(val);
                best_params = params;
                stale = 0;
            } else if (++stale >= spec.training.patience) {
                break;
            }
        } else {
            best_params = params;
            gen.summary.best_epoch = epoch;
        }
        (void)epoch_loss;
    }
    gen.members.push_back(std::move(best_params));
    return gen;
}

}  // namespace detail

/// Trains the mixture density network on `data1` by maximum likelihood.
/// Data are min-max normalized into [0, 1] coordinates first; the maps are
/// stored on the generator. Runs `restarts` independent seeded fits and
/// combines the `ensemble` runs with the best validation NLL into one
/// equal-weight mixture (a single run when no validation split is
/// configured, since there is nothing to select on).
inline MdnGenerator train_mdn(const Dataset& data1, const MdnSpec& spec, std::uint64_t seed) {
    const bool has_validation = spec.training.validation_fraction > 0.0;
    const int restarts = has_validation ? std::max(1, spec.training.restarts) : 1;
    const int keep = has_validation
                         ? std::min(std::max(1, spec.training.ensemble), restarts)
                         : 1;
    std::vector<MdnGenerator> runs;
    runs.reserve(static_cast<std::size_t>(restarts));
    for (int r = 0; r < restarts; ++r)
        runs.push_back(detail::train_mdn_once(data1, spec, derive_seed(seed, 100 + r)));
    std::sort(runs.begin(), runs.end(), [](const MdnGenerator& a, const MdnGenerator& b) {
        return a.summary.best_validation_nll < b.summary.best_validation_nll;
    });

    MdnGenerator out = std::move(runs.front());
    for (int r = 1; r < keep; ++r)
        out.members.push_back(std::move(runs[static_cast<std::size_t>(r)].members.front()));
    return out;
}

namespace detail {

/// One conditional draw with an externally owned generator stream.
inline Eigen::VectorXd sample_with_rng(const MdnGenerator& gen, const Eigen::RowVectorXd& x,
                                       std::mt19937_64& rng) {
    const MixtureHead head = gen.head_at(x);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng);
    int g = 0;
    double cum = 0.0;
    for (; g < static_cast<int>(head.alphas.size()); ++g) {
        cum += head.alphas(g);
        if (u <= cum) break;
    }
    if (g == static_cast<int>(head.alphas.size())) --g;  // guard against rounding

    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::RowVectorXd w(gen.spec.p);
    for (int j = 0; j < gen.spec.p; ++j) w(j) = gauss(rng);
    const Eigen::RowVectorXd yn = head.mus.row(g) + head.sigmas(g) * w;
    return gen.y_norm.invert(yn).transpose();
}

}  // namespace detail

/// Draws Y | X = x from the learned mixture: pick a component by its weight,
/// then mean + scale * standard normal, mapped back to original units.
inline Eigen::VectorXd sample(const MdnGenerator& gen, const Eigen::RowVectorXd& x,
                              std::uint64_t seed) {
    if (!x.allFinite()) throw std::invalid_argument("sample: non-finite covariate");
    auto rng = make_rng(seed);
    return detail::sample_with_rng(gen, x, rng);
}

/// Synthetic responses at every covariate row: rows are (Y_i, X_i) with the
/// covariate matrix passed through unchanged.
inline Dataset generate_dataset(const MdnGenerator& gen, const Eigen::MatrixXd& covariates,
                                std::uint64_t seed) {
    if (covariates.cols() != gen.spec.d)
        throw std::invalid_argument("generate_dataset: covariate dimension mismatch");
    Dataset out;
    out.x = covariates;
    out.y.resize(covariates.rows(), gen.spec.p);
    auto rng = make_rng(seed);
    for (Eigen::Index i = 0; i < covariates.rows(); ++i)
        out.y.row(i) = detail::sample_with_rng(gen, covariates.row(i), rng).transpose();
    return out;
}

}  // namespace cdet
