#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cdet/binning.hpp"
#include "cdet/dataset.hpp"
#include "cdet/mdn.hpp"
#include "cdet/u_statistic.hpp"

namespace cdet {

struct PermTestOutcome {
    double u_stat = 0.0;
    double p_value = 1.0;
    double critical_value = 0.0;
    int n_permutations = 0;
    double alpha = 0.0;  // level applied in the decision
    bool reject = false;

    // Grid summary.
    double side = 1.0;
    int cells_per_axis = 1;
    int dims = 0;
    std::uint64_t cell_count = 0;
    int clamped = 0;

    // Filled by the adaptive scan: per-scale side lengths and p-values.
    std::vector<double> scale_sides;
    std::vector<double> scale_p_values;

    // Filled by the end-to-end tests.
    int generator_epochs = 0;
};

/// Theory-guided default side length 1/floor(n2^(2/(4*beta+d+p))), with the
/// smoothness beta unknowable in practice and defaulted to 2.
inline double default_bin_side(Eigen::Index n2, Eigen::Index p, Eigen::Index d,
                               double beta = 2.0) {
    const double expo = 2.0 / (4.0 * beta + static_cast<double>(d + p));
    const double k = std::floor(std::pow(static_cast<double>(n2), expo));
    return 1.0 / std::max(1.0, k);
}

namespace detail {

inline std::vector<std::vector<std::int32_t>> make_permutations(std::int32_t n, int count,
                                                                std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::vector<std::int32_t> base(static_cast<std::size_t>(n));
    std::iota(base.begin(), base.end(), 0);
    std::vector<std::vector<std::int32_t>> perms;
    perms.reserve(static_cast<std::size_t>(count));
    for (int b = 0; b < count; ++b) {
        std::shuffle(base.begin(), base.end(), rng);
        perms.push_back(base);
    }
    return perms;
}

struct PermScanResult {
    double u_obs = 0.0;
    double p_value = 1.0;
    double critical_value = 0.0;
};

/// Observed U plus the Monte Carlo permutation distribution on pooled dense
/// labels. Ties count towards the p-value, preserving finite-sample validity.
inline PermScanResult permute_u(const std::vector<int>& pooled, int n_cells, std::int64_t m,
                                const std::vector<std::vector<std::int32_t>>& perms,
                                double alpha) {
    std::vector<int> c1(static_cast<std::size_t>(n_cells), 0);
    std::vector<int> c2(static_cast<std::size_t>(n_cells), 0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(m); ++i) ++c1[pooled[i]];
    for (std::size_t i = static_cast<std::size_t>(m); i < pooled.size(); ++i) ++c2[pooled[i]];

    PermScanResult res;
    res.u_obs = u_statistic_from_counts(c1, c2, m);
    const double tie_eps = 1e-12 * std::max(1.0, std::abs(res.u_obs));

    std::vector<double> u_perm;
    u_perm.reserve(perms.size());
    int n_ge = 0;
    for (const auto& perm : perms) {
        std::fill(c1.begin(), c1.end(), 0);
        std::fill(c2.begin(), c2.end(), 0);
        for (std::size_t i = 0; i < static_cast<std::size_t>(m); ++i)
            ++c1[pooled[static_cast<std::size_t>(perm[i])]];
        for (std::size_t i = static_cast<std::size_t>(m); i < pooled.size(); ++i)
            ++c2[pooled[static_cast<std::size_t>(perm[i])]];
        const double u = u_statistic_from_counts(c1, c2, m);
        u_perm.push_back(u);
        if (u >= res.u_obs - tie_eps) ++n_ge;
    }
    const int B = static_cast<int>(perms.size());
    res.p_value = static_cast<double>(1 + n_ge) / static_cast<double>(B + 1);

    // Empirical (1-alpha) quantile of the permuted statistics.
    const int k = static_cast<int>(std::ceil((1.0 - alpha) * (B + 1)));
    std::nth_element(u_perm.begin(), u_perm.begin() + (k - 1), u_perm.end());
    res.critical_value = u_perm[static_cast<std::size_t>(k - 1)];
    return res;
}

inline void check_level(double alpha, int n_perm) {
    if (alpha <= 0.0 || alpha >= 1.0)
        throw std::invalid_argument("permutation test: alpha must lie in (0, 1)");
    if (n_perm < 1) throw std::invalid_argument("permutation test: need at least 1 permutation");
    if (alpha * (n_perm + 1) < 1.0)
        throw std::invalid_argument(
            "permutation test: alpha*(n_perm+1) >= 1 required; increase n_perm");
}

}  // namespace detail

/// Monte Carlo permutation test of the two-sample U-statistic on a fixed
/// grid. The p-value (1 + #{U_b >= U_obs}) / (n_perm + 1) replaces the
/// exhaustive permutation quantile; reject when it falls at or below alpha.
inline PermTestOutcome permutation_test(const Dataset& d_hat21, const Dataset& d22, double alpha,
                                        double side, int n_perm, std::uint64_t seed) {
    detail::check_level(alpha, n_perm);
    if (d_hat21.n() != d22.n())
        throw std::invalid_argument("permutation_test: samples must have equal size");
    if (d_hat21.n() < 2)
        throw std::invalid_argument("permutation_test: need at least two rows per sample");

    const BinGrid grid = fit_grid(d_hat21, d22, side);
    const DiscretizedSample s1 = discretize(d_hat21, grid);
    const DiscretizedSample s2 = discretize(d22, grid);
    auto [pooled, n_cells] = detail::dense_labels(s1.cells, s2.cells);
    const std::int64_t m = d_hat21.n();
    const auto perms =
        detail::make_permutations(static_cast<std::int32_t>(2 * m), n_perm, seed);
    const auto scan = detail::permute_u(pooled, n_cells, m, perms, alpha);

    PermTestOutcome out;
    out.u_stat = scan.u_obs;
    out.p_value = scan.p_value;
    out.critical_value = scan.critical_value;
    out.n_permutations = n_perm;
    out.alpha = alpha;
    out.reject = scan.p_value <= alpha;
    out.side = grid.side;
    out.cells_per_axis = grid.cells_per_axis;
    out.dims = grid.dims;
    out.cell_count = grid.indices_exact ? grid.cell_count() : 0;
    out.clamped = s1.clamped + s2.clamped;
    return out;
}

/// Dyadic side lengths 1/2, ..., 2^-v for the adaptive scan, with
/// v = ceil( (2/(p+d)) log2( (n2/2) / loglog(n2/2) ) ); the inner iterated
/// logarithm is natural, the outer explicitly base 2.
struct AdaptiveGrid {
    int v = 0;
    std::vector<double> sides;
};

inline AdaptiveGrid adaptive_grid(Eigen::Index p, Eigen::Index d, Eigen::Index n2) {
    const double half = static_cast<double>(n2) / 2.0;
    if (!(half > std::exp(1.0)))
        throw std::invalid_argument("adaptive_grid: need n2/2 > e for the iterated logarithm");
    const double loglog = std::log(std::log(half));
    const double v_real =
        (2.0 / static_cast<double>(p + d)) * std::log2(half / loglog);
    AdaptiveGrid grid;
    grid.v = static_cast<int>(std::ceil(v_real));
    for (int j = 1; j <= grid.v; ++j) grid.sides.push_back(std::ldexp(1.0, -j));
    return grid;
}

/// Bonferroni scan over the dyadic grid: each scale is tested at level
/// (alpha - delta) / v with one shared set of permutations; the family
/// rejects when any scale does. Reports the most significant scale.
inline PermTestOutcome adaptive_permutation_scan(const Dataset& d_hat21, const Dataset& d22,
                                                 double alpha, double delta, int n_perm,
                                                 std::uint64_t seed) {
    if (d_hat21.n() != d22.n())
        throw std::invalid_argument("adaptive scan: samples must have equal size");
    if (alpha <= 0.0 || alpha >= 1.0)
        throw std::invalid_argument("adaptive scan: alpha must lie in (0, 1)");
    if (delta < 0.0 || delta >= alpha)
        throw std::invalid_argument("adaptive scan: delta must lie in [0, alpha)");
    const std::int64_t m = d_hat21.n();
    const AdaptiveGrid grid = adaptive_grid(d_hat21.p(), d_hat21.d(), 2 * m);
    const double level = (alpha - delta) / static_cast<double>(grid.v);
    detail::check_level(level, n_perm);

    const auto perms =
        detail::make_permutations(static_cast<std::int32_t>(2 * m), n_perm, seed);

    PermTestOutcome best;
    best.alpha = level;
    best.n_permutations = n_perm;
    best.p_value = 2.0;  // any real scan result replaces this
    for (double side : grid.sides) {
        const BinGrid bins = fit_grid(d_hat21, d22, side);
        const DiscretizedSample s1 = discretize(d_hat21, bins);
        const DiscretizedSample s2 = discretize(d22, bins);
        auto [pooled, n_cells] = detail::dense_labels(s1.cells, s2.cells);
        const auto scan = detail::permute_u(pooled, n_cells, m, perms, level);
        best.scale_sides.push_back(side);
        best.scale_p_values.push_back(scan.p_value);
        if (scan.p_value < best.p_value) {
            best.p_value = scan.p_value;
            best.u_stat = scan.u_obs;
            best.critical_value = scan.critical_value;
            best.side = bins.side;
            best.cells_per_axis = bins.cells_per_axis;
            best.dims = bins.dims;
            best.cell_count = bins.indices_exact ? bins.cell_count() : 0;
            best.clamped = s1.clamped + s2.clamped;
        }
    }
    best.reject = best.p_value <= level;
    return best;
}

/// Permutation test fed by an already-trained conditional generator:
/// split data2 in half, synthesize responses on the first half's
/// covariates, and compare against the untouched second half.
inline PermTestOutcome gp_cdet_with_generator(const MdnGenerator& gen, const Dataset& data2,
                                              double alpha, double side, int n_perm,
                                              std::uint64_t seed) {
    if (data2.n() < 4)
        throw std::invalid_argument("gp_cdet: need n2 >= 4");
    if (data2.p() != gen.spec.p || data2.d() != gen.spec.d)
        throw std::invalid_argument("gp_cdet: generator and data dimensions differ");
    auto rng = make_rng(derive_seed(seed, 1));
    auto [d21, d22] = split_halves(data2, rng);
    const Dataset d_hat21 = generate_dataset(gen, d21.x, derive_seed(seed, 2));
    if (side <= 0.0) side = default_bin_side(data2.n(), data2.p(), data2.d());
    PermTestOutcome out = permutation_test(d_hat21, d22, alpha, side, n_perm, derive_seed(seed, 3));
    out.generator_epochs = gen.summary.epochs_run;
    return out;
}

/// End-to-end permutation-based conditional distribution equality test.
/// Pass side <= 0 to use the default rule.
inline PermTestOutcome gp_cdet(const Dataset& data1, const Dataset& data2, double alpha,
                               double side, const MdnSpec& mdn_spec, int n_perm,
                               std::uint64_t seed) {
    if (data1.p() != data2.p() || data1.d() != data2.d())
        throw std::invalid_argument("gp_cdet: datasets have inconsistent dimensions");
    if (data2.n() < 4) throw std::invalid_argument("gp_cdet: need n2 >= 4");
    const MdnGenerator gen = train_mdn(data1, mdn_spec, derive_seed(seed, 0));
    return gp_cdet_with_generator(gen, data2, alpha, side, n_perm, seed);
}

inline PermTestOutcome adaptive_gp_cdet_with_generator(const MdnGenerator& gen,
                                                       const Dataset& data2, double alpha,
                                                       int n_perm, std::uint64_t seed,
                                                       double delta = 0.0) {
    if (data2.n() < 4)
        throw std::invalid_argument("adaptive_gp_cdet: need n2 >= 4");
    if (data2.p() != gen.spec.p || data2.d() != gen.spec.d)
        throw std::invalid_argument("adaptive_gp_cdet: generator and data dimensions differ");
    auto rng = make_rng(derive_seed(seed, 1));
    auto [d21, d22] = split_halves(data2, rng);
    const Dataset d_hat21 = generate_dataset(gen, d21.x, derive_seed(seed, 2));
    PermTestOutcome out =
        adaptive_permutation_scan(d_hat21, d22, alpha, delta, n_perm, derive_seed(seed, 3));
    out.generator_epochs = gen.summary.epochs_run;
    return out;
}

/// Adaptive multi-resolution variant: one generated sample and one
/// permutation set shared across all dyadic scales.
inline PermTestOutcome adaptive_gp_cdet(const Dataset& data1, const Dataset& data2, double alpha,
                                        const MdnSpec& mdn_spec, int n_perm, std::uint64_t seed,
                                        double delta = 0.0) {
    if (data1.p() != data2.p() || data1.d() != data2.d())
        throw std::invalid_argument("adaptive_gp_cdet: datasets have inconsistent dimensions");
    if (data2.n() < 4) throw std::invalid_argument("adaptive_gp_cdet: need n2 >= 4");
    const MdnGenerator gen = train_mdn(data1, mdn_spec, derive_seed(seed, 0));
    return adaptive_gp_cdet_with_generator(gen, data2, alpha, n_perm, seed, delta);
}

}  // namespace cdet
