#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cdet/rng.hpp"

namespace cdet {

/// Paired response matrix (n x p) and covariate matrix (n x d) with shared
/// row indexing. Row i of `y` belongs to row i of `x`.
struct Dataset {
    Eigen::MatrixXd y;
    Eigen::MatrixXd x;

    Dataset() = default;
    Dataset(Eigen::MatrixXd response, Eigen::MatrixXd covariates)
        : y(std::move(response)), x(std::move(covariates)) {
        if (y.rows() != x.rows())
            throw std::invalid_argument("Dataset: response and covariate row counts differ");
    }

    Eigen::Index n() const { return y.rows(); }
    Eigen::Index p() const { return y.cols(); }
    Eigen::Index d() const { return x.cols(); }

    bool all_finite() const { return y.allFinite() && x.allFinite(); }

    /// Rows selected by index, in the given order.
    Dataset select(const std::vector<Eigen::Index>& idx) const {
        Dataset out;
        out.y.resize(static_cast<Eigen::Index>(idx.size()), y.cols());
        out.x.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
        for (Eigen::Index i = 0; i < out.n(); ++i) {
            out.y.row(i) = y.row(idx[static_cast<std::size_t>(i)]);
            out.x.row(i) = x.row(idx[static_cast<std::size_t>(i)]);
        }
        return out;
    }

    /// (y, x) rows concatenated into one n x (p+d) matrix.
    Eigen::MatrixXd joint() const {
        Eigen::MatrixXd z(n(), p() + d());
        z.leftCols(p()) = y;
        z.rightCols(d()) = x;
        return z;
    }
};

/// A seeded random permutation of {0, ..., n-1}.
inline std::vector<Eigen::Index> random_permutation(Eigen::Index n, std::mt19937_64& rng) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
}

/// Splits `data` into two halves of m rows each after a seeded shuffle.
/// When n is odd, one uniformly chosen row is dropped first.
inline std::pair<Dataset, Dataset> split_halves(const Dataset& data, std::mt19937_64& rng) {
    auto idx = random_permutation(data.n(), rng);
    const Eigen::Index m = data.n() / 2;
    std::vector<Eigen::Index> first(idx.begin(), idx.begin() + m);
    std::vector<Eigen::Index> second(idx.begin() + m, idx.begin() + 2 * m);
    return {data.select(first), data.select(second)};
}

}  // namespace cdet
