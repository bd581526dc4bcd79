#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdet {

/// Per-coordinate affine rescaling z = (v - shift) / scale with scale > 0.
struct AffineMap {
    Eigen::VectorXd shift;
    Eigen::VectorXd scale;

    Eigen::Index dims() const { return shift.size(); }

    Eigen::RowVectorXd apply(const Eigen::RowVectorXd& v) const {
        return (v - shift.transpose()).cwiseQuotient(scale.transpose());
    }
    Eigen::MatrixXd apply(const Eigen::MatrixXd& m) const {
        return (m.rowwise() - shift.transpose()).array().rowwise() /
               scale.transpose().array();
    }
    Eigen::RowVectorXd invert(const Eigen::RowVectorXd& z) const {
        return z.cwiseProduct(scale.transpose()) + shift.transpose();
    }
    Eigen::MatrixXd invert(const Eigen::MatrixXd& z) const {
        return (z.array().rowwise() * scale.transpose().array()).matrix().rowwise() +
               shift.transpose();
    }
};

/// Min-max map sending each column of `m` into [0, 1]. A constant column
/// has no usable range; it is widened to unit scale and reported through
/// `degenerate_columns` so callers can warn.
inline AffineMap fit_minmax(const Eigen::MatrixXd& m,
                            std::vector<Eigen::Index>* degenerate_columns = nullptr) {
    if (m.rows() == 0) throw std::invalid_argument("fit_minmax: no rows");
    AffineMap map;
    map.shift = m.colwise().minCoeff().transpose();
    map.scale = (m.colwise().maxCoeff() - m.colwise().minCoeff()).transpose();
    for (Eigen::Index j = 0; j < map.scale.size(); ++j) {
        if (map.scale(j) <= 0.0) {
            map.scale(j) = 1.0;
            if (degenerate_columns) degenerate_columns->push_back(j);
        }
    }
    return map;
}

/// Z-score map from column means and standard deviations. Columns with
/// (near) zero spread fall back to unit scale.
inline AffineMap fit_zscore(const Eigen::MatrixXd& m) {
    if (m.rows() == 0) throw std::invalid_argument("fit_zscore: no rows");
    AffineMap map;
    map.shift = m.colwise().mean().transpose();
    Eigen::ArrayXd var = (m.rowwise() - map.shift.transpose())
                             .array()
                             .square()
                             .colwise()
                             .mean();
    map.scale = var.sqrt().matrix();
    for (Eigen::Index j = 0; j < map.scale.size(); ++j)
        if (map.scale(j) < 1e-12) map.scale(j) = 1.0;
    return map;
}

}  // namespace cdet
