#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cdet/affine_map.hpp"
#include "cdet/dataset.hpp"

namespace cdet {

/// Equal-side-length hypercube partition of the unit cube in `dims`
/// dimensions, together with the affine map that sends pooled data into it.
/// Cells are numbered 1..N in row-major order; points on the upper boundary
/// clamp into the last cell along that axis.
struct BinGrid {
    int dims = 0;
    double side = 1.0;
    int cells_per_axis = 1;
    AffineMap norm;
    bool indices_exact = true;  // false when cells_per_axis^dims overflows 63 bits

    std::uint64_t cell_count() const {
        std::uint64_t n = 1;
        for (int i = 0; i < dims; ++i) n *= static_cast<std::uint64_t>(cells_per_axis);
        return n;
    }
};

/// Builds the grid for side length r in (0, 1], fitting the unit-cube
/// normalization on the pooled rows of both samples.
inline BinGrid fit_grid(const Dataset& a, const Dataset& b, double side) {
    if (side <= 0.0 || side > 1.0)
        throw std::invalid_argument("fit_grid: side length must lie in (0, 1]");
    if (a.p() != b.p() || a.d() != b.d())
        throw std::invalid_argument("fit_grid: samples have different dimensions");
    BinGrid grid;
    grid.dims = static_cast<int>(a.p() + a.d());
    grid.side = side;
    grid.cells_per_axis = static_cast<int>(std::ceil(1.0 / side));

    Eigen::MatrixXd pooled(a.n() + b.n(), grid.dims);
    pooled.topRows(a.n()) = a.joint();
    pooled.bottomRows(b.n()) = b.joint();
    grid.norm = fit_minmax(pooled);

    const double bits = grid.dims * std::log2(static_cast<double>(grid.cells_per_axis));
    grid.indices_exact = bits < 63.0;
    return grid;
}

struct DiscretizedSample {
    std::vector<std::uint64_t> cells;  // 1-based cell labels
    int clamped = 0;                   // points outside [0,1] after normalization
};

namespace detail {

// FNV-1a over the axis indices; used only when the row-major cell index
// would overflow. Labels remain equal exactly when axis indices are equal
// (up to a vanishing hash-collision probability).
inline std::uint64_t hash_axes(const std::vector<int>& axes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (int v : axes) {
        for (int byte = 0; byte < 4; ++byte) {
            h ^= static_cast<std::uint64_t>((v >> (8 * byte)) & 0xff);
            h *= 1099511628211ULL;
        }
    }
    return h | 1ULL;  // keep labels nonzero
}

}  // namespace detail

/// Maps every row of `data` to its cell label. Points falling outside the
/// unit cube after normalization are clamped inward and counted.
inline DiscretizedSample discretize(const Dataset& data, const BinGrid& grid) {
    if (static_cast<int>(data.p() + data.d()) != grid.dims)
        throw std::invalid_argument("discretize: dimension mismatch with grid");
    DiscretizedSample out;
    out.cells.reserve(static_cast<std::size_t>(data.n()));
    const Eigen::MatrixXd z = grid.norm.apply(data.joint());
    std::vector<int> axes(static_cast<std::size_t>(grid.dims));
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        bool clamped = false;
        for (int j = 0; j < grid.dims; ++j) {
            double v = z(i, j);
            if (v < 0.0 || v > 1.0) {
                clamped = true;
                v = std::clamp(v, 0.0, 1.0);
            }
            int cell = static_cast<int>(std::floor(v / grid.side));
            axes[static_cast<std::size_t>(j)] = std::min(cell, grid.cells_per_axis - 1);
        }
        if (clamped) ++out.clamped;
        if (grid.indices_exact) {
            std::uint64_t idx = 0;
            for (int j = 0; j < grid.dims; ++j)
                idx = idx * static_cast<std::uint64_t>(grid.cells_per_axis) +
                      static_cast<std::uint64_t>(axes[static_cast<std::size_t>(j)]);
            out.cells.push_back(idx + 1);
        } else {
            out.cells.push_back(detail::hash_axes(axes));
        }
    }
    return out;
}

}  // namespace cdet
