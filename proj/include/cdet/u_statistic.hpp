#pragma once

#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "cdet/binning.hpp"

namespace cdet {

/// Bin-match kernel on cell labels: w(u1,u2) + w(v1,v2) - w(u1,v2) - w(u2,v1)
/// with w the same-cell indicator. Takes values in {-2,...,2}.
inline int kernel_h(std::uint64_t u1, std::uint64_t u2, std::uint64_t v1, std::uint64_t v2) {
    return static_cast<int>(u1 == u2) + static_cast<int>(v1 == v2) -
           static_cast<int>(u1 == v2) - static_cast<int>(u2 == v1);
}

namespace detail {

/// U-statistic from per-cell counts of the two samples (each of size m).
/// Summing the kernel over ordered pairs within each sample collapses to
///   U = sum_k [ c1_k(c1_k-1) + c2_k(c2_k-1) - 2 c1_k c2_k (m-1)/m ] / (m(m-1)).
inline double u_statistic_from_counts(const std::vector<int>& c1, const std::vector<int>& c2,
                                      std::int64_t m) {
    double within = 0.0, cross = 0.0;
    for (std::size_t k = 0; k < c1.size(); ++k) {
        const double a = c1[k], b = c2[k];
        within += a * (a - 1.0) + b * (b - 1.0);
        cross += a * b;
    }
    const double md = static_cast<double>(m);
    return (within - 2.0 * cross * (md - 1.0) / md) / (md * (md - 1.0));
}

/// Dense relabeling of the union of occupied cells, shared by both samples.
inline std::pair<std::vector<int>, int> dense_labels(const std::vector<std::uint64_t>& s1,
                                                     const std::vector<std::uint64_t>& s2) {
    std::unordered_map<std::uint64_t, int> remap;
    remap.reserve(s1.size() + s2.size());
    std::vector<int> pooled;
    pooled.reserve(s1.size() + s2.size());
    int next = 0;
    for (const auto* s : {&s1, &s2})
        for (std::uint64_t c : *s) {
            auto [it, inserted] = remap.try_emplace(c, next);
            if (inserted) ++next;
            pooled.push_back(it->second);
        }
    return {std::move(pooled), next};
}

}  // namespace detail

/// Two-sample U-statistic over discretized samples of equal size m >= 2,
/// computed in O(m) through cell-count sufficient statistics.
inline double u_statistic(const std::vector<std::uint64_t>& s1,
                          const std::vector<std::uint64_t>& s2) {
    if (s1.size() != s2.size())
        throw std::invalid_argument("u_statistic: samples must have equal size");
    const std::int64_t m = static_cast<std::int64_t>(s1.size());
    if (m < 2) throw std::invalid_argument("u_statistic: need at least two points per sample");

    auto [pooled, n_cells] = detail::dense_labels(s1, s2);
    std::vector<int> c1(static_cast<std::size_t>(n_cells), 0);
    std::vector<int> c2(static_cast<std::size_t>(n_cells), 0);
    for (std::size_t i = 0; i < s1.size(); ++i) ++c1[static_cast<std::size_t>(pooled[i])];
    for (std::size_t i = s1.size(); i < pooled.size(); ++i)
        ++c2[static_cast<std::size_t>(pooled[i])];
    return detail::u_statistic_from_counts(c1, c2, m);
}

inline double u_statistic(const DiscretizedSample& s1, const DiscretizedSample& s2) {
    return u_statistic(s1.cells, s2.cells);
}

}  // namespace cdet
