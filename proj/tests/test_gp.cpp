#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "cdet/binning.hpp"
#include "cdet/permutation.hpp"
#include "cdet/u_statistic.hpp"

using namespace cdet;

namespace {

BinGrid unit_grid(int dims, double side) {
    BinGrid grid;
    grid.dims = dims;
    grid.side = side;
    grid.cells_per_axis = static_cast<int>(std::ceil(1.0 / side));
    grid.norm.shift = Eigen::VectorXd::Zero(dims);
    grid.norm.scale = Eigen::VectorXd::Ones(dims);
    grid.indices_exact = true;
    return grid;
}

Dataset point_rows(const Eigen::MatrixXd& joint, int p) {
    Dataset d;
    d.y = joint.leftCols(p);
    d.x = joint.rightCols(joint.cols() - p);
    return d;
}

// Definitional quadruple sum over ordered pairs; the independent oracle for
// the count-based fast path.
double u_naive(const std::vector<std::uint64_t>& s1, const std::vector<std::uint64_t>& s2) {
    const int m = static_cast<int>(s1.size());
    double total = 0.0;
    for (int i1 = 0; i1 < m; ++i1)
        for (int i2 = 0; i2 < m; ++i2) {
            if (i2 == i1) continue;
            for (int j1 = 0; j1 < m; ++j1)
                for (int j2 = 0; j2 < m; ++j2) {
                    if (j2 == j1) continue;
                    total += kernel_h(s1[i1], s1[i2], s2[j1], s2[j2]);
                }
        }
    const double pairs = static_cast<double>(m) * (m - 1);
    return total / (pairs * pairs);
}

Dataset uniform_dataset(Eigen::Index n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd y(n, 1), x(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        y(i, 0) = unif(rng);
        x(i, 0) = unif(rng);
    }
    return Dataset{y, x};
}

}  // namespace

TEST_CASE("discretize: row-major 1-based indexing on the unit square") {
    const BinGrid grid = unit_grid(2, 0.5);
    Eigen::MatrixXd pts(3, 2);
    pts << 0.3, 0.7,   // axes (0,1) -> cell 2
        1.0, 1.0,      // boundary clamps into the last cell -> 4
        0.0, 0.0;      // first cell
    const auto s = discretize(point_rows(pts, 1), grid);
    REQUIRE(s.cells == std::vector<std::uint64_t>{2, 4, 1});
    REQUIRE(s.clamped == 0);
}

TEST_CASE("discretize: side 1 sends everything to cell 1") {
    const BinGrid grid = unit_grid(3, 1.0);
    Eigen::MatrixXd pts = Eigen::MatrixXd::Random(20, 3).cwiseAbs();
    pts = pts.cwiseMin(1.0);
    const auto s = discretize(point_rows(pts, 1), grid);
    for (auto c : s.cells) REQUIRE(c == 1);
}

TEST_CASE("discretize: out-of-cube points clamp and are counted") {
    const BinGrid grid = unit_grid(2, 0.25);
    Eigen::MatrixXd pts(2, 2);
    pts << -0.2, 0.5, 1.3, 0.5;
    const auto s = discretize(point_rows(pts, 1), grid);
    REQUIRE(s.clamped == 2);
    REQUIRE(s.cells[0] == 0 * 4 + 2 + 1);
    REQUIRE(s.cells[1] == 3 * 4 + 2 + 1);
}

TEST_CASE("grid totality: every row lands in exactly one cell of [1, N]") {
    std::mt19937_64 rng(5);
    const Dataset a = uniform_dataset(200, rng);
    const Dataset b = uniform_dataset(200, rng);
    const BinGrid grid = fit_grid(a, b, 0.3);
    const std::uint64_t N = grid.cell_count();
    std::map<std::uint64_t, int> counts;
    for (const Dataset* d : {&a, &b}) {
        const auto s = discretize(*d, grid);
        REQUIRE(s.cells.size() == 200);
        for (auto c : s.cells) {
            REQUIRE(c >= 1);
            REQUIRE(c <= N);
            counts[c] += 1;
        }
    }
    int total = 0;
    for (auto& [cell, cnt] : counts) total += cnt;
    REQUIRE(total == 400);
}

TEST_CASE("fit_grid rejects invalid side lengths") {
    std::mt19937_64 rng(6);
    const Dataset a = uniform_dataset(10, rng);
    REQUIRE_THROWS_AS(fit_grid(a, a, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(fit_grid(a, a, 1.5), std::invalid_argument);
}

TEST_CASE("kernel_h hand values") {
    REQUIRE(kernel_h(1, 1, 2, 2) == 2);
    REQUIRE(kernel_h(1, 2, 2, 1) == -2);
    REQUIRE(kernel_h(1, 2, 1, 2) == 0);
}

TEST_CASE("kernel_h symmetry and range over all 4-tuples from 4 cells") {
    for (std::uint64_t u1 = 1; u1 <= 4; ++u1)
        for (std::uint64_t u2 = 1; u2 <= 4; ++u2)
            for (std::uint64_t v1 = 1; v1 <= 4; ++v1)
                for (std::uint64_t v2 = 1; v2 <= 4; ++v2) {
                    const int h = kernel_h(u1, u2, v1, v2);
                    REQUIRE(h >= -2);
                    REQUIRE(h <= 2);
                    REQUIRE(h == kernel_h(v1, v2, u1, u2));
                }
}

TEST_CASE("identical samples: U matches the oracle, not the naive guess of 0") {
    // Pairing a sample with itself forces a cross match at every shared
    // position, so U is negative: -2/m when all cells are distinct.
    const std::vector<std::uint64_t> s{1, 2, 3};
    const double oracle = u_naive(s, s);
    REQUIRE(oracle == Catch::Approx(-2.0 / 3.0).margin(1e-15));
    REQUIRE(u_statistic(s, s) == Catch::Approx(oracle).margin(1e-15));
}

TEST_CASE("fully separated samples of size two give U = 2") {
    const std::vector<std::uint64_t> s1{1, 1};
    const std::vector<std::uint64_t> s2{2, 2};
    REQUIRE(u_statistic(s1, s2) == Catch::Approx(2.0).margin(1e-15));
    REQUIRE(u_naive(s1, s2) == Catch::Approx(2.0).margin(1e-15));
}

TEST_CASE("count-based U equals the quadruple sum on random instances") {
    std::mt19937_64 rng(321);
    for (int trial = 0; trial < 200; ++trial) {
        const int m = 2 + static_cast<int>(rng() % 5);   // up to 6
        const int cells = 1 + static_cast<int>(rng() % 5);  // up to 5
        std::uniform_int_distribution<std::uint64_t> cell(1, cells);
        std::vector<std::uint64_t> s1(m), s2(m);
        for (auto& c : s1) c = cell(rng);
        for (auto& c : s2) c = cell(rng);
        REQUIRE(u_statistic(s1, s2) == Catch::Approx(u_naive(s1, s2)).margin(1e-12));
    }
}

TEST_CASE("U is symmetric under sample swap and within-sample reordering") {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<std::uint64_t> cell(1, 4);
    std::vector<std::uint64_t> s1(8), s2(8);
    for (auto& c : s1) c = cell(rng);
    for (auto& c : s2) c = cell(rng);
    const double u = u_statistic(s1, s2);
    REQUIRE(u_statistic(s2, s1) == Catch::Approx(u).margin(1e-15));
    std::shuffle(s1.begin(), s1.end(), rng);
    std::shuffle(s2.begin(), s2.end(), rng);
    REQUIRE(u_statistic(s1, s2) == Catch::Approx(u).margin(1e-15));
}

TEST_CASE("u_statistic rejects mismatched or tiny samples") {
    REQUIRE_THROWS_AS(u_statistic(std::vector<std::uint64_t>{1, 2}, {1}), std::invalid_argument);
    REQUIRE_THROWS_AS(u_statistic(std::vector<std::uint64_t>{1}, {1}), std::invalid_argument);
}

TEST_CASE("permutation level feasibility rule") {
    std::mt19937_64 rng(7);
    const Dataset a = uniform_dataset(20, rng);
    const Dataset b = uniform_dataset(20, rng);
    REQUIRE_NOTHROW(permutation_test(a, b, 0.05, 0.5, 19, 1));
    REQUIRE_THROWS_AS(permutation_test(a, b, 0.05, 0.5, 10, 1), std::invalid_argument);
}

TEST_CASE("identical datasets: the test never rejects at alpha <= 0.5") {
    // A dataset paired with itself has the most cross matches any
    // permutation can produce, so the observed U sits at the bottom of the
    // permutation distribution and the p-value is large.
    std::mt19937_64 rng(8);
    const Dataset a = uniform_dataset(40, rng);
    const auto out = permutation_test(a, a, 0.5, 0.25, 199, 3);
    REQUIRE(out.u_stat <= 0.0);
    REQUIRE(out.p_value >= 0.5);
    REQUIRE(out.p_value >= 1.0 / 200.0);
    REQUIRE_FALSE(out.reject);
}

TEST_CASE("Monte Carlo p-value respects its lower bound") {
    std::mt19937_64 rng(9);
    const Dataset a = uniform_dataset(30, rng);
    Dataset b = uniform_dataset(30, rng);
    b.y.array() += 50.0;  // force maximal separation
    const auto out = permutation_test(a, b, 0.05, 0.5, 99, 4);
    REQUIRE(out.p_value >= 1.0 / 100.0);
    REQUIRE(out.reject);
}

TEST_CASE("permutation p-values are super-uniform under exchangeability") {
    std::mt19937_64 rng(1234);
    const int trials = 200;
    int le_05 = 0, le_10 = 0;
    for (int t = 0; t < trials; ++t) {
        const Dataset a = uniform_dataset(30, rng);
        const Dataset b = uniform_dataset(30, rng);
        const auto out = permutation_test(a, b, 0.05, 0.5, 199, 1000 + t);
        if (out.p_value <= 0.05) ++le_05;
        if (out.p_value <= 0.10) ++le_10;
    }
    REQUIRE(static_cast<double>(le_05) / trials <= 0.05 + 3.0 * std::sqrt(0.05 / trials));
    REQUIRE(static_cast<double>(le_10) / trials <= 0.10 + 3.0 * std::sqrt(0.10 / trials));
}

TEST_CASE("adaptive grid arithmetic") {
    const AdaptiveGrid g1 = adaptive_grid(1, 5, 2000);
    REQUIRE(g1.v == 4);
    REQUIRE(g1.sides == std::vector<double>{0.5, 0.25, 0.125, 0.0625});
    const AdaptiveGrid g2 = adaptive_grid(1, 1, 8);
    REQUIRE(g2.v == 4);
    REQUIRE_THROWS_AS(adaptive_grid(1, 1, 4), std::invalid_argument);
}

TEST_CASE("adaptive scan applies the Bonferroni rule") {
    std::mt19937_64 rng(22);
    const Dataset a = uniform_dataset(100, rng);
    const Dataset b = uniform_dataset(100, rng);
    const auto out = adaptive_permutation_scan(a, b, 0.05, 0.0, 299, 5);
    const int v = static_cast<int>(out.scale_sides.size());
    REQUIRE(v == adaptive_grid(1, 1, 200).v);
    REQUIRE(out.alpha == Catch::Approx(0.05 / v));
    double min_p = 2.0;
    for (double p : out.scale_p_values) min_p = std::min(min_p, p);
    REQUIRE(out.p_value == Catch::Approx(min_p));
    REQUIRE(out.reject == (min_p <= out.alpha));
}

TEST_CASE("adaptive scan rejects a strong separation") {
    std::mt19937_64 rng(23);
    const Dataset a = uniform_dataset(100, rng);
    Dataset b = uniform_dataset(100, rng);
    b.y.array() += 10.0;
    const auto out = adaptive_permutation_scan(a, b, 0.05, 0.0, 499, 6);
    REQUIRE(out.reject);
}

TEST_CASE("default bin side follows the floor rule") {
    // n2 = 1000, p = 1, d = 5, beta = 2: 1000^(1/7) = 2.68 -> 1/2.
    REQUIRE(default_bin_side(1000, 1, 5) == Catch::Approx(0.5));
    // Very small n2 floors at one cell per axis.
    REQUIRE(default_bin_side(2, 1, 1) == Catch::Approx(1.0));
}

TEST_CASE("gp_cdet end-to-end runs deterministically on small data") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd y1(300, 1), x1(300, 2), y2(120, 1), x2(120, 2);
    for (Eigen::Index i = 0; i < 300; ++i) {
        x1(i, 0) = gauss(rng);
        x1(i, 1) = gauss(rng);
        y1(i, 0) = x1(i, 0) + gauss(rng);
    }
    for (Eigen::Index i = 0; i < 120; ++i) {
        x2(i, 0) = gauss(rng);
        x2(i, 1) = gauss(rng);
        y2(i, 0) = x2(i, 0) + gauss(rng);
    }
    const Dataset d1{y1, x1}, d2{y2, x2};
    MdnSpec spec = MdnSpec::make(1, 2, 2, {8, 4});
    spec.training.batch_size = 64;
    spec.training.max_epochs = 40;

    const auto a = gp_cdet(d1, d2, 0.05, 0.0, spec, 99, 31);
    const auto b = gp_cdet(d1, d2, 0.05, 0.0, spec, 99, 31);
    REQUIRE(a.u_stat == b.u_stat);
    REQUIRE(a.p_value == b.p_value);
    REQUIRE(a.reject == b.reject);
    REQUIRE(a.side == Catch::Approx(default_bin_side(120, 1, 2)));
    REQUIRE(a.generator_epochs > 0);

    Eigen::MatrixXd y3(3, 1), x3(3, 2);
    y3.setZero();
    x3.setZero();
    REQUIRE_THROWS_AS(gp_cdet(d1, Dataset{y3, x3}, 0.05, 0.0, spec, 99, 1),
                      std::invalid_argument);
}
