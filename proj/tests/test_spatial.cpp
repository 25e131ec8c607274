#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stsurv/error.hpp"
#include "stsurv/spatial.hpp"

using namespace stsurv;

TEST(AdjacencyGraph, ValidatesEdges) {
    const std::vector<std::pair<int, int>> loop{{0, 0}};
    EXPECT_THROW(AdjacencyGraph(3, loop), ValidationError);
    const std::vector<std::pair<int, int>> out_of_range{{0, 3}};
    EXPECT_THROW(AdjacencyGraph(3, out_of_range), ValidationError);
    const std::vector<std::pair<int, int>> negative{{-1, 1}};
    EXPECT_THROW(AdjacencyGraph(3, negative), ValidationError);
}

TEST(AdjacencyGraph, CollapsesDuplicatesAndOrientsEdges) {
    const std::vector<std::pair<int, int>> e{{1, 0}, {0, 1}, {2, 1}};
    const AdjacencyGraph g(4, e);
    EXPECT_EQ(g.edges(), (std::vector<std::pair<int, int>>{{0, 1}, {1, 2}}));
    EXPECT_EQ(g.degree(1), 2);
    EXPECT_EQ(g.isolated_areas(), std::vector<int>{3});
    EXPECT_EQ(g.num_components(), 2);
}

TEST(AdjacencyGraph, StructureMatrixIsALaplacian) {
    const auto g = make_lattice(3, 4);
    const auto R = g.structure_matrix();
    EXPECT_LT(R.rowwise().sum().cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_TRUE(R.isApprox(R.transpose()));
    EXPECT_EQ(g.degree(0), 2);
    EXPECT_EQ(g.degree(5), 4);
    EXPECT_EQ(g.edges().size(), 17u);
    EXPECT_EQ(g.num_components(), 1);
}

TEST(LerouxField, LogDensityMatchesDenseOracle) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int n = 2; n <= 4; ++n) {
        for (const auto& edges : oracle::connected_graphs(n)) {
            const LerouxField field(AdjacencyGraph(n, edges));
            for (int rep = 0; rep < 3; ++rep) {
                const double rho = 0.999 * u(rng);
                const double sigma2 = 0.05 + 4.0 * u(rng);
                Eigen::VectorXd v(n);
                for (int i = 0; i < n; ++i) {
                    v[i] = 2.0 * z(rng);
                }
                const auto Q = oracle::leroux_precision(n, edges, rho, sigma2);
                const std::span<const double> vs(v.data(), static_cast<std::size_t>(n));
                EXPECT_NEAR(field.log_density(vs, rho, sigma2), oracle::gaussian_log_density(Q, v),
                            1e-8);
                for (int i = 0; i < n; ++i) {
                    const auto [mean, var] = oracle::schur_conditional(Q, v, i);
                    const auto cm = field.conditional_moments(vs, i, rho, sigma2);
                    EXPECT_NEAR(cm.mean, mean, 1e-10);
                    EXPECT_NEAR(cm.variance, var, 1e-10);
                }
            }
        }
    }
}

TEST(LerouxField, IntrinsicLimitConditionals) {
    const auto g = make_lattice(2, 2);
    const LerouxField field(g);
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const auto cm = field.conditional_moments(v, 0, 1.0, 2.0);
    EXPECT_DOUBLE_EQ(cm.mean, 2.5);
    EXPECT_DOUBLE_EQ(cm.variance, 1.0);
    EXPECT_THROW((void)field.log_density(v, 1.0, 2.0), ValidationError);
    EXPECT_THROW((void)field.conditional_moments(v, 0, 1.5, 2.0), ValidationError);
    EXPECT_THROW((void)field.log_density(v, 0.5, 0.0), ValidationError);
}

TEST(LerouxField, IndependentLimit) {
    const LerouxField field(make_lattice(2, 3));
    const std::vector<double> v{0.3, -1.0, 2.0, 0.0, 0.5, 1.5};
    double want = 0.0;
    for (double x : v) {
        want += -0.5 * std::log(2.0 * std::numbers::pi * 0.7) - x * x / (2.0 * 0.7);
    }
    EXPECT_NEAR(field.log_density(v, 0.0, 0.7), want, 1e-12);
    const auto cm = field.conditional_moments(v, 3, 0.0, 0.7);
    EXPECT_DOUBLE_EQ(cm.mean, 0.0);
    EXPECT_DOUBLE_EQ(cm.variance, 0.7);
}

TEST(LerouxField, QuadraticsAndLogDet) {
    const auto g = make_lattice(2, 2);
    const LerouxField field(g);
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const auto q = field.quadratics(v);
    EXPECT_DOUBLE_EQ(q.sum_sq, 30.0);
    // Edges 0-1, 0-2, 1-3, 2-3: 1 + 4 + 4 + 1.
    EXPECT_DOUBLE_EQ(q.edge_sq, 10.0);
    // Laplacian eigenvalues of the 4-cycle: 0, 2, 2, 4.
    const double rho = 0.3;
    const double want = std::log(1 - rho) + 2 * std::log(2 * rho + 1 - rho) + std::log(4 * rho + 1 - rho);
    EXPECT_NEAR(field.log_det_unscaled(rho), want, 1e-12);
}

TEST(LerouxField, SampleCovarianceMatchesPrecision) {
    const auto g = make_lattice(2, 2);
    const LerouxField field(g);
    const double rho = 0.6;
    const double sigma2 = 1.5;
    std::mt19937_64 rng(5);
    const int n = 200000;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(4, 4);
    for (int s = 0; s < n; ++s) {
        const auto x = field.sample(rho, sigma2, rng);
        acc += x * x.transpose();
    }
    acc /= n;
    const Eigen::MatrixXd want = oracle::leroux_precision(4, g.edges(), rho, sigma2).inverse();
    EXPECT_LT((acc - want).cwiseAbs().maxCoeff(), 0.03);
}
