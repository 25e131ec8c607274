#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "stsurv/error.hpp"
#include "stsurv/spline_basis.hpp"

using namespace stsurv;

namespace {

// Order-4 B-spline values by the triangular recurrence over the active span.
std::vector<double> oracle_bsplines(const std::vector<double>& t, double x) {
    const int n = static_cast<int>(t.size()) - 4;
    int span = 3;
    while (span + 1 < n && !(x < t[static_cast<std::size_t>(span + 1)])) {
        ++span;
    }
    std::vector<double> N(4, 0.0), left(4), right(4);
    N[0] = 1.0;
    for (int j = 1; j <= 3; ++j) {
        left[j] = x - t[static_cast<std::size_t>(span + 1 - j)];
        right[j] = t[static_cast<std::size_t>(span + j)] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double tmp = N[r] / (right[r + 1] + left[j - r]);
            N[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        N[j] = saved;
    }
    std::vector<double> out(static_cast<std::size_t>(n), 0.0);
    for (int r = 0; r <= 3; ++r) {
        out[static_cast<std::size_t>(span - 3 + r)] = N[r];
    }
    return out;
}

// Truncated-power natural cubic spline basis on knots xi (x scaled to [0,1]).
Eigen::MatrixXd truncated_power_basis(const std::vector<double>& xi, int J) {
    const int K = static_cast<int>(xi.size());
    const double lo = xi.front();
    const double hi = xi.back();
    const auto scale = [&](double v) { return (v - lo) / (hi - lo); };
    const auto cube = [](double v) { return v > 0.0 ? v * v * v : 0.0; };
    const double last = scale(xi.back());
    const auto d = [&](int k, double x) {
        const double xk = scale(xi[static_cast<std::size_t>(k)]);
        return (cube(x - xk) - cube(x - last)) / (last - xk);
    };
    Eigen::MatrixXd T(J, K);
    for (int j = 0; j < J; ++j) {
        const double x = scale(j + 1.0);
        T(j, 0) = 1.0;
        T(j, 1) = x;
        for (int k = 0; k < K - 2; ++k) {
            T(j, k + 2) = d(k, x) - d(K - 2, x);
        }
    }
    return T;
}

std::vector<double> all_knots(const SplineBasis& b) {
    std::vector<double> xi{b.lower_knot};
    xi.insert(xi.end(), b.interior_knots.begin(), b.interior_knots.end());
    xi.push_back(b.upper_knot);
    return xi;
}

} // namespace

TEST(SplineBasis, CardinalityMatchesKnotCount) {
    EXPECT_EQ(build_basis(223, 14).num_functions, 17);
    EXPECT_EQ(build_basis(56, 14).num_functions, 5);
    EXPECT_EQ(build_basis(28, 14).num_functions, 3);
    const auto b = build_basis(100, 10);
    EXPECT_EQ(b.num_functions, static_cast<int>(b.interior_knots.size()) + 2);
}

TEST(SplineBasis, InteriorKnotsOnTheGrid) {
    const auto b = build_basis(56, 14);
    EXPECT_EQ(b.interior_knots, (std::vector<double>{15.0, 29.0, 43.0}));
    EXPECT_DOUBLE_EQ(b.lower_knot, 1.0);
    EXPECT_DOUBLE_EQ(b.upper_knot, 56.0);
    EXPECT_EQ(b.design.rows(), 5);
    EXPECT_EQ(b.design.cols(), 56);
}

TEST(SplineBasis, RejectsBadArguments) {
    EXPECT_THROW(build_basis(56, 0), ValidationError);
    EXPECT_THROW(build_basis(56, -3), ValidationError);
    EXPECT_THROW(build_basis(27, 14), ValidationError);
    EXPECT_NO_THROW(build_basis(28, 14));
}

TEST(SplineBasis, PartitionOfUnity) {
    for (int J : {28, 56, 100, 223}) {
        const auto b = build_basis(J, 14);
        for (int j = 0; j < J; ++j) {
            EXPECT_NEAR(b.design.col(j).sum(), 1.0, 1e-12) << "J=" << J << " day " << j + 1;
        }
    }
}

TEST(SplineBasis, NaturalBoundaryConditions) {
    const auto b = build_basis(223, 14);
    const auto lo = evaluate_functions(b, b.lower_knot, 2);
    const auto hi = evaluate_functions(b, b.upper_knot, 2);
    EXPECT_LT(lo.cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(hi.cwiseAbs().maxCoeff(), 1e-10);
    // A generic B-spline does not satisfy it.
    const auto raw = bspline_values(b.knot_sequence, b.lower_knot, 2);
    EXPECT_GT(std::abs(raw[0]), 1e-3);
}

TEST(SplineBasis, BSplinesMatchIndependentRecurrence) {
    const auto b = build_basis(100, 14);
    for (double x = 1.0; x < 100.0; x += 0.37) {
        const auto got = bspline_values(b.knot_sequence, x);
        const auto want = oracle_bsplines(b.knot_sequence, x);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t n = 0; n < got.size(); ++n) {
            EXPECT_NEAR(got[n], want[n], 1e-13) << "x=" << x << " n=" << n;
        }
    }
}

TEST(SplineBasis, DerivativesMatchFiniteDifferences) {
    const auto b = build_basis(56, 14);
    const double h = 1e-5;
    for (double x : {3.3, 14.2, 27.9, 40.1, 51.5}) {
        for (int d = 1; d <= 2; ++d) {
            const Eigen::VectorXd fd =
                (evaluate_functions(b, x + h, d - 1) - evaluate_functions(b, x - h, d - 1)) / (2 * h);
            EXPECT_LT((evaluate_functions(b, x, d) - fd).cwiseAbs().maxCoeff(), 1e-5)
                << "x=" << x << " d=" << d;
        }
    }
}

TEST(SplineBasis, SpansTheNaturalCubicSplineSpace) {
    for (int J : {56, 223}) {
        const auto b = build_basis(J, 14);
        const Eigen::MatrixXd X = b.design.transpose(); // J x K
        const Eigen::MatrixXd T = truncated_power_basis(all_knots(b), J);
        ASSERT_EQ(T.cols(), X.cols());
        const Eigen::MatrixXd C = X.colPivHouseholderQr().solve(T);
        EXPECT_LT((X * C - T).cwiseAbs().maxCoeff(), 1e-9) << "J=" << J;
        const Eigen::MatrixXd D = T.colPivHouseholderQr().solve(X);
        EXPECT_LT((T * D - X).cwiseAbs().maxCoeff(), 1e-9) << "J=" << J;
        EXPECT_EQ(Eigen::FullPivLU<Eigen::MatrixXd>(X).rank(), b.num_functions);
    }
}

TEST(SplineBasis, CompactSupportRecorded) {
    const auto b = build_basis(223, 14);
    ASSERT_EQ(static_cast<int>(b.support.size()), b.num_functions);
    for (int k = 0; k < b.num_functions; ++k) {
        const auto [first, last] = b.support[static_cast<std::size_t>(k)];
        for (int j = 0; j < b.num_days; ++j) {
            if (j < first || j > last) {
                EXPECT_EQ(b.design(k, j), 0.0) << "k=" << k << " j=" << j;
            }
        }
        EXPECT_NE(b.design(k, first), 0.0);
        EXPECT_NE(b.design(k, last), 0.0);
        // Interior functions span at most four knot intervals.
        EXPECT_LE(last - first, 4 * 14 + 1);
    }
}

TEST(SplineBasis, TrendAndPeakDay) {
    const auto b = build_basis(56, 14);
    std::vector<double> beta(5, 0.0);
    beta[2] = 2.0;
    const auto trend = evaluate_trend(beta, b);
    for (int j = 0; j < 56; ++j) {
        EXPECT_DOUBLE_EQ(trend[j], 2.0 * b.design(2, j));
    }
    EXPECT_EQ(peak_day(b, 0), 1);
    EXPECT_EQ(peak_day(b, 4), 56);
    EXPECT_EQ(peak_day(b, 2), 29);
}

TEST(SplineBasis, FromDesign) {
    const auto b = basis_from_design(Eigen::MatrixXd::Ones(1, 30));
    EXPECT_EQ(b.num_functions, 1);
    EXPECT_EQ(b.num_days, 30);
    EXPECT_EQ(b.support.front(), std::make_pair(0, 29));
}
