#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace stsurv {

/// Natural cubic B-spline basis evaluated on study days 1..J.
///
/// Knots sit at day 1, at 1 + m * spacing strictly inside (1, J), and at day
/// J. The basis is the full natural cubic spline space over those knots, so
/// K equals the total knot count. Each natural function is a fixed linear
/// combination of the order-4 B-splines on the padded knot sequence; only
/// the three leftmost and three rightmost B-splines are recombined, which
/// keeps compact support and the partition of unity.
struct SplineBasis {
    int num_days = 0;
    int num_functions = 0;
    double lower_knot = 0.0;
    double upper_knot = 0.0;
    std::vector<double> interior_knots;
    /// Padded knot vector: lower x4, interior, upper x4.
    std::vector<double> knot_sequence;
    /// B-spline -> natural function coefficients, (K + 2) x K.
    Eigen::MatrixXd reduction;
    /// K x J, design(k, j) = value of function k on day j + 1.
    Eigen::MatrixXd design;

    /// First and last (0-based) day on which design(k, .) is nonzero.
    std::vector<std::pair<int, int>> support;
};

/// Builds the basis for `num_days` days with a knot every `knot_spacing` days.
/// Throws ValidationError when spacing <= 0 or num_days < 2 * spacing.
SplineBasis build_basis(int num_days, int knot_spacing);

/// A basis from an arbitrary K x J design matrix (no knot structure). Used by
/// reduced models such as a single constant column.
SplineBasis basis_from_design(const Eigen::MatrixXd& design);

/// Values (deriv = 0) or derivatives (deriv = 1, 2, 3) of all order-4
/// B-splines on `knots` at x. Length = knots.size() - 4. At the upper
/// boundary the left limit is returned.
std::vector<double> bspline_values(std::span<const double> knots, double x, int deriv = 0);

/// Values or derivatives of the K natural basis functions at a real x inside
/// [lower_knot, upper_knot].
Eigen::VectorXd evaluate_functions(const SplineBasis& basis, double x, int deriv = 0);

/// beta_row * X, one value per day.
Eigen::VectorXd evaluate_trend(std::span<const double> beta_row, const SplineBasis& basis);

/// Day (1-based) at which function k attains its maximum.
int peak_day(const SplineBasis& basis, int k);

} // namespace stsurv
