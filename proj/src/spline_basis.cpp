#include "stsurv/spline_basis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stsurv/error.hpp"

namespace stsurv {

namespace {

constexpr int kOrder = 4;

// Index m of the knot interval [t_m, t_{m+1}) containing x; at or beyond the
// last knot, the last non-degenerate interval.
std::size_t find_span(std::span<const double> t, double x) {
    std::size_t last = 0;
    for (std::size_t m = 0; m + 1 < t.size(); ++m) {
        if (t[m] < t[m + 1]) {
            last = m;
            if (t[m] <= x && x < t[m + 1]) {
                return m;
            }
        }
    }
    return last;
}

double safe_ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

std::vector<double> basis_recursive(std::span<const double> t, std::size_t span, double x,
                                    int order, int deriv) {
    const std::size_t n = t.size() - static_cast<std::size_t>(order);
    std::vector<double> out(n, 0.0);
    if (order == 1) {
        if (deriv == 0 && span < n) {
            out[span] = 1.0;
        }
        return out;
    }
    const auto lower = basis_recursive(t, span, x, order - 1, deriv > 0 ? deriv - 1 : 0);
    const double p1 = order - 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double left_den = t[i + order - 1] - t[i];
        const double right_den = t[i + order] - t[i + 1];
        if (deriv == 0) {
            out[i] = safe_ratio(x - t[i], left_den) * lower[i] +
                     safe_ratio(t[i + order] - x, right_den) * lower[i + 1];
        } else {
            out[i] = p1 * (safe_ratio(lower[i], left_den) - safe_ratio(lower[i + 1], right_den));
        }
    }
    return out;
}

void compute_support(SplineBasis& basis) {
    basis.support.assign(static_cast<std::size_t>(basis.num_functions), {0, -1});
    for (int k = 0; k < basis.num_functions; ++k) {
        int first = -1;
        int last = -1;
        for (int j = 0; j < basis.num_days; ++j) {
            if (basis.design(k, j) != 0.0) {
                if (first < 0) {
                    first = j;
                }
                last = j;
            }
        }
        basis.support[static_cast<std::size_t>(k)] = {first, last};
    }
}

} // namespace

std::vector<double> bspline_values(std::span<const double> knots, double x, int deriv) {
    if (knots.size() < 2 * kOrder) {
        throw ValidationError("bspline_values: need at least 8 knots");
    }
    if (deriv < 0 || deriv >= kOrder) {
        throw ValidationError("bspline_values: derivative order must be in 0..3");
    }
    return basis_recursive(knots, find_span(knots, x), x, kOrder, deriv);
}

SplineBasis build_basis(int num_days, int knot_spacing) {
    if (knot_spacing <= 0) {
        throw ValidationError("knot spacing must be positive");
    }
    if (num_days < 2 * knot_spacing) {
        throw ValidationError("too few days (" + std::to_string(num_days) +
                              ") for any interior knot at spacing " +
                              std::to_string(knot_spacing));
    }

    SplineBasis basis;
    basis.num_days = num_days;
    basis.lower_knot = 1.0;
    basis.upper_knot = static_cast<double>(num_days);
    for (int day = 1 + knot_spacing; day < num_days; day += knot_spacing) {
        basis.interior_knots.push_back(static_cast<double>(day));
    }

    auto& t = basis.knot_sequence;
    t.assign(kOrder, basis.lower_knot);
    t.insert(t.end(), basis.interior_knots.begin(), basis.interior_knots.end());
    t.insert(t.end(), kOrder, basis.upper_knot);

    const int n_bspline = static_cast<int>(t.size()) - kOrder;
    const int K = n_bspline - 2;
    basis.num_functions = K;

    // Second derivatives at the boundaries. Only the three outermost
    // B-splines on each side are nonzero there, and each triple sums to 0.
    const auto d_lo = bspline_values(t, basis.lower_knot, 2);
    const auto d_hi = bspline_values(t, basis.upper_knot, 2);
    const double a = -d_lo[0] / d_lo[1];
    const auto nb = static_cast<std::size_t>(n_bspline);
    const double b = -d_hi[nb - 1] / d_hi[nb - 2];

    Eigen::MatrixXd& M = basis.reduction;
    M = Eigen::MatrixXd::Zero(n_bspline, K);
    M(0, 0) = 1.0;
    M(1, 0) = a;
    M(1, 1) = 1.0 - a;
    for (int r = 2; r <= n_bspline - 3; ++r) {
        M(r, r - 1) = 1.0;
    }
    M(n_bspline - 2, K - 2) += 1.0 - b;
    M(n_bspline - 2, K - 1) = b;
    M(n_bspline - 1, K - 1) = 1.0;

    basis.design.resize(K, num_days);
    for (int j = 0; j < num_days; ++j) {
        basis.design.col(j) = evaluate_functions(basis, static_cast<double>(j + 1));
    }
    // Clean round-off so that exact zeros mark compact support.
    basis.design = basis.design.unaryExpr([](double v) { return std::abs(v) < 1e-14 ? 0.0 : v; });
    compute_support(basis);
    return basis;
}

SplineBasis basis_from_design(const Eigen::MatrixXd& design) {
    if (design.rows() < 1 || design.cols() < 1) {
        throw ValidationError("design matrix must be non-empty");
    }
    SplineBasis basis;
    basis.num_functions = static_cast<int>(design.rows());
    basis.num_days = static_cast<int>(design.cols());
    basis.lower_knot = 1.0;
    basis.upper_knot = static_cast<double>(basis.num_days);
    basis.design = design;
    compute_support(basis);
    return basis;
}

Eigen::VectorXd evaluate_functions(const SplineBasis& basis, double x, int deriv) {
    if (basis.knot_sequence.empty()) {
        throw ValidationError("basis has no knot structure");
    }
    const auto b = bspline_values(basis.knot_sequence, x, deriv);
    const Eigen::Map<const Eigen::VectorXd> bv(b.data(), static_cast<Eigen::Index>(b.size()));
    return basis.reduction.transpose() * bv;
}

Eigen::VectorXd evaluate_trend(std::span<const double> beta_row, const SplineBasis& basis) {
    if (static_cast<int>(beta_row.size()) != basis.num_functions) {
        throw ValidationError("evaluate_trend: coefficient length " +
                              std::to_string(beta_row.size()) + " does not match K = " +
                              std::to_string(basis.num_functions));
    }
    const Eigen::Map<const Eigen::VectorXd> beta(beta_row.data(),
                                                 static_cast<Eigen::Index>(beta_row.size()));
    return basis.design.transpose() * beta;
}

int peak_day(const SplineBasis& basis, int k) {
    Eigen::Index best = 0;
    basis.design.row(k).maxCoeff(&best);
    return static_cast<int>(best) + 1;
}

} // namespace stsurv
