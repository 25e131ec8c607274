#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "stsurv/rt_engine.hpp"
#include "stsurv/sampler.hpp"
#include "stsurv/spline_basis.hpp"
#include "stsurv/summary.hpp"

namespace stsurv {

inline constexpr double kRatePer = 100000.0;

/// Official risk thresholds: weekly cases per 100,000 and R.
struct RiskCuts {
    std::vector<double> rate_cuts{10.0, 25.0, 75.0, 125.0};
    std::vector<double> rt_cuts{1.0, 1.1, 1.5, 2.0};

    /// Throws ValidationError unless both lists are positive and strictly
    /// ascending.
    void validate() const;
};

struct RiskLevel {
    int rate_level = 0;
    int rt_level = 0;
    int combined_level = 0;
};

/// Number of cuts at or below the value (a value on a cut takes the higher
/// level).
int level_for(double value, const std::vector<double>& cuts);

/// Combined level is the max of the two marginal levels.
RiskLevel classify_risk(double weekly_rate, double rt, const RiskCuts& cuts = {});

/// Per-draw daily rate per 100,000 for 0-based area and day:
/// 1e5 * exp((beta X)_i,day).
std::vector<double> smoothed_rate_draws(const PosteriorDraws& draws, const SplineBasis& basis,
                                        int area, int day);
Summary smoothed_rate(const PosteriorDraws& draws, const SplineBasis& basis, int area, int day);

/// 7 x smoothed_rate at `day`, per draw.
Summary weekly_rate(const PosteriorDraws& draws, const SplineBasis& basis, int area, int day);

struct RiskRow {
    int area = 0;
    double weekly_rate = 0.0;
    double rt = 0.0;
    RiskLevel level;
};

/// One row per area: posterior mean weekly rate and posterior mean R at the
/// 0-based reference day, which must be >= S.
std::vector<RiskRow> risk_table(const PosteriorDraws& draws, const SplineBasis& basis,
                                const RtSurface& surface, int reference_day,
                                const RiskCuts& cuts = {});

struct PatternCorrelation {
    Eigen::MatrixXd matrix;     // K x K
    std::vector<int> peak_days; // 1-based day at which each basis function peaks
};

/// Pearson correlation across areas between beta_star columns. By default on
/// posterior means; with per_draw the per-draw correlations are averaged.
PatternCorrelation pattern_correlation(const PosteriorDraws& draws, const SplineBasis& basis,
                                       bool per_draw = false);

} // namespace stsurv
