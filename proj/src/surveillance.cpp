#include "stsurv/surveillance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stsurv/error.hpp"
#include "stsurv/model.hpp"

namespace stsurv {

namespace {

void check_cuts(const std::vector<double>& cuts, const char* what) {
    for (std::size_t n = 0; n < cuts.size(); ++n) {
        if (!(cuts[n] > 0.0) || (n > 0 && !(cuts[n] > cuts[n - 1]))) {
            throw ValidationError(std::string(what) + " must be positive and strictly ascending");
        }
    }
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd da = a.array() - a.mean();
    const Eigen::VectorXd db = b.array() - b.mean();
    const double den = std::sqrt(da.squaredNorm() * db.squaredNorm());
    return den > 0.0 ? da.dot(db) / den : std::nan("");
}

Eigen::MatrixXd correlation_of_columns(const Eigen::MatrixXd& m) {
    const auto K = m.cols();
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(K, K);
    for (Eigen::Index a = 0; a < K; ++a) {
        for (Eigen::Index b = a + 1; b < K; ++b) {
            c(a, b) = c(b, a) = pearson(m.col(a), m.col(b));
        }
    }
    return c;
}

} // namespace

void RiskCuts::validate() const {
    check_cuts(rate_cuts, "rate cuts");
    check_cuts(rt_cuts, "R_t cuts");
}

int level_for(double value, const std::vector<double>& cuts) {
    return static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), value) - cuts.begin());
}

RiskLevel classify_risk(double weekly_rate, double rt, const RiskCuts& cuts) {
    RiskLevel r;
    r.rate_level = level_for(weekly_rate, cuts.rate_cuts);
    r.rt_level = level_for(rt, cuts.rt_cuts);
    r.combined_level = std::max(r.rate_level, r.rt_level);
    return r;
}

std::vector<double> smoothed_rate_draws(const PosteriorDraws& draws, const SplineBasis& basis,
                                        int area, int day) {
    if (draws.draws.empty()) {
        throw ValidationError("no retained draws");
    }
    if (area < 0 || area >= draws.draws.front().state.num_areas()) {
        throw ValidationError("invalid area index " + std::to_string(area));
    }
    if (day < 0 || day >= basis.num_days) {
        throw ValidationError("invalid day index " + std::to_string(day));
    }
    std::vector<double> out;
    out.reserve(draws.size());
    for (const auto& d : draws.draws) {
        out.push_back(kRatePer * std::exp(spline_predictor(d.state, basis, area, day)));
    }
    return out;
}

Summary smoothed_rate(const PosteriorDraws& draws, const SplineBasis& basis, int area, int day) {
    return summarize(smoothed_rate_draws(draws, basis, area, day));
}

Summary weekly_rate(const PosteriorDraws& draws, const SplineBasis& basis, int area, int day) {
    auto v = smoothed_rate_draws(draws, basis, area, day);
    for (double& x : v) {
        x *= 7.0;
    }
    return summarize(v);
}

std::vector<RiskRow> risk_table(const PosteriorDraws& draws, const SplineBasis& basis,
                                const RtSurface& surface, int reference_day,
                                const RiskCuts& cuts) {
    cuts.validate();
    const int t = reference_day - surface.first_day();
    if (t < 0 || t >= surface.num_reported()) {
        throw ValidationError("reference day " + std::to_string(reference_day + 1) +
                              " has no R_t estimate");
    }
    std::vector<RiskRow> rows;
    for (int i = 0; i < surface.num_areas(); ++i) {
        RiskRow row;
        row.area = i;
        row.weekly_rate = weekly_rate(draws, basis, i, reference_day).mean;
        row.rt = surface.summary(i, t).mean;
        row.level = classify_risk(row.weekly_rate, row.rt, cuts);
        rows.push_back(row);
    }
    return rows;
}

PatternCorrelation pattern_correlation(const PosteriorDraws& draws, const SplineBasis& basis,
                                       bool per_draw) {
    if (draws.draws.empty()) {
        throw ValidationError("no retained draws");
    }
    const auto& first = draws.draws.front().state;
    const auto K = first.beta_star.cols();
    PatternCorrelation out;
    if (per_draw) {
        out.matrix = Eigen::MatrixXd::Zero(K, K);
        for (const auto& d : draws.draws) {
            out.matrix += correlation_of_columns(d.state.beta_star);
        }
        out.matrix /= static_cast<double>(draws.size());
        out.matrix.diagonal().setOnes();
    } else {
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(first.beta_star.rows(), K);
        for (const auto& d : draws.draws) {
            mean += d.state.beta_star;
        }
        mean /= static_cast<double>(draws.size());
        out.matrix = correlation_of_columns(mean);
    }
    for (int k = 0; k < K; ++k) {
        out.peak_days.push_back(peak_day(basis, k));
    }
    return out;
}

} // namespace stsurv
