#pragma once

#include <optional>
#include <span>
#include <vector>

#include "stsurv/sampler.hpp"
#include "stsurv/spline_basis.hpp"

namespace stsurv {

/// Discretized serial interval: weights[s - 1] = w_s for lags s = 1..S.
struct InfectivityProfile {
    int max_lag = 0;
    std::vector<double> weights; // sums to 1
    double raw_mass = 0.0;       // sum before normalization

    [[nodiscard]] double mean_lag() const;
};

/// Gamma(mean, sd) with the mass on (s - 1, s] assigned to lag s, truncated
/// at S and normalized.
InfectivityProfile build_infectivity(double mean, double sd, int max_lag);

/// Normalizes arbitrary non-negative weights.
InfectivityProfile profile_from_weights(std::vector<double> weights);

/// Which terms of the log intensity enter R. The default (spline only) drops
/// population, day of week and eps.
struct RtOptions {
    bool include_dow = false;
    bool include_eps = false;
};

struct RtSummary {
    double mean = 0.0;
    double lo95 = 0.0;
    double hi95 = 0.0;
    double p_gt_1 = 0.0;
};

/// R_it = exp(eta_t) / sum_s exp(eta_{t-s}) w_s for t = S..J-1 (0-based).
std::vector<double> rt_from_log_intensity(std::span<const double> log_intensity,
                                          const InfectivityProfile& profile);

/// Per-draw smoothed R for every area and every day t >= S (0-based).
class RtSurface {
public:
    RtSurface(int num_areas, int num_draws, int first_day, int num_reported);

    [[nodiscard]] int num_areas() const noexcept { return num_areas_; }
    [[nodiscard]] int num_draws() const noexcept { return num_draws_; }
    /// 0-based study day of the first reported R (= S).
    [[nodiscard]] int first_day() const noexcept { return first_day_; }
    [[nodiscard]] int num_reported() const noexcept { return num_reported_; }

    [[nodiscard]] double value(int area, int draw, int t) const { return values_[index(area, draw, t)]; }
    double& value(int area, int draw, int t) { return values_[index(area, draw, t)]; }
    /// Values of all draws for one (area, t).
    [[nodiscard]] std::vector<double> draws_at(int area, int t) const;
    [[nodiscard]] const RtSummary& summary(int area, int t) const {
        return summaries_[static_cast<std::size_t>(area * num_reported_ + t)];
    }

    void summarize_all();

private:
    [[nodiscard]] std::size_t index(int area, int draw, int t) const {
        return (static_cast<std::size_t>(area) * static_cast<std::size_t>(num_draws_) +
                static_cast<std::size_t>(draw)) *
                   static_cast<std::size_t>(num_reported_) +
               static_cast<std::size_t>(t);
    }

    int num_areas_;
    int num_draws_;
    int first_day_;
    int num_reported_;
    std::vector<double> values_;
    std::vector<RtSummary> summaries_;
};

/// Throws ValidationError("period too short for R_t") when J <= S.
RtSurface smoothed_rt(const PosteriorDraws& draws, const SplineBasis& basis,
                      const InfectivityProfile& profile, const RtOptions& options = {});

/// Population-weighted mean of R over areas, per draw, then summarized. One
/// entry per reported day.
std::vector<RtSummary> regional_rt(const RtSurface& surface, std::span<const double> populations);

/// Windowed ratio estimator over counts (one series). Entry t (0-based) is
/// defined for t >= S + tau - 1 when the denominator is positive; otherwise
/// empty.
std::vector<std::optional<double>> cori_rt(std::span<const double> counts,
                                           const InfectivityProfile& profile, int tau);

} // namespace stsurv
