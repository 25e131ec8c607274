#include "stsurv/rt_engine.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "stsurv/error.hpp"
#include "stsurv/model.hpp"
#include "stsurv/summary.hpp"

namespace stsurv {

double InfectivityProfile::mean_lag() const {
    double m = 0.0;
    for (std::size_t s = 0; s < weights.size(); ++s) {
        m += static_cast<double>(s + 1) * weights[s];
    }
    return m;
}

InfectivityProfile build_infectivity(double mean, double sd, int max_lag) {
    if (!(mean > 0.0) || !(sd > 0.0)) {
        throw ValidationError("serial interval mean and sd must be positive");
    }
    if (max_lag < 1) {
        throw ValidationError("maximum lag must be at least 1");
    }
    const double shape = (mean / sd) * (mean / sd);
    const double scale = sd * sd / mean;
    const auto cdf = [&](double x) { return x <= 0.0 ? 0.0 : boost::math::gamma_p(shape, x / scale); };

    std::vector<double> w(static_cast<std::size_t>(max_lag));
    for (int s = 1; s <= max_lag; ++s) {
        w[static_cast<std::size_t>(s - 1)] = cdf(s) - cdf(s - 1);
    }
    return profile_from_weights(std::move(w));
}

InfectivityProfile profile_from_weights(std::vector<double> weights) {
    if (weights.empty()) {
        throw ValidationError("infectivity profile needs at least one weight");
    }
    double mass = 0.0;
    for (double v : weights) {
        if (!(v >= 0.0)) {
            throw ValidationError("infectivity weights must be non-negative");
        }
        mass += v;
    }
    if (!(mass > 0.0)) {
        throw ValidationError("infectivity weights sum to zero");
    }
    InfectivityProfile p;
    p.max_lag = static_cast<int>(weights.size());
    p.raw_mass = mass;
    for (double& v : weights) {
        v /= mass;
    }
    p.weights = std::move(weights);
    return p;
}

std::vector<double> rt_from_log_intensity(std::span<const double> log_intensity,
                                          const InfectivityProfile& profile) {
    const int J = static_cast<int>(log_intensity.size());
    const int S = profile.max_lag;
    if (J <= S) {
        throw ValidationError("period too short for R_t (" + std::to_string(J) +
                              " days, maximum lag " + std::to_string(S) + ")");
    }
    std::vector<double> out(static_cast<std::size_t>(J - S));
    for (int t = S; t < J; ++t) {
        const double now = log_intensity[static_cast<std::size_t>(t)];
        double denom = 0.0;
        for (int s = 1; s <= S; ++s) {
            denom += std::exp(log_intensity[static_cast<std::size_t>(t - s)] - now) *
                     profile.weights[static_cast<std::size_t>(s - 1)];
        }
        out[static_cast<std::size_t>(t - S)] = 1.0 / denom;
    }
    return out;
}

RtSurface::RtSurface(int num_areas, int num_draws, int first_day, int num_reported)
    : num_areas_(num_areas), num_draws_(num_draws), first_day_(first_day),
      num_reported_(num_reported),
      values_(static_cast<std::size_t>(num_areas) * static_cast<std::size_t>(num_draws) *
              static_cast<std::size_t>(num_reported)),
      summaries_(static_cast<std::size_t>(num_areas) * static_cast<std::size_t>(num_reported)) {}

std::vector<double> RtSurface::draws_at(int area, int t) const {
    std::vector<double> out(static_cast<std::size_t>(num_draws_));
    for (int d = 0; d < num_draws_; ++d) {
        out[static_cast<std::size_t>(d)] = value(area, d, t);
    }
    return out;
}

void RtSurface::summarize_all() {
    for (int i = 0; i < num_areas_; ++i) {
        for (int t = 0; t < num_reported_; ++t) {
            const auto v = draws_at(i, t);
            const auto s = summarize(v);
            summaries_[static_cast<std::size_t>(i * num_reported_ + t)] = {s.mean, s.q025, s.q975,
                                                                           exceedance(v, 1.0)};
        }
    }
}

RtSurface smoothed_rt(const PosteriorDraws& draws, const SplineBasis& basis,
                      const InfectivityProfile& profile, const RtOptions& options) {
    if (draws.draws.empty()) {
        throw ValidationError("no retained draws");
    }
    const int J = basis.num_days;
    const int S = profile.max_lag;
    if (J <= S) {
        throw ValidationError("period too short for R_t (" + std::to_string(J) +
                              " days, maximum lag " + std::to_string(S) + ")");
    }
    if (options.include_eps && !draws.has_eps) {
        throw ValidationError("draws were retained without eps");
    }
    const int I = draws.draws.front().state.num_areas();
    const int D = static_cast<int>(draws.size());
    RtSurface surface(I, D, S, J - S);

    std::vector<double> eta(static_cast<std::size_t>(J));
    for (int d = 0; d < D; ++d) {
        const auto& state = draws.draws[static_cast<std::size_t>(d)].state;
        const Eigen::MatrixXd trend = spline_trend(state, basis);
        for (int i = 0; i < I; ++i) {
            for (int j = 0; j < J; ++j) {
                double v = trend(i, j);
                if (options.include_dow) {
                    v += state.gamma[dow(j + 1) - 1];
                }
                if (options.include_eps) {
                    v += state.eps(i, j);
                }
                eta[static_cast<std::size_t>(j)] = v;
            }
            const auto r = rt_from_log_intensity(eta, profile);
            for (int t = 0; t < J - S; ++t) {
                surface.value(i, d, t) = r[static_cast<std::size_t>(t)];
            }
        }
    }
    surface.summarize_all();
    return surface;
}

std::vector<RtSummary> regional_rt(const RtSurface& surface, std::span<const double> populations) {
    if (static_cast<int>(populations.size()) != surface.num_areas()) {
        throw ValidationError("population vector does not match the R_t surface");
    }
    const double total = std::accumulate(populations.begin(), populations.end(), 0.0);
    std::vector<RtSummary> out;
    std::vector<double> per_draw(static_cast<std::size_t>(surface.num_draws()));
    for (int t = 0; t < surface.num_reported(); ++t) {
        for (int d = 0; d < surface.num_draws(); ++d) {
            double acc = 0.0;
            for (int i = 0; i < surface.num_areas(); ++i) {
                acc += populations[static_cast<std::size_t>(i)] * surface.value(i, d, t);
            }
            per_draw[static_cast<std::size_t>(d)] = acc / total;
        }
        const auto s = summarize(per_draw);
        out.push_back({s.mean, s.q025, s.q975, exceedance(per_draw, 1.0)});
    }
    return out;
}

std::vector<std::optional<double>> cori_rt(std::span<const double> counts,
                                           const InfectivityProfile& profile, int tau) {
    if (tau < 1) {
        throw ValidationError("window tau must be at least 1");
    }
    const int J = static_cast<int>(counts.size());
    const int S = profile.max_lag;
    std::vector<std::optional<double>> out(static_cast<std::size_t>(J));
    for (int t = S + tau - 1; t < J; ++t) {
        double numerator = 0.0;
        double denominator = 0.0;
        for (int k = t - tau + 1; k <= t; ++k) {
            numerator += counts[static_cast<std::size_t>(k)];
            for (int s = 1; s <= S; ++s) {
                denominator += counts[static_cast<std::size_t>(k - s)] *
                               profile.weights[static_cast<std::size_t>(s - 1)];
            }
        }
        if (denominator > 0.0) {
            out[static_cast<std::size_t>(t)] = numerator / denominator;
        }
    }
    return out;
}

} // namespace stsurv
