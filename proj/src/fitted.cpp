#include "stsurv/fitted.hpp"

#include <cmath>

#include "stsurv/error.hpp"
#include "stsurv/model.hpp"
#include "stsurv/summary.hpp"

namespace stsurv {

std::vector<std::vector<double>> fitted_count_draws(const PosteriorDraws& draws,
                                                    const SurveillanceDataset& dataset,
                                                    const SplineBasis& basis,
                                                    std::optional<int> area,
                                                    const CurveOptions& options) {
    if (draws.draws.empty()) {
        throw ValidationError("no retained draws");
    }
    if (area && (*area < 0 || *area >= dataset.num_areas())) {
        throw ValidationError("unknown area index " + std::to_string(*area));
    }
    if (options.include_eps && !draws.has_eps) {
        throw ValidationError("draws were retained without eps");
    }
    const int J = dataset.num_days();
    const int first = area.value_or(0);
    const int last = area ? *area + 1 : dataset.num_areas();

    std::vector<std::vector<double>> out;
    out.reserve(draws.size());
    for (const auto& d : draws.draws) {
        std::vector<double> row(static_cast<std::size_t>(J), 0.0);
        for (int i = first; i < last; ++i) {
            for (int j = 0; j < J; ++j) {
                row[static_cast<std::size_t>(j)] += std::exp(
                    log_intensity(d.state, basis, dataset, i, j, options.include_dow,
                                  options.include_eps));
            }
        }
        out.push_back(std::move(row));
    }
    return out;
}

FittedCurve fitted_curves(const PosteriorDraws& draws, const SurveillanceDataset& dataset,
                          const SplineBasis& basis, std::optional<int> area,
                          const CurveOptions& options) {
    const auto per_draw = fitted_count_draws(draws, dataset, basis, area, options);
    const int J = dataset.num_days();
    FittedCurve curve;
    std::vector<double> column(per_draw.size());
    for (int j = 0; j < J; ++j) {
        for (std::size_t d = 0; d < per_draw.size(); ++d) {
            column[d] = per_draw[d][static_cast<std::size_t>(j)];
        }
        const auto s = summarize(column);
        curve.mean.push_back(s.mean);
        curve.lo95.push_back(s.q025);
        curve.hi95.push_back(s.q975);
    }
    return curve;
}

} // namespace stsurv
