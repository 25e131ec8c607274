#pragma once

#include <optional>
#include <vector>

#include "stsurv/data_io.hpp"
#include "stsurv/sampler.hpp"
#include "stsurv/spline_basis.hpp"

namespace stsurv {

/// Pointwise posterior mean and 95% band per day.
struct FittedCurve {
    std::vector<double> mean;
    std::vector<double> lo95;
    std::vector<double> hi95;
};

struct CurveOptions {
    bool include_dow = true;
    /// Requires draws retained with eps.
    bool include_eps = false;
};

/// Per-draw fitted counts P_i exp(gamma_dow + (beta X)_ij [+ eps_ij]) for one
/// area, or summed over all areas when `area` is empty, summarized per day.
FittedCurve fitted_curves(const PosteriorDraws& draws, const SurveillanceDataset& dataset,
                          const SplineBasis& basis, std::optional<int> area,
                          const CurveOptions& options = {});

/// Per-draw values behind fitted_curves: draws x J.
std::vector<std::vector<double>> fitted_count_draws(const PosteriorDraws& draws,
                                                    const SurveillanceDataset& dataset,
                                                    const SplineBasis& basis,
                                                    std::optional<int> area,
                                                    const CurveOptions& options = {});

} // namespace stsurv
