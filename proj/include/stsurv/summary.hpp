#pragma once

#include <span>
#include <vector>

namespace stsurv {

/// Posterior summary of one scalar quantity.
struct Summary {
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double q50 = 0.0;
    double q975 = 0.0;
};

/// Linearly interpolated sample quantile (Hyndman-Fan type 7) of sorted data.
double quantile_sorted(std::span<const double> sorted, double p);

Summary summarize(std::span<const double> values);

/// Fraction of values strictly greater than threshold.
double exceedance(std::span<const double> values, double threshold);

} // namespace stsurv
