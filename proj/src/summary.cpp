#include "stsurv/summary.hpp"

#include <algorithm>
#include <cmath>

#include "stsurv/error.hpp"

namespace stsurv {

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) {
        throw ValidationError("quantile of an empty sample");
    }
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Summary summarize(std::span<const double> values) {
    if (values.empty()) {
        throw ValidationError("summary of an empty sample");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) {
        mean += v;
    }
    mean /= n;
    double ss = 0.0;
    for (double v : values) {
        ss += (v - mean) * (v - mean);
    }
    Summary s;
    s.mean = mean;
    s.sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    s.q025 = quantile_sorted(sorted, 0.025);
    s.q50 = quantile_sorted(sorted, 0.5);
    s.q975 = quantile_sorted(sorted, 0.975);
    return s;
}

double exceedance(std::span<const double> values, double threshold) {
    if (values.empty()) {
        return 0.0;
    }
    const auto above = std::count_if(values.begin(), values.end(),
                                     [threshold](double v) { return v > threshold; });
    return static_cast<double>(above) / static_cast<double>(values.size());
}

} // namespace stsurv
