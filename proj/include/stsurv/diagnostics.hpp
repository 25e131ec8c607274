#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stsurv/sampler.hpp"
#include "stsurv/summary.hpp"

namespace stsurv {

/// One scalar parameter's retained values, split by chain.
struct ParameterTrace {
    std::string name;
    std::vector<std::vector<double>> chains;
};

/// Traces of every sampled scalar: gamma[2..7], mu[k], rho (or rho[k]),
/// sigma_beta[k], sigma_eps, beta_star[i:k]. Indices are 1-based. Parameters
/// held fixed by the model options are left out.
std::vector<ParameterTrace> scalar_traces(const PosteriorDraws& draws,
                                          bool include_beta_star = true);

/// Split R-hat. Absent with fewer than 2 chains or
/// fewer than 4 draws per chain. Chains that are all constant and equal give
/// exactly 1.
std::optional<double> split_rhat(const std::vector<std::vector<double>>& chains);

/// Effective sample size from split chains with the variogram autocorrelation
/// estimate and initial positive sequence truncation; never exceeds the draw count.
double effective_sample_size(const std::vector<std::vector<double>>& chains);

struct ParameterSummary {
    std::string name;
    Summary summary;
    std::optional<double> rhat;
    double n_eff = 0.0;
};

std::vector<ParameterSummary> diagnostics(const std::vector<ParameterTrace>& traces);
std::vector<ParameterSummary> diagnostics(const PosteriorDraws& draws);

} // namespace stsurv
