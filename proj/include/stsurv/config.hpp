#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace stsurv {

enum class RhoMode { common, per_basis };

/// Switches and priors of the hierarchical model. Defaults give the full
/// model; the others exist for reduced models and sampler validation.
struct ModelOptions {
    RhoMode rho_mode = RhoMode::common;
    /// Upper bound c of the Uniform(0, c) priors on every standard deviation.
    double sd_upper = 10.0;
    bool use_likelihood = true;
    bool use_day_of_week = true;
    bool use_overdispersion = true;
    std::optional<double> fixed_rho;
    std::optional<double> fixed_sigma_beta;
    /// 0 means flat priors on mu and gamma; otherwise Normal(0, sd^2).
    double location_prior_sd = 0.0;
};

struct RunConfig {
    int knot_spacing_days = 14;
    int chains = 5;
    int iterations_per_chain = 5000;
    int burn_in = 2000;
    int thin = 15;
    std::uint64_t seed = 20201018;
    int max_lag = 25;
    double si_mean = 4.7;
    double si_sd = 2.9;
    ModelOptions model;

    /// Throws ValidationError when an invariant is broken.
    void validate() const;
};

std::string to_string(RhoMode mode);
RhoMode rho_mode_from_string(const std::string& text);

/// Every key is optional and falls back to the default above. Unknown keys
/// are rejected.
RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

} // namespace stsurv
