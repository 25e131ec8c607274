#include "stsurv/config.hpp"

#include <fstream>
#include <set>

#include "stsurv/error.hpp"

namespace stsurv {

void RunConfig::validate() const {
    if (knot_spacing_days < 1) {
        throw ValidationError("knot_spacing_days must be positive");
    }
    if (chains < 1) {
        throw ValidationError("chains must be positive");
    }
    if (iterations_per_chain < 1) {
        throw ValidationError("iterations_per_chain must be positive");
    }
    if (burn_in < 0 || burn_in >= iterations_per_chain) {
        throw ValidationError("burn_in must satisfy 0 <= burn_in < iterations_per_chain");
    }
    if (thin < 1) {
        throw ValidationError("thin must be at least 1");
    }
    if (max_lag < 1) {
        throw ValidationError("S_max must be positive");
    }
    if (!(si_mean > 0.0) || !(si_sd > 0.0)) {
        throw ValidationError("si_mean and si_sd must be positive");
    }
    if (!(model.sd_upper > 0.0)) {
        throw ValidationError("uniform_sd_upper must be positive");
    }
    if (model.location_prior_sd < 0.0) {
        throw ValidationError("location_prior_sd must be non-negative");
    }
    if (model.fixed_rho && (*model.fixed_rho < 0.0 || *model.fixed_rho >= 1.0)) {
        throw ValidationError("fixed_rho must lie in [0, 1)");
    }
    if (model.fixed_sigma_beta &&
        (!(*model.fixed_sigma_beta > 0.0) || *model.fixed_sigma_beta > model.sd_upper)) {
        throw ValidationError("fixed_sigma_beta must lie in (0, uniform_sd_upper]");
    }
}

std::string to_string(RhoMode mode) { return mode == RhoMode::common ? "common" : "per_basis"; }

RhoMode rho_mode_from_string(const std::string& text) {
    if (text == "common") {
        return RhoMode::common;
    }
    if (text == "per_basis") {
        return RhoMode::per_basis;
    }
    throw ValidationError("rho_mode must be 'common' or 'per_basis', got '" + text + "'");
}

RunConfig config_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw ValidationError("config must be a JSON object");
    }
    static const std::set<std::string> known = {
        "knot_spacing_days", "chains",           "iterations_per_chain", "burn_in",
        "thin",              "seed",             "rho_mode",             "uniform_sd_upper",
        "S_max",             "si_mean",          "si_sd",                "use_likelihood",
        "use_day_of_week",   "use_overdispersion", "fixed_rho",          "fixed_sigma_beta",
        "location_prior_sd"};
    for (const auto& [key, value] : doc.items()) {
        if (!known.contains(key)) {
            throw ValidationError("unknown config key '" + key + "'");
        }
    }

    RunConfig c;
    try {
        c.knot_spacing_days = doc.value("knot_spacing_days", c.knot_spacing_days);
        c.chains = doc.value("chains", c.chains);
        c.iterations_per_chain = doc.value("iterations_per_chain", c.iterations_per_chain);
        c.burn_in = doc.value("burn_in", c.burn_in);
        c.thin = doc.value("thin", c.thin);
        c.seed = doc.value("seed", c.seed);
        c.max_lag = doc.value("S_max", c.max_lag);
        c.si_mean = doc.value("si_mean", c.si_mean);
        c.si_sd = doc.value("si_sd", c.si_sd);
        if (doc.contains("rho_mode")) {
            c.model.rho_mode = rho_mode_from_string(doc.at("rho_mode").get<std::string>());
        }
        c.model.sd_upper = doc.value("uniform_sd_upper", c.model.sd_upper);
        c.model.use_likelihood = doc.value("use_likelihood", c.model.use_likelihood);
        c.model.use_day_of_week = doc.value("use_day_of_week", c.model.use_day_of_week);
        c.model.use_overdispersion = doc.value("use_overdispersion", c.model.use_overdispersion);
        if (doc.contains("fixed_rho") && !doc.at("fixed_rho").is_null()) {
            c.model.fixed_rho = doc.at("fixed_rho").get<double>();
        }
        if (doc.contains("fixed_sigma_beta") && !doc.at("fixed_sigma_beta").is_null()) {
            c.model.fixed_sigma_beta = doc.at("fixed_sigma_beta").get<double>();
        }
        c.model.location_prior_sd = doc.value("location_prior_sd", c.model.location_prior_sd);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config type error: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json doc = {
        {"knot_spacing_days", c.knot_spacing_days},
        {"chains", c.chains},
        {"iterations_per_chain", c.iterations_per_chain},
        {"burn_in", c.burn_in},
        {"thin", c.thin},
        {"seed", c.seed},
        {"rho_mode", to_string(c.model.rho_mode)},
        {"uniform_sd_upper", c.model.sd_upper},
        {"S_max", c.max_lag},
        {"si_mean", c.si_mean},
        {"si_sd", c.si_sd},
        {"use_likelihood", c.model.use_likelihood},
        {"use_day_of_week", c.model.use_day_of_week},
        {"use_overdispersion", c.model.use_overdispersion},
        {"location_prior_sd", c.model.location_prior_sd},
    };
    doc["fixed_rho"] = c.model.fixed_rho ? nlohmann::json(*c.model.fixed_rho) : nlohmann::json();
    doc["fixed_sigma_beta"] =
        c.model.fixed_sigma_beta ? nlohmann::json(*c.model.fixed_sigma_beta) : nlohmann::json();
    return doc;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open config file " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(doc);
}

} // namespace stsurv
