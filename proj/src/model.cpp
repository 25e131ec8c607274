#include "stsurv/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "stsurv/error.hpp"

namespace stsurv {

namespace {

double normal_logpdf(double x, double sd) {
    return -0.5 * (x / sd) * (x / sd) - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

} // namespace

ModelState make_state(int num_areas, int num_functions, int num_days, RhoMode mode) {
    ModelState s;
    s.gamma = Eigen::VectorXd::Zero(kDaysPerWeek);
    s.mu = Eigen::VectorXd::Zero(num_functions);
    s.beta_star = Eigen::MatrixXd::Zero(num_areas, num_functions);
    s.eps = Eigen::MatrixXd::Zero(num_areas, num_days);
    s.rho = Eigen::VectorXd::Constant(mode == RhoMode::common ? 1 : num_functions, 0.5);
    s.sigma_beta = Eigen::VectorXd::Constant(num_functions, 0.5);
    s.sigma_eps = 0.5;
    return s;
}

int dow(int day) {
    if (day < 1) {
        throw ValidationError("study days are numbered from 1");
    }
    return (day - 1) % kDaysPerWeek + 1;
}

double spline_predictor(const ModelState& state, const SplineBasis& basis, int i, int j) {
    double eta = 0.0;
    for (int k = 0; k < basis.num_functions; ++k) {
        eta += (state.mu[k] + state.beta_star(i, k)) * basis.design(k, j);
    }
    return eta;
}

Eigen::MatrixXd spline_trend(const ModelState& state, const SplineBasis& basis) {
    const Eigen::MatrixXd beta = state.beta_star.rowwise() + state.mu.transpose();
    return beta * basis.design;
}

double log_intensity(const ModelState& state, const SplineBasis& basis,
                     const SurveillanceDataset& dataset, int i, int j, bool include_dow,
                     bool include_eps) {
    if (i < 0 || i >= dataset.num_areas() || j < 0 || j >= dataset.num_days()) {
        throw ValidationError("log_intensity: index out of range");
    }
    double eta = std::log(dataset.populations[static_cast<std::size_t>(i)]) +
                 spline_predictor(state, basis, i, j);
    if (include_dow) {
        eta += state.gamma[dow(j + 1) - 1];
    }
    if (include_eps) {
        eta += state.eps(i, j);
    }
    return eta;
}

bool in_support(const ModelState& state, const ModelOptions& options) {
    if (state.gamma.size() != kDaysPerWeek || state.gamma[0] != 0.0) {
        return false;
    }
    if (!options.use_day_of_week && !state.gamma.isZero(0.0)) {
        return false;
    }
    for (Eigen::Index k = 0; k < state.rho.size(); ++k) {
        if (!(state.rho[k] >= 0.0 && state.rho[k] <= kRhoMax)) {
            return false;
        }
    }
    for (Eigen::Index k = 0; k < state.sigma_beta.size(); ++k) {
        if (!(state.sigma_beta[k] > 0.0 && state.sigma_beta[k] <= options.sd_upper)) {
            return false;
        }
    }
    if (options.use_overdispersion) {
        if (!(state.sigma_eps > 0.0 && state.sigma_eps <= options.sd_upper)) {
            return false;
        }
    }
    return true;
}

double log_posterior(const ModelState& state, const SurveillanceDataset& dataset,
                     const SplineBasis& basis, const LerouxField& field,
                     const ModelOptions& options) {
    constexpr double minus_inf = -std::numeric_limits<double>::infinity();
    if (!in_support(state, options)) {
        return minus_inf;
    }
    const int I = dataset.num_areas();
    const int J = dataset.num_days();
    const int K = basis.num_functions;
    double total = 0.0;

    if (options.use_likelihood) {
        for (int i = 0; i < I; ++i) {
            for (int j = 0; j < J; ++j) {
                const double eta = log_intensity(state, basis, dataset, i, j,
                                                 options.use_day_of_week,
                                                 options.use_overdispersion);
                const double o = dataset.counts(i, j);
                total += o * eta - std::exp(eta) - std::lgamma(o + 1.0);
            }
        }
    }

    std::vector<double> column(static_cast<std::size_t>(I));
    for (int k = 0; k < K; ++k) {
        for (int i = 0; i < I; ++i) {
            column[static_cast<std::size_t>(i)] = state.beta_star(i, k);
        }
        const double sigma = state.sigma_beta[k];
        total += field.log_density(column, state.rho_for(k), sigma * sigma);
    }

    if (options.use_overdispersion) {
        for (Eigen::Index n = 0; n < state.eps.size(); ++n) {
            total += normal_logpdf(state.eps.data()[n], state.sigma_eps);
        }
        total -= std::log(options.sd_upper);
    }
    if (!options.fixed_sigma_beta) {
        total -= K * std::log(options.sd_upper);
    }
    if (!options.fixed_rho) {
        total -= static_cast<double>(state.rho.size()) * std::log(kRhoMax);
    }
    if (options.location_prior_sd > 0.0) {
        for (int k = 0; k < K; ++k) {
            total += normal_logpdf(state.mu[k], options.location_prior_sd);
        }
        if (options.use_day_of_week) {
            for (int d = 1; d < kDaysPerWeek; ++d) {
                total += normal_logpdf(state.gamma[d], options.location_prior_sd);
            }
        }
    }
    return total;
}

} // namespace stsurv
