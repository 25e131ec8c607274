#pragma once

#include <Eigen/Core>

#include "stsurv/config.hpp"
#include "stsurv/data_io.hpp"
#include "stsurv/spatial.hpp"
#include "stsurv/spline_basis.hpp"

namespace stsurv {

inline constexpr int kDaysPerWeek = 7;

/// All latent quantities of the model at one sampler iteration.
///
/// log lambda_ij = log P_i + gamma[dow(j)] + sum_k (mu_k + beta_star_ik) X_kj + eps_ij
struct ModelState {
    Eigen::VectorXd gamma;      // 7 day-of-week effects, gamma[0] == 0
    Eigen::VectorXd mu;         // K
    Eigen::MatrixXd beta_star;  // I x K
    Eigen::MatrixXd eps;        // I x J; may be empty in retained draws
    Eigen::VectorXd rho;        // 1 entry (common) or K (per basis)
    Eigen::VectorXd sigma_beta; // K
    double sigma_eps = 0.5;

    [[nodiscard]] double rho_for(int k) const {
        return rho.size() == 1 ? rho[0] : rho[k];
    }
    [[nodiscard]] int num_areas() const noexcept { return static_cast<int>(beta_star.rows()); }
    [[nodiscard]] int num_functions() const noexcept { return static_cast<int>(mu.size()); }
};

/// Zero-initialized state of the right shape.
ModelState make_state(int num_areas, int num_functions, int num_days, RhoMode mode);

/// Day of week 1..7 of 1-based study day `day`; day 1 maps to 1.
int dow(int day);

/// (beta X)_ij for 0-based area i and day j.
double spline_predictor(const ModelState& state, const SplineBasis& basis, int i, int j);

/// I x J matrix of (beta X).
Eigen::MatrixXd spline_trend(const ModelState& state, const SplineBasis& basis);

/// log lambda_ij with optional day-of-week and overdispersion terms. i, j are
/// 0-based.
double log_intensity(const ModelState& state, const SplineBasis& basis,
                     const SurveillanceDataset& dataset, int i, int j, bool include_dow,
                     bool include_eps);

/// True when every parameter lies in its prior support.
bool in_support(const ModelState& state, const ModelOptions& options);

/// Unnormalized log posterior: Poisson likelihood (with log O! terms), one
/// Leroux density per beta_star column, Normal(0, sigma_eps^2) on eps, and the
/// uniform priors on the standard deviations and rho. Flat priors on gamma
/// and mu contribute 0. Returns -inf outside the support.
double log_posterior(const ModelState& state, const SurveillanceDataset& dataset,
                     const SplineBasis& basis, const LerouxField& field,
                     const ModelOptions& options);

} // namespace stsurv
