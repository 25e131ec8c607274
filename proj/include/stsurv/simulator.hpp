#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stsurv/data_io.hpp"
#include "stsurv/model.hpp"
#include "stsurv/rt_engine.hpp"
#include "stsurv/spatial.hpp"
#include "stsurv/spline_basis.hpp"

namespace stsurv {

/// Zero-padded ids ("a01", "a02", ...) whose lexicographic order is the index
/// order.
std::vector<std::string> default_area_ids(int count);

struct SimulationSpec {
    AdjacencyGraph graph;
    std::vector<double> populations;
    int num_days = 56;
    int knot_spacing = 14;
    Eigen::VectorXd gamma = Eigen::VectorXd::Zero(kDaysPerWeek); // gamma[0] must be 0
    Eigen::VectorXd mu;                                          // K
    double rho = 0.5;
    Eigen::VectorXd sigma_beta; // K; zero entries give a zero column
    double sigma_eps = 0.5;     // zero disables eps
    std::uint64_t seed = 1;
    Date start_date = Date{std::chrono::year{2020} / std::chrono::March / 6};
    /// Largest admissible intensity of any cell.
    double max_intensity = 1e9;
};

struct ModelSimulation {
    SurveillanceDataset dataset;
    ModelState truth;
    SplineBasis basis;
};

/// Forward draw from the hierarchical model: beta_star columns from the
/// Leroux field, eps i.i.d. normal, Poisson counts.
ModelSimulation simulate_from_model(const SimulationSpec& spec);

struct RenewalSpec {
    int num_areas = 1;
    std::vector<double> populations; // defaults to 1e5 each when empty
    int num_days = 100;
    InfectivityProfile profile;
    std::uint64_t seed = 1;
    /// Target R per day, length num_days.
    std::vector<double> r_schedule;
    /// Constant imported cases per day over the first S days.
    double daily_imports = 10.0;
    Date start_date = Date{std::chrono::year{2020} / std::chrono::March / 6};
};

struct RenewalSimulation {
    SurveillanceDataset dataset;
    /// Areas whose last S days are all zero.
    std::vector<bool> extinct;
};

/// Independent per-area renewal process:
/// O_t ~ Poisson(R_t * sum_s O_{t-s} w_s) (+ imports while t <= S).
RenewalSimulation simulate_renewal(const RenewalSpec& spec);

} // namespace stsurv
