#include "stsurv/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "stsurv/error.hpp"

namespace stsurv {

namespace {

std::vector<Date> consecutive_dates(Date start, int days) {
    std::vector<Date> out;
    for (int j = 0; j < days; ++j) {
        out.push_back(start + std::chrono::days{j});
    }
    return out;
}

int poisson(std::mt19937_64& rng, double mean) {
    if (mean <= 0.0) {
        return 0;
    }
    return static_cast<int>(std::poisson_distribution<long long>(mean)(rng));
}

} // namespace

std::vector<std::string> default_area_ids(int count) {
    const int width = std::max(2, static_cast<int>(std::to_string(count).size()));
    std::vector<std::string> ids;
    for (int i = 1; i <= count; ++i) {
        const std::string digits = std::to_string(i);
        ids.push_back("a" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits);
    }
    return ids;
}

ModelSimulation simulate_from_model(const SimulationSpec& spec) {
    const int I = spec.graph.size();
    if (I < 1 || static_cast<int>(spec.populations.size()) != I) {
        throw ValidationError("simulation needs one population per graph node");
    }
    ModelSimulation sim;
    sim.basis = build_basis(spec.num_days, spec.knot_spacing);
    const int K = sim.basis.num_functions;
    const int J = spec.num_days;
    if (spec.mu.size() != K || spec.sigma_beta.size() != K) {
        throw ValidationError("mu and sigma_beta must have K = " + std::to_string(K) + " entries");
    }
    if (spec.gamma.size() != kDaysPerWeek || spec.gamma[0] != 0.0) {
        throw ValidationError("gamma needs 7 entries with gamma[0] = 0");
    }
    if (spec.rho < 0.0 || spec.rho > kRhoMax) {
        throw ValidationError("rho outside [0, 1 - 1e-6]");
    }
    if (spec.sigma_eps < 0.0 || (spec.sigma_beta.array() < 0.0).any()) {
        throw ValidationError("standard deviations must be non-negative");
    }

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const LerouxField field(spec.graph);

    ModelState truth = make_state(I, K, J, RhoMode::common);
    truth.gamma = spec.gamma;
    truth.mu = spec.mu;
    truth.rho[0] = spec.rho;
    truth.sigma_beta = spec.sigma_beta;
    truth.sigma_eps = spec.sigma_eps;
    for (int k = 0; k < K; ++k) {
        const double s = spec.sigma_beta[k];
        truth.beta_star.col(k) =
            s > 0.0 ? field.sample(spec.rho, s * s, rng) : Eigen::VectorXd::Zero(I);
    }
    for (int j = 0; j < J; ++j) {
        for (int i = 0; i < I; ++i) {
            truth.eps(i, j) = spec.sigma_eps > 0.0 ? spec.sigma_eps * normal(rng) : 0.0;
        }
    }

    auto& ds = sim.dataset;
    ds.area_ids = default_area_ids(I);
    ds.dates = consecutive_dates(spec.start_date, J);
    ds.populations = spec.populations;
    ds.counts = Eigen::MatrixXi::Zero(I, J);
    for (int j = 0; j < J; ++j) {
        for (int i = 0; i < I; ++i) {
            const double lambda = std::exp(log_intensity(truth, sim.basis, ds, i, j, true, true));
            if (!(lambda <= spec.max_intensity)) {
                throw ValidationError("simulated intensity " + std::to_string(lambda) +
                                      " exceeds the cap " + std::to_string(spec.max_intensity));
            }
            ds.counts(i, j) = poisson(rng, lambda);
        }
    }
    ds.validate();
    sim.truth = std::move(truth);
    return sim;
}

RenewalSimulation simulate_renewal(const RenewalSpec& spec) {
    const int I = spec.num_areas;
    const int J = spec.num_days;
    const int S = spec.profile.max_lag;
    if (I < 1 || J < 1) {
        throw ValidationError("renewal simulation needs at least one area and one day");
    }
    if (static_cast<int>(spec.r_schedule.size()) != J) {
        throw ValidationError("r_schedule must have one entry per day");
    }
    for (double r : spec.r_schedule) {
        if (!(r > 0.0)) {
            throw ValidationError("r_schedule values must be positive");
        }
    }
    if (spec.daily_imports < 0.0) {
        throw ValidationError("daily imports must be non-negative");
    }

    std::mt19937_64 rng(spec.seed);
    RenewalSimulation sim;
    auto& ds = sim.dataset;
    ds.area_ids = default_area_ids(I);
    ds.dates = consecutive_dates(spec.start_date, J);
    ds.populations =
        spec.populations.empty() ? std::vector<double>(static_cast<std::size_t>(I), 1e5) : spec.populations;
    ds.counts = Eigen::MatrixXi::Zero(I, J);
    sim.extinct.assign(static_cast<std::size_t>(I), false);

    for (int i = 0; i < I; ++i) {
        for (int t = 0; t < J; ++t) {
            double pressure = 0.0;
            for (int s = 1; s <= S && t - s >= 0; ++s) {
                pressure += ds.counts(i, t - s) * spec.profile.weights[static_cast<std::size_t>(s - 1)];
            }
            const double mean = spec.r_schedule[static_cast<std::size_t>(t)] * pressure;
            if (mean > 1e9) {
                throw ValidationError("renewal intensity overflow on day " + std::to_string(t + 1));
            }
            int count = poisson(rng, mean);
            if (t < S) {
                count += static_cast<int>(std::lround(spec.daily_imports));
            }
            ds.counts(i, t) = count;
        }
        if (J > S) {
            sim.extinct[static_cast<std::size_t>(i)] = ds.counts.row(i).tail(S).sum() == 0;
        }
    }
    ds.validate();
    return sim;
}

} // namespace stsurv
