#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "stsurv/config.hpp"
#include "stsurv/data_io.hpp"
#include "stsurv/model.hpp"
#include "stsurv/spatial.hpp"
#include "stsurv/spline_basis.hpp"

namespace stsurv {

struct Draw {
    int chain = 0;
    int iteration = 0; // 1-based iteration of the chain
    ModelState state;
};

/// Retained states of all chains, ordered by chain then iteration.
struct PosteriorDraws {
    int num_chains = 0;
    int iterations = 0;
    int burn_in = 0;
    int thin = 1;
    bool has_eps = false;
    ModelOptions options;
    std::vector<Draw> draws;
    /// Post burn-in acceptance rate per update block, one map per chain.
    std::vector<std::map<std::string, double>> acceptance;

    [[nodiscard]] std::size_t size() const noexcept { return draws.size(); }
    [[nodiscard]] int draws_per_chain() const;
};

struct SamplerSettings {
    /// Keep eps (I x J per draw) in the retained states.
    bool keep_eps = false;
    /// Progress lines (chain, iteration, acceptance) on `log`.
    bool progress = false;
    std::ostream* log = nullptr;
    /// Run chains on separate threads. Results do not depend on this.
    bool parallel = true;
};

/// Multi-chain adaptive Metropolis-within-Gibbs.
///
/// Per iteration, in order: gamma_2..gamma_7, mu_k, a joint mu_k / beta_star
/// column shift, every beta_star_ik, every eps_ij, sigma_beta_k plus a joint
/// rescaling of (sigma_beta_k, beta_star column k), sigma_eps plus a joint
/// rescaling of (sigma_eps, eps), and rho. All moves are random-walk
/// Metropolis; scales and rho use log / logit coordinates. Proposal scales
/// adapt by Robbins-Monro towards 0.44 acceptance during burn-in only.
///
/// Chain c draws from mt19937_64 seeded with {seed, c}, so results are
/// reproducible for a given seed regardless of threading.
PosteriorDraws fit(const SurveillanceDataset& dataset, const LerouxField& field,
                   const SplineBasis& basis, const RunConfig& config,
                   const SamplerSettings& settings = {});

} // namespace stsurv
