#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "stsurv/diagnostics.hpp"
#include "stsurv/sampler.hpp"
#include "stsurv/simulator.hpp"

using namespace stsurv;

namespace {

// Direct transcription of the split R-hat definition.
double reference_rhat(const std::vector<std::vector<double>>& chains) {
    std::vector<Eigen::VectorXd> parts;
    for (const auto& c : chains) {
        const Eigen::Index h = static_cast<Eigen::Index>(c.size() / 2);
        const Eigen::Map<const Eigen::VectorXd> v(c.data(), static_cast<Eigen::Index>(c.size()));
        parts.emplace_back(v.head(h));
        parts.emplace_back(v.tail(h));
    }
    const double n = static_cast<double>(parts.front().size());
    const double m = static_cast<double>(parts.size());
    Eigen::VectorXd means(parts.size());
    double W = 0.0;
    for (std::size_t j = 0; j < parts.size(); ++j) {
        means[static_cast<Eigen::Index>(j)] = parts[j].mean();
        W += (parts[j].array() - parts[j].mean()).square().sum() / (n - 1.0);
    }
    W /= m;
    const double B = n * (means.array() - means.mean()).square().sum() / (m - 1.0);
    return std::sqrt(((n - 1.0) / n * W + B / n) / W);
}

std::vector<std::vector<double>> ar1_chains(int m, int n, double phi, std::uint64_t seed,
                                            double offset_step = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<std::vector<double>> out(static_cast<std::size_t>(m));
    for (int c = 0; c < m; ++c) {
        double x = z(rng) / std::sqrt(1.0 - phi * phi);
        for (int t = 0; t < n; ++t) {
            x = phi * x + z(rng);
            out[static_cast<std::size_t>(c)].push_back(x + offset_step * c);
        }
    }
    return out;
}

ModelSimulation small_simulation(std::uint64_t seed) {
    SimulationSpec s;
    s.graph = make_lattice(2, 3);
    s.populations.assign(6, 1e5);
    s.num_days = 42;
    s.mu = Eigen::VectorXd::Constant(4, std::log(20.0 / 1e5));
    s.sigma_beta = Eigen::VectorXd::Constant(4, 0.5);
    s.sigma_eps = 0.3;
    s.seed = seed;
    return simulate_from_model(s);
}

RunConfig short_config() {
    RunConfig c;
    c.chains = 3;
    c.iterations_per_chain = 400;
    c.burn_in = 200;
    c.thin = 4;
    c.seed = 99;
    return c;
}

} // namespace

TEST(SplitRhat, DegenerateCases) {
    EXPECT_FALSE(split_rhat({{1, 2, 3, 4, 5}}));
    EXPECT_FALSE(split_rhat({{1, 2, 3}, {1, 2, 3}}));
    EXPECT_FALSE(split_rhat({{1, 2, 3, 4}, {1, 2, 3, 4, 5}}));
    EXPECT_EQ(split_rhat({{2, 2, 2, 2}, {2, 2, 2, 2}}), 1.0);
    EXPECT_EQ(split_rhat({{2, 2, 2, 2}, {3, 3, 3, 3}}), std::numeric_limits<double>::infinity());
}

TEST(SplitRhat, MatchesDefinition) {
    for (double offset : {0.0, 0.3, 2.0}) {
        const auto chains = ar1_chains(4, 301, 0.5, 17, offset);
        const auto r = split_rhat(chains);
        ASSERT_TRUE(r);
        std::vector<std::vector<double>> even = chains;
        for (auto& c : even) {
            c.erase(c.begin() + 150); // the odd middle draw is dropped
        }
        EXPECT_NEAR(*r, reference_rhat(even), 1e-12);
    }
    EXPECT_LT(*split_rhat(ar1_chains(4, 1000, 0.5, 3)), 1.02);
    EXPECT_GT(*split_rhat(ar1_chains(4, 1000, 0.5, 3, 2.0)), 1.5);
}

TEST(EffectiveSampleSize, IndependentAndAutocorrelated) {
    const auto iid = ar1_chains(4, 2000, 0.0, 21);
    const double n_iid = effective_sample_size(iid);
    EXPECT_GT(n_iid, 6500.0);
    EXPECT_LE(n_iid, 8000.0);
    const double phi = 0.8;
    const auto ar = ar1_chains(4, 5000, phi, 22);
    const double want = 20000.0 * (1 - phi) / (1 + phi);
    EXPECT_NEAR(effective_sample_size(ar), want, 0.2 * want);
}

TEST(Fit, ReproducibleAndThreadIndependent) {
    const auto sim = small_simulation(5);
    const LerouxField field(make_lattice(2, 3));
    const auto cfg = short_config();
    SamplerSettings threaded;
    SamplerSettings serial;
    serial.parallel = false;
    const auto a = fit(sim.dataset, field, sim.basis, cfg, threaded);
    const auto b = fit(sim.dataset, field, sim.basis, cfg, serial);
    ASSERT_EQ(a.size(), 3u * 50u);
    ASSERT_EQ(a.size(), b.size());
    EXPECT_EQ(a.draws_per_chain(), 50);
    for (std::size_t n = 0; n < a.size(); ++n) {
        EXPECT_EQ(a.draws[n].chain, b.draws[n].chain);
        EXPECT_EQ(a.draws[n].iteration, b.draws[n].iteration);
        EXPECT_EQ(a.draws[n].state.beta_star, b.draws[n].state.beta_star);
        EXPECT_EQ(a.draws[n].state.mu, b.draws[n].state.mu);
        EXPECT_EQ(a.draws[n].state.sigma_eps, b.draws[n].state.sigma_eps);
    }
    auto other = cfg;
    other.seed = 100;
    const auto c = fit(sim.dataset, field, sim.basis, other, serial);
    EXPECT_NE(a.draws.back().state.mu, c.draws.back().state.mu);
    EXPECT_EQ(a.draws.front().iteration, 204);
    EXPECT_EQ(a.draws.back().iteration, 400);
}

TEST(Fit, EpsRetainedOnRequestAndAcceptanceReported) {
    const auto sim = small_simulation(6);
    const LerouxField field(make_lattice(2, 3));
    auto cfg = short_config();
    cfg.chains = 2;
    SamplerSettings settings;
    settings.keep_eps = true;
    std::ostringstream log;
    settings.progress = true;
    settings.log = &log;
    const auto d = fit(sim.dataset, field, sim.basis, cfg, settings);
    EXPECT_TRUE(d.has_eps);
    EXPECT_EQ(d.draws.front().state.eps.rows(), 6);
    EXPECT_EQ(d.draws.front().state.eps.cols(), 42);
    EXPECT_NE(log.str().find("chain 2"), std::string::npos);
    ASSERT_EQ(d.acceptance.size(), 2u);
    for (const auto& block : {"mu", "beta_star", "eps", "sigma_beta", "rho"}) {
        ASSERT_TRUE(d.acceptance[0].count(block)) << block;
        EXPECT_GT(d.acceptance[0].at(block), 0.1) << block;
        EXPECT_LT(d.acceptance[0].at(block), 0.9) << block;
    }
}

TEST(Fit, DiagnosticsNamesFollowOptions) {
    const auto sim = small_simulation(7);
    const LerouxField field(make_lattice(2, 3));
    auto cfg = short_config();
    cfg.model.fixed_rho = 0.5;
    cfg.model.use_day_of_week = false;
    const auto d = fit(sim.dataset, field, sim.basis, cfg);
    const auto traces = scalar_traces(d, false);
    std::vector<std::string> names;
    for (const auto& t : traces) {
        names.push_back(t.name);
    }
    EXPECT_EQ(names, (std::vector<std::string>{"mu[1]", "mu[2]", "mu[3]", "mu[4]",
                                               "sigma_beta[1]", "sigma_beta[2]", "sigma_beta[3]",
                                               "sigma_beta[4]", "sigma_eps"}));
    for (const auto& s : d.draws) {
        EXPECT_EQ(s.state.rho[0], 0.5);
        EXPECT_TRUE(s.state.gamma.isZero(0.0));
    }
    const auto rows = diagnostics(d);
    EXPECT_EQ(rows.size(), 9u + 6u * 4u);
    EXPECT_EQ(rows.back().name, "beta_star[6:4]");
}

TEST(Fit, RecoversTheRateLevel) {
    const auto sim = small_simulation(8);
    const LerouxField field(make_lattice(2, 3));
    auto cfg = short_config();
    cfg.iterations_per_chain = 1500;
    cfg.burn_in = 700;
    const auto d = fit(sim.dataset, field, sim.basis, cfg);
    // Total fitted intensity over the period matches the observed total.
    double mean_total = 0.0;
    for (const auto& draw : d.draws) {
        double total = 0.0;
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 42; ++j) {
                total += std::exp(log_intensity(draw.state, sim.basis, sim.dataset, i, j, true, false) +
                                  0.5 * draw.state.sigma_eps * draw.state.sigma_eps);
            }
        }
        mean_total += total / static_cast<double>(d.size());
    }
    const double observed = sim.dataset.counts.sum();
    EXPECT_NEAR(mean_total / observed, 1.0, 0.05);
}
