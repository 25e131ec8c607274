#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "stsurv/error.hpp"
#include "stsurv/rt_engine.hpp"

using namespace stsurv;

namespace {

PosteriorDraws constant_draws(int I, int K, int D, double value) {
    PosteriorDraws d;
    d.num_chains = 1;
    d.iterations = D;
    for (int n = 0; n < D; ++n) {
        auto s = make_state(I, K, 0, RhoMode::common);
        s.mu.setConstant(value + 0.1 * n);
        d.draws.push_back({0, n + 1, s});
    }
    return d;
}

} // namespace

TEST(Infectivity, DefaultProfileMass) {
    const auto p = build_infectivity(4.7, 2.9, 25);
    EXPECT_GT(p.raw_mass, 0.9999);
    EXPECT_NEAR(p.raw_mass, 0.999952, 1e-6);
    EXPECT_NEAR(std::accumulate(p.weights.begin(), p.weights.end(), 0.0), 1.0, 1e-14);
    EXPECT_EQ(std::max_element(p.weights.begin(), p.weights.end()) - p.weights.begin() + 1, 3);
    EXPECT_NEAR(p.mean_lag(), 5.1985, 1e-4);
}

TEST(Infectivity, MatchesQuadrature) {
    for (const auto& [m, sd, S] : {std::tuple{4.7, 2.9, 25}, std::tuple{6.5, 4.0, 30},
                                  std::tuple{3.0, 1.5, 10}}) {
        const auto p = build_infectivity(m, sd, S);
        const auto raw = oracle::quadrature_infectivity(m, sd, S);
        const double mass = std::accumulate(raw.begin(), raw.end(), 0.0);
        EXPECT_NEAR(p.raw_mass, mass, 1e-9);
        for (int s = 0; s < S; ++s) {
            EXPECT_NEAR(p.weights[static_cast<std::size_t>(s)], raw[static_cast<std::size_t>(s)] / mass,
                        1e-9);
        }
    }
}

TEST(Infectivity, RejectsBadArguments) {
    EXPECT_THROW(build_infectivity(0.0, 1.0, 5), ValidationError);
    EXPECT_THROW(build_infectivity(4.7, -1.0, 5), ValidationError);
    EXPECT_THROW(build_infectivity(4.7, 2.9, 0), ValidationError);
    EXPECT_THROW(profile_from_weights({0.0, 0.0}), ValidationError);
    EXPECT_THROW(profile_from_weights({0.5, -0.1}), ValidationError);
    const auto p = profile_from_weights({1.0, 3.0});
    EXPECT_DOUBLE_EQ(p.weights[1], 0.75);
    EXPECT_DOUBLE_EQ(p.raw_mass, 4.0);
}

TEST(SmoothedRt, ExponentialGrowthHasClosedForm) {
    const auto p = build_infectivity(4.7, 2.9, 25);
    for (double g : {-0.1, 0.0, 0.05, 0.2}) {
        std::vector<double> eta(60);
        for (int t = 0; t < 60; ++t) {
            eta[static_cast<std::size_t>(t)] = 3.0 + g * t;
        }
        double denom = 0.0;
        for (int s = 1; s <= 25; ++s) {
            denom += std::exp(-g * s) * p.weights[static_cast<std::size_t>(s - 1)];
        }
        const auto r = rt_from_log_intensity(eta, p);
        ASSERT_EQ(r.size(), 35u);
        for (double v : r) {
            EXPECT_NEAR(v, 1.0 / denom, 1e-12);
        }
        const double growth = oracle::euler_lotka_growth(p.weights, 1.0 / denom);
        EXPECT_NEAR(growth, g, 1e-10);
    }
}

TEST(SmoothedRt, ConstantPredictorGivesOne) {
    const auto basis = build_basis(56, 14);
    const auto p = build_infectivity(4.7, 2.9, 25);
    const auto draws = constant_draws(3, basis.num_functions, 4, -8.0);
    const auto surface = smoothed_rt(draws, basis, p);
    EXPECT_EQ(surface.first_day(), 25);
    EXPECT_EQ(surface.num_reported(), 31);
    for (int i = 0; i < 3; ++i) {
        for (int t = 0; t < 31; ++t) {
            EXPECT_NEAR(surface.summary(i, t).mean, 1.0, 1e-12);
        }
    }
}

TEST(SmoothedRt, TooShortPeriod) {
    const auto basis = build_basis(28, 14);
    const auto p = build_infectivity(4.7, 2.9, 28);
    const auto draws = constant_draws(1, 3, 1, 0.0);
    try {
        smoothed_rt(draws, basis, p);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("period too short for R_t"), std::string::npos);
    }
}

TEST(SmoothedRt, RegionalIsPopulationWeighted) {
    RtSurface s(2, 3, 5, 1);
    for (int d = 0; d < 3; ++d) {
        s.value(0, d, 0) = 1.0 + d;
        s.value(1, d, 0) = 0.5;
    }
    s.summarize_all();
    EXPECT_DOUBLE_EQ(s.summary(0, 0).mean, 2.0);
    EXPECT_NEAR(s.summary(0, 0).p_gt_1, 2.0 / 3.0, 1e-15);
    const std::vector<double> pop{1.0, 3.0};
    const auto r = regional_rt(s, pop);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_NEAR(r[0].mean, (2.0 * 1 + 0.5 * 3) / 4.0, 1e-15);
    EXPECT_NEAR(r[0].p_gt_1, 1.0 / 3.0, 1e-15);
    EXPECT_THROW(regional_rt(s, std::vector<double>{1.0}), ValidationError);
}

TEST(CoriRt, MatchesBruteForce) {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> len(5, 60);
    std::poisson_distribution<int> pois(3.0);
    std::bernoulli_distribution zero(0.2);
    for (int rep = 0; rep < 50; ++rep) {
        const int S = 1 + rep % 7;
        const int tau = 1 + rep % 5;
        std::vector<double> w(static_cast<std::size_t>(S));
        for (auto& v : w) {
            v = 0.1 + pois(rng);
        }
        const auto p = profile_from_weights(w);
        std::vector<double> counts(static_cast<std::size_t>(len(rng)));
        for (auto& c : counts) {
            c = zero(rng) ? 0.0 : pois(rng);
        }
        const auto got = cori_rt(counts, p, tau);
        const auto want = oracle::brute_cori(counts, p.weights, tau);
        for (std::size_t t = 0; t < counts.size(); ++t) {
            ASSERT_EQ(got[t].has_value(), want[t].first) << "t=" << t;
            if (got[t]) {
                EXPECT_EQ(*got[t], want[t].second);
            }
        }
    }
    EXPECT_THROW(cori_rt(std::vector<double>{1, 2}, profile_from_weights({1.0}), 0), ValidationError);
}
