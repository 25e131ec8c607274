#include <gtest/gtest.h>

#include "stsurv/config.hpp"
#include "stsurv/error.hpp"
#include "test_util.hpp"

using namespace stsurv;

TEST(Config, DefaultsAreValid) {
    const RunConfig c;
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(c.knot_spacing_days, 14);
    EXPECT_EQ(c.max_lag, 25);
    EXPECT_DOUBLE_EQ(c.si_mean, 4.7);
    EXPECT_DOUBLE_EQ(c.si_sd, 2.9);
    EXPECT_DOUBLE_EQ(c.model.sd_upper, 10.0);
    EXPECT_EQ(c.model.rho_mode, RhoMode::common);
}

TEST(Config, JsonRoundTrip) {
    RunConfig c;
    c.chains = 3;
    c.seed = 0xfedcba9876543210ull;
    c.model.rho_mode = RhoMode::per_basis;
    c.model.fixed_rho = 0.25;
    c.model.location_prior_sd = 2.0;
    const auto back = config_from_json(config_to_json(c));
    EXPECT_EQ(back.chains, 3);
    EXPECT_EQ(back.seed, c.seed);
    EXPECT_EQ(back.model.rho_mode, RhoMode::per_basis);
    EXPECT_EQ(back.model.fixed_rho, 0.25);
    EXPECT_FALSE(back.model.fixed_sigma_beta);
    EXPECT_DOUBLE_EQ(back.model.location_prior_sd, 2.0);
}

TEST(Config, PartialDocumentsFallBackToDefaults) {
    const auto c = config_from_json(nlohmann::json::parse(R"({"chains": 2, "S_max": 20})"));
    EXPECT_EQ(c.chains, 2);
    EXPECT_EQ(c.max_lag, 20);
    EXPECT_EQ(c.thin, RunConfig{}.thin);
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"chain": 2})")), ValidationError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"chains": "two"})")), ValidationError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"rho_mode": "both"})")),
                 ValidationError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse("[1]")), ValidationError);
    RunConfig c;
    c.burn_in = c.iterations_per_chain;
    EXPECT_THROW(c.validate(), ValidationError);
    c = RunConfig{};
    c.model.fixed_rho = 1.0;
    EXPECT_THROW(c.validate(), ValidationError);
    c = RunConfig{};
    c.thin = 0;
    EXPECT_THROW(c.validate(), ValidationError);

    const auto dir = testutil::temp_dir("cfg");
    testutil::write_file(dir / "bad.json", "{ not json");
    EXPECT_THROW(load_config(dir / "bad.json"), ValidationError);
    EXPECT_THROW(load_config(dir / "absent.json"), ValidationError);
}
