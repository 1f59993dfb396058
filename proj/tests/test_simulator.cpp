#include <gtest/gtest.h>

#include "coupons/error.hpp"
#include "coupons/simulator.hpp"

using namespace coupons;

namespace {

const CouponSet kFourGroups =
    CouponSet::make({{10, 30, 2}, {10, 15, 1}, {5, 20, 1}, {20, 5, 1}});

SimConfig small_config(CouponSet set, int reps = 4000) {
  SimConfig c;
  c.coupon_set = std::move(set);
  c.replications = reps;
  c.value_mc = {2000, 0, true};
  c.seed = 12;
  return c;
}

}  // namespace

TEST(Simulate, EmptySetMatchesBaseline) {
  auto config = small_config(CouponSet(), 20'000);
  const auto r = simulate_promotion(config);
  const double expected = config.lambda0 * config.t_max;
  const double se = std::sqrt(config.t_max * config.lambda0 * (1 - config.lambda0) / r.replications);
  EXPECT_NEAR(r.n_trip_mean, expected, 4 * se);
  EXPECT_DOUBLE_EQ(r.n_trip_0, expected);
  EXPECT_FALSE(r.rho.has_value());
  EXPECT_EQ(r.v_redeemed_mean, 0.0);
  EXPECT_EQ(r.replications, 20'000);
}

TEST(Simulate, DeterministicAcrossRunsAndThreads) {
  auto config = small_config(kFourGroups, 2000);
  const auto a = simulate_promotion(config);
  const auto b = simulate_promotion(config);
  config.threads = 4;
  const auto c = simulate_promotion(config);
  for (const auto* r : {&b, &c}) {
    EXPECT_EQ(a.n_trip_mean, r->n_trip_mean);
    EXPECT_EQ(a.n_trip_std, r->n_trip_std);
    EXPECT_EQ(a.v_redeemed_mean, r->v_redeemed_mean);
    EXPECT_EQ(a.rho, r->rho);
  }
  config.seed = 13;
  EXPECT_NE(simulate_promotion(config).n_trip_mean, a.n_trip_mean);
}

TEST(Simulate, VanishingSensitivityRecoversBaselineRate) {
  auto config = small_config(kFourGroups, 20'000);
  config.beta = 1e-9;
  const auto r = simulate_promotion(config);
  const double se = std::sqrt(config.t_max * config.lambda0 * (1 - config.lambda0) / r.replications);
  EXPECT_NEAR(r.n_trip_mean, config.lambda0 * config.t_max, 4 * se);
}

TEST(Simulate, RedeemedValueNeverExceedsFaceValue) {
  for (bool inattention : {false, true}) {
    auto config = small_config(kFourGroups, 3000);
    config.beta = 0.2;
    config.inattention_on = inattention;
    const auto r = simulate_promotion(config);
    EXPECT_LE(r.v_redeemed_max, kFourGroups.total_face_value());
    EXPECT_GE(r.v_redeemed_mean, 0.0);
    EXPECT_GT(r.v_redeemed_mean, 0.0);
  }
}

TEST(Simulate, TripsIncreaseWithSensitivity) {
  double previous = 0.0;
  for (double beta : {0.001, 0.01, 0.05, 0.2}) {
    auto config = small_config(kFourGroups, 20'000);
    config.beta = beta;
    const auto r = simulate_promotion(config);
    EXPECT_GT(r.n_trip_mean, previous) << "beta " << beta;
    previous = r.n_trip_mean;
  }
}

TEST(Simulate, InattentionLowersRedemption) {
  auto config = small_config(kFourGroups, 20'000);
  config.initial_attention = AttentionState::uniform(kFourGroups, false);
  const auto attentive = simulate_promotion(config);
  config.inattention_on = true;
  const auto inattentive = simulate_promotion(config);
  EXPECT_LT(inattentive.v_redeemed_mean, attentive.v_redeemed_mean);
}

TEST(SimConfig, Validation) {
  SimConfig c;
  EXPECT_NO_THROW(c.validate());
  for (double bad : {0.0, 1.0, -0.2}) {
    c = {};
    c.lambda0 = bad;
    EXPECT_THROW(c.validate(), ValidationError);
  }
  c = {};
  c.beta = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.t_max = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.replications = 0;
  EXPECT_THROW(simulate_promotion(c), ValidationError);
  c = {};
  c.value_lambda = 1.5;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Samplers, SingleCoupon) {
  const auto sampler = single_coupon_scenarios({5, 10}, 4, 1.0);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto s = sampler(rng);
    ASSERT_TRUE(s.set.is_single_coupon());
    const auto& g = s.set.coupons()[0];
    EXPECT_TRUE(g.v == 5 || g.v == 10);
    EXPECT_GE(g.T, 0);
    EXPECT_LE(g.T, 4);
    EXPECT_TRUE(s.attention.activated(g.key()));
  }
  EXPECT_THROW(single_coupon_scenarios({}, 4, 0.5), ValidationError);
}

TEST(Samplers, MultiCoupon) {
  const auto sampler = multi_coupon_scenarios({5, 10, 20}, 3, 2, 6, 0.0);
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto s = sampler(rng);
    EXPECT_FALSE(s.set.is_default());
    EXPECT_LE(s.set.coupons().size(), 3u);
    EXPECT_LE(s.set.max_T(), 6);
    for (const auto& g : s.set.coupons()) EXPECT_FALSE(s.attention.activated(g.key()));
  }
}

TEST(GenerateDataset, ObservedRedemptionMatchesModelWithinThreeSigma) {
  ValueCatalog catalog({1000, 0, true});
  ChoiceModelSpec truth;
  truth.unaware = true;
  truth.theta_eps = 0.3;
  truth.theta_V = 0.8;
  truth.attention = {1.0, 1.5};
  const auto data = generate_dataset(truth, {{0.1, 3.15, 0.75}},
                                     single_coupon_scenarios({5, 10, 20, 30}, 10, 0.5), 20'000, 4,
                                     catalog);
  ASSERT_EQ(data.size(), 20'000u);
  double expected = 0.0, variance = 0.0, observed = 0.0;
  for (const auto& r : data) {
    const auto probs = record_probs(truth, prepare_record(r, truth, catalog));
    const double p = 1.0 - probs[0];
    expected += p;
    variance += p * (1 - p);
    observed += r.chosen ? 1.0 : 0.0;
  }
  EXPECT_NEAR(observed, expected, 3 * std::sqrt(variance));
}

TEST(GenerateDataset, DeterministicAndValid) {
  ChoiceModelSpec spec;
  spec.unaware = true;
  const auto sampler = multi_coupon_scenarios({5, 10, 20}, 2, 2, 5, 0.5);
  ValueCatalog a({500, 0, true}), b({500, 0, true});
  const auto x = generate_dataset(spec, {{0.2, 3, 0.5}}, sampler, 500, 21, a);
  const auto y = generate_dataset(spec, {{0.2, 3, 0.5}}, sampler, 500, 21, b);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NO_THROW(x[i].validate());
    EXPECT_EQ(x[i].coupon_set, y[i].coupon_set);
    EXPECT_EQ(x[i].fare, y[i].fare);
    EXPECT_EQ(x[i].chosen, y[i].chosen);
  }
}

TEST(GenerateDataset, RejectsProfilesWithoutTrips) {
  ValueCatalog catalog;
  EXPECT_THROW(generate_dataset({}, {{0.0, 3, 0.5}}, single_coupon_scenarios({5}, 3, 0.5), 10, 1,
                                catalog),
               ValidationError);
  EXPECT_THROW(generate_dataset({}, {}, single_coupon_scenarios({5}, 3, 0.5), 10, 1, catalog),
               ValidationError);
}
