#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "coupons/attention.hpp"
#include "coupons/choice.hpp"
#include "coupons/coupon_core.hpp"
#include "coupons/estimation.hpp"
#include "coupons/random.hpp"
#include "coupons/value_engine.hpp"

namespace coupons {

struct SimConfig {
  double lambda0 = 0.05;  // default mode selection rate sigma(beta * u0)
  double beta = 0.01;     // sensitivity of the trip decision to coupon gain
  ChoiceModelSpec spec = default_spec();
  CouponSet coupon_set;
  double mu_p = 3.15;
  double sigma_p = 0.75;
  int t_max = 30;
  int replications = 250'000;
  std::uint64_t seed = 0;
  bool inattention_on = false;
  // Defaults to every group activated.
  std::optional<AttentionState> initial_attention;
  // Monte-Carlo settings of the V-hat table the traveler evaluates with.
  McConfig value_mc{};
  // Trip rate used inside V-hat; defaults to lambda0.
  std::optional<double> value_lambda;
  int threads = 1;

  static ChoiceModelSpec default_spec();
  void validate() const;
};

struct SimResult {
  double n_trip_mean = 0.0;
  double n_trip_std = 0.0;
  double v_redeemed_mean = 0.0;
  double v_redeemed_std = 0.0;
  std::optional<double> rho;  // absent when nothing was redeemed
  double n_trip_0 = 0.0;
  int replications = 0;
  // Largest per-replication redeemed value (never exceeds the set's face value).
  double v_redeemed_max = 0.0;
};

SimResult simulate_promotion(const SimConfig& config);

struct Scenario {
  CouponSet set;
  AttentionState attention;
};

using ScenarioSampler = std::function<Scenario(Rng&)>;

// One coupon <v, T, 1> with v drawn from `face_values`, T uniform in
// [0, max_T], and the group activated with probability `activated_share`.
ScenarioSampler single_coupon_scenarios(std::vector<Money> face_values, int max_T,
                                        double activated_share);

// 1..max_groups groups with counts 1..max_count and T uniform in [0, max_T].
ScenarioSampler multi_coupon_scenarios(std::vector<Money> face_values, int max_groups,
                                       int max_count, int max_T, double activated_share);

// Simulates travelers day by day: each starts from a sampled scenario and a
// randomly chosen profile, takes a trip with probability lambda_hat, draws a
// log-normal fare, picks a group from the true model's distribution, and ages
// its coupons and attention state. Every trip with a non-empty set becomes a
// record, until n_records are collected.
std::vector<TripRecord> generate_dataset(const ChoiceModelSpec& true_spec,
                                         const std::vector<TravelerProfile>& profiles,
                                         const ScenarioSampler& scenarios, std::size_t n_records,
                                         std::uint64_t seed, ValueCatalog& catalog);

}  // namespace coupons
