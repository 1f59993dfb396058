#include "coupons/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "coupons/error.hpp"

namespace coupons {

ChoiceModelSpec SimConfig::default_spec() {
  ChoiceModelSpec spec;
  spec.unaware = true;
  spec.theta_eps = 0.5;
  spec.theta_V = 1.0;
  spec.attention = {-0.5, 1.5};
  return spec;
}

void SimConfig::validate() const {
  if (!(lambda0 > 0.0 && lambda0 < 1.0)) throw ValidationError("lambda0 must lie in (0, 1)");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("beta must be positive");
  if (t_max < 1) throw ValidationError("t_max must be >= 1");
  if (replications < 1) throw ValidationError("replications must be >= 1");
  if (threads < 1) throw ValidationError("threads must be >= 1");
  if (value_lambda && !(*value_lambda >= 0.0 && *value_lambda <= 1.0)) {
    throw ValidationError("value_lambda must lie in [0, 1]");
  }
  spec.validate();
  value_mc.validate();
  TravelerProfile{0.0, mu_p, sigma_p}.validate();
}

namespace {

// V-hat successor values V(f(C, c)) for every group of each state the
// simulation can visit, precomputed so replications only read.
class SuccessorCache {
 public:
  SuccessorCache(ValueEstimator& values, const CouponSet& start, bool with_subsets)
      : values_(values) {
    for (const auto& state : enumerate_reachable(start)) {
      add(state);
      if (!with_subsets) continue;
      for (const auto& subset : enumerate_awareness_subsets(state, UINT64_MAX)) add(subset.set);
    }
  }

  const std::vector<double>& at(const CouponSet& set) const {
    auto it = cache_.find(set);
    if (it == cache_.end()) throw DomainError("simulation left its precomputed states");
    return it->second;
  }

 private:
  void add(const CouponSet& set) {
    if (cache_.contains(set)) return;
    std::vector<double> next;
    next.reserve(set.size());
    for (const auto& g : set.groups()) next.push_back(values_.value(step_set(set, g.key())));
    cache_.emplace(set, std::move(next));
  }

  ValueEstimator& values_;
  std::unordered_map<CouponSet, std::vector<double>, CouponSetHash> cache_;
};

OptionSet options_for(const CouponSet& set, const std::vector<double>& next, Money fare,
                      bool include_default) {
  OptionSet out;
  out.has_default = include_default;
  const auto& groups = set.groups();
  for (std::size_t i = include_default ? 0 : 1; i < groups.size(); ++i) {
    OptionFeatures o;
    o.face_value = groups[i].v;
    o.count = groups[i].n;
    o.reward = redemption_value(fare, groups[i]);
    o.next_value = next[i];
    o.group = i;
    if (i > 0 && groups[i].v <= fare) out.clip_active = true;
    out.options.push_back(o);
  }
  return out;
}

std::size_t sample_index(const std::vector<double>& probs, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding left u above the total: take the last option with mass.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return 0;
}

struct Replication {
  double trips = 0.0;
  double redeemed = 0.0;
};

}  // namespace

SimResult simulate_promotion(const SimConfig& config) {
  config.validate();
  const double value_lambda = config.value_lambda.value_or(config.lambda0);
  auto values = ValueEstimator::hat({value_lambda, config.mu_p, config.sigma_p}, config.value_mc);
  const SuccessorCache cache(values, config.coupon_set, config.inattention_on);

  const double u0 = std::log(config.lambda0 / (1.0 - config.lambda0)) / config.beta;
  const AttentionState initial_attention =
      config.initial_attention.value_or(AttentionState::uniform(config.coupon_set, true));
  ChoiceModelSpec aware = config.spec;
  aware.unaware = false;
  const auto th = params_of(config.spec);
  const double theta_V = config.spec.theta_V;

  auto run_one = [&](int rep) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(rep)));
    std::normal_distribution<double> normal(0.0, 1.0);
    CouponSet set = config.coupon_set;
    AttentionState attention = initial_attention;
    Replication out;
    for (int t = 0; t < config.t_max; ++t) {
      const CouponSet visible =
          config.inattention_on ? sample_awareness_set(set, attention, config.spec.attention, rng).set
                                : set;
      const double fare = std::exp(config.mu_p + config.sigma_p * normal(rng));

      const auto& next_visible = cache.at(visible);
      double best = theta_V * next_visible[0];
      const auto& vg = visible.groups();
      for (std::size_t i = 1; i < vg.size(); ++i) {
        best = std::max(best, std::min(vg[i].v, fare) + theta_V * next_visible[i]);
      }
      const double gain = best - theta_V * next_visible[0];
      const bool trip = uniform01(rng) < sigmoid(config.beta * (u0 + gain));

      GroupKey chosen = kDefaultGroup.key();
      if (trip) {
        out.trips += 1.0;
        const auto first = option_probs(aware, th, options_for(visible, next_visible, fare, true),
                                        false);
        if (!set.is_default() && uniform01(rng) >= first[0]) {
          // Attention recovery: the wallet is open, choose among all coupons.
          const auto recovery_options = options_for(set, cache.at(set), fare, false);
          const auto recovery = option_probs(aware, th, recovery_options, false);
          const auto pick = recovery_options.options[sample_index(recovery, uniform01(rng))];
          chosen = set.groups()[pick.group].key();
          out.redeemed += pick.reward;
        }
      }
      attention = update_attention(attention, set, chosen);
      set = step_set(set, chosen);
    }
    return out;
  };

  std::vector<Replication> reps(static_cast<std::size_t>(config.replications));
  const int workers = std::min(config.threads, config.replications);
  if (workers <= 1) {
    for (int r = 0; r < config.replications; ++r) reps[r] = run_one(r);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int r = w; r < config.replications; r += workers) reps[r] = run_one(r);
      });
    }
    for (auto& t : pool) t.join();
  }

  SimResult result;
  result.replications = config.replications;
  result.n_trip_0 = config.lambda0 * config.t_max;
  const double n = static_cast<double>(reps.size());
  double trips = 0.0;
  double redeemed = 0.0;
  for (const auto& r : reps) {
    trips += r.trips;
    redeemed += r.redeemed;
    result.v_redeemed_max = std::max(result.v_redeemed_max, r.redeemed);
  }
  result.n_trip_mean = trips / n;
  result.v_redeemed_mean = redeemed / n;
  double trip_ss = 0.0;
  double redeemed_ss = 0.0;
  for (const auto& r : reps) {
    trip_ss += (r.trips - result.n_trip_mean) * (r.trips - result.n_trip_mean);
    redeemed_ss += (r.redeemed - result.v_redeemed_mean) * (r.redeemed - result.v_redeemed_mean);
  }
  if (reps.size() > 1) {
    result.n_trip_std = std::sqrt(trip_ss / (n - 1.0));
    result.v_redeemed_std = std::sqrt(redeemed_ss / (n - 1.0));
  }
  if (redeemed > 0.0) result.rho = (trips - n * result.n_trip_0) / redeemed;
  return result;
}

// ---------------------------------------------------------------------------

namespace {

AttentionState random_attention(const CouponSet& set, double share, Rng& rng) {
  AttentionState state;
  for (const auto& g : set.coupons()) state.set(g.key(), uniform01(rng) < share);
  return state;
}

Money pick(const std::vector<Money>& values, Rng& rng) {
  std::uniform_int_distribution<std::size_t> index(0, values.size() - 1);
  return values[index(rng)];
}

}  // namespace

ScenarioSampler single_coupon_scenarios(std::vector<Money> face_values, int max_T,
                                        double activated_share) {
  if (face_values.empty() || max_T < 0) throw ValidationError("invalid single-coupon sampler");
  return [face_values = std::move(face_values), max_T, activated_share](Rng& rng) {
    std::uniform_int_distribution<int> days(0, max_T);
    const Money v = pick(face_values, rng);
    const int T = days(rng);
    Scenario s{CouponSet::make({CouponGroup{v, T, 1}}), {}};
    s.attention = random_attention(s.set, activated_share, rng);
    return s;
  };
}

ScenarioSampler multi_coupon_scenarios(std::vector<Money> face_values, int max_groups,
                                       int max_count, int max_T, double activated_share) {
  if (face_values.empty() || max_groups < 1 || max_count < 1 || max_T < 0) {
    throw ValidationError("invalid multi-coupon sampler");
  }
  return [=](Rng& rng) {
    std::uniform_int_distribution<int> n_groups(1, max_groups);
    std::uniform_int_distribution<int> count(1, max_count);
    std::uniform_int_distribution<int> days(0, max_T);
    std::vector<CouponGroup> groups;
    const int k = n_groups(rng);
    for (int i = 0; i < k; ++i) groups.push_back({pick(face_values, rng), days(rng), count(rng)});
    Scenario s{CouponSet::make(groups), {}};
    s.attention = random_attention(s.set, activated_share, rng);
    return s;
  };
}

std::vector<TripRecord> generate_dataset(const ChoiceModelSpec& true_spec,
                                         const std::vector<TravelerProfile>& profiles,
                                         const ScenarioSampler& scenarios, std::size_t n_records,
                                         std::uint64_t seed, ValueCatalog& catalog) {
  true_spec.validate();
  if (n_records < 1) throw ValidationError("n_records must be >= 1");
  if (profiles.empty()) throw ValidationError("at least one traveler profile is required");
  bool any_trips = false;
  for (const auto& p : profiles) {
    p.validate();
    any_trips = any_trips || p.lambda_hat > 0.0;
  }
  if (!any_trips) throw ValidationError("every profile has lambda_hat = 0; no trips can occur");

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> which(0, profiles.size() - 1);
  const auto th = params_of(true_spec);
  std::vector<TripRecord> out;
  out.reserve(n_records);

  for (std::size_t traveler = 0; out.size() < n_records; ++traveler) {
    const TravelerProfile profile = profiles[which(rng)];
    Scenario scenario = scenarios(rng);
    CouponSet set = scenario.set;
    AttentionState attention = scenario.attention;
    auto& values = catalog.for_profile(profile);
    while (!set.is_default() && out.size() < n_records) {
      GroupKey chosen = kDefaultGroup.key();
      if (uniform01(rng) < profile.lambda_hat) {
        const double fare = std::exp(profile.mu_p + profile.sigma_p * normal(rng));
        const auto ctx = build_choice_context(set, attention, fare, values, true_spec.unaware,
                                              true_spec.awareness_mode, UINT64_MAX);
        const auto probs = choice_probs(true_spec, th, ctx, set.is_single_coupon());
        chosen = set.groups()[sample_index(probs, uniform01(rng))].key();

        TripRecord record;
        record.traveler_id = "t" + std::to_string(traveler);
        if (!chosen.is_default()) record.chosen = chosen;
        record.fare = fare;
        record.coupon_set = set;
        record.attention = attention;
        record.profile = profile;
        out.push_back(std::move(record));
      }
      attention = update_attention(attention, set, chosen);
      set = step_set(set, chosen);
    }
  }
  return out;
}

}  // namespace coupons
