#include "coupons/value_engine.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "coupons/error.hpp"
#include "coupons/random.hpp"

namespace coupons {

void TravelerProfile::validate() const {
  if (!(lambda_hat >= 0.0 && lambda_hat <= 1.0)) {
    throw ValidationError("lambda_hat must lie in [0, 1]");
  }
  if (!std::isfinite(mu_p)) throw ValidationError("mu_p must be finite");
  if (!(sigma_p >= 0.0) || !std::isfinite(sigma_p)) {
    throw ValidationError("sigma_p must be finite and non-negative");
  }
}

void McConfig::validate() const {
  if (samples < 1) throw ValidationError("Monte-Carlo samples must be >= 1");
}

void SelectionRateModel::validate() const {
  if (!(base_rate >= 0.0 && base_rate <= 1.0)) {
    throw ValidationError("base selection rate must lie in [0, 1]");
  }
  if (!(value_slope >= 0.0) || !std::isfinite(value_slope)) {
    throw ValidationError("selection rate slope must be finite and non-negative");
  }
}

double SelectionRateModel::rate(double gain) const {
  return std::clamp(base_rate + value_slope * gain, 0.0, 1.0);
}

std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::hat: return "hat";
    case ValueKind::lower: return "lower";
    case ValueKind::upper: return "upper";
    case ValueKind::oracle: return "oracle";
  }
  return "hat";
}

ValueKind value_kind_from_string(std::string_view name) {
  if (name == "hat") return ValueKind::hat;
  if (name == "lower") return ValueKind::lower;
  if (name == "upper") return ValueKind::upper;
  if (name == "oracle") return ValueKind::oracle;
  throw ValidationError("unknown value table kind: " + std::string(name));
}

// ---------------------------------------------------------------------------

ValueTable::ValueTable(ValueKind kind, ValueProvenance provenance)
    : kind_(kind), provenance_(std::move(provenance)) {
  entries_.emplace(CouponSet{}, 0.0);
}

double ValueTable::at(const CouponSet& set) const {
  auto it = entries_.find(set);
  if (it == entries_.end()) {
    throw DomainError("value table has no entry for " + set.to_string());
  }
  return it->second;
}

void ValueTable::insert(const CouponSet& set, double value) {
  if (set.is_default() && value != 0.0) throw DomainError("V(C0) must be 0");
  if (!std::isfinite(value)) {
    throw NumericError("non-finite value for " + set.to_string());
  }
  if (value < 0.0) throw DomainError("negative value for " + set.to_string());
  entries_.insert_or_assign(set, value);
}

std::vector<std::pair<CouponSet, double>> ValueTable::sorted_entries() const {
  std::vector<std::pair<CouponSet, double>> out(entries_.begin(), entries_.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.first.max_T() != b.first.max_T()) return a.first.max_T() < b.first.max_T();
    return a.first < b.first;
  });
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> draw_fares(double mu, double sigma, int samples, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> fares(static_cast<std::size_t>(samples));
  for (auto& p : fares) p = std::exp(mu + sigma * normal(rng));
  return fares;
}

}  // namespace

ValueEstimator::ValueEstimator(ValueKind kind, SelectionRateModel rate, double mu_p,
                               double sigma_p, McConfig mc, ValueProvenance provenance)
    : rate_(rate),
      mu_p_(mu_p),
      sigma_p_(sigma_p),
      mc_(mc),
      table_(kind, std::move(provenance)) {
  rate_.validate();
  mc_.validate();
  TravelerProfile{0.0, mu_p, sigma_p}.validate();
  if (mc_.common_random_numbers) {
    shared_fares_ = draw_fares(mu_p_, sigma_p_, mc_.samples, mc_.seed);
  }
}

ValueEstimator ValueEstimator::hat(const TravelerProfile& profile, const McConfig& mc) {
  profile.validate();
  return ValueEstimator(ValueKind::hat, SelectionRateModel{profile.lambda_hat, 0.0},
                        profile.mu_p, profile.sigma_p, mc,
                        ValueProvenance{profile, mc, std::nullopt});
}

std::vector<double> ValueEstimator::fare_samples(const CouponSet& set) const {
  if (mc_.common_random_numbers) return shared_fares_;
  return draw_fares(mu_p_, sigma_p_, mc_.samples, derive_seed(mc_.seed, set.hash()));
}

double ValueEstimator::value(const CouponSet& set) {
  if (table_.contains(set)) return table_.at(set);
  return compute(set);
}

double ValueEstimator::compute(const CouponSet& set) {
  // Successors have strictly smaller max_T, so the recursion depth is bounded
  // by max_T + 2.
  const auto& groups = set.groups();
  std::vector<double> next(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    next[i] = value(step_set(set, groups[i].key()));
  }
  const double idle = next[0];

  std::vector<double> local;
  const std::vector<double>* fares = &shared_fares_;
  if (!mc_.common_random_numbers) {
    local = fare_samples(set);
    fares = &local;
  }
  double sum = 0.0;
  for (double p : *fares) {
    double best = idle;
    for (std::size_t i = 1; i < groups.size(); ++i) {
      best = std::max(best, std::min(groups[i].v, p) + next[i]);
    }
    sum += best - idle;
  }
  const double gain = sum / static_cast<double>(fares->size());
  const double result = idle + rate_.rate(gain) * gain;
  if (!std::isfinite(result)) {
    throw NumericError("non-finite value for " + set.to_string());
  }
  table_.insert(set, result);
  return result;
}

ValueTable value_hat(const CouponSet& set, const TravelerProfile& profile, const McConfig& mc) {
  const auto states = enumerate_reachable(set);
  auto estimator = ValueEstimator::hat(profile, mc);
  for (const auto& state : states) estimator.value(state);
  return estimator.table();
}

double value_hat_single(Money v, int T, const TravelerProfile& profile, const McConfig& mc) {
  if (!(v >= 0.0)) throw ValidationError("face value must be non-negative");
  profile.validate();
  mc.validate();
  if (v == 0.0 || T < 0) return 0.0;

  std::vector<double> shared;
  if (mc.common_random_numbers) {
    shared = draw_fares(profile.mu_p, profile.sigma_p, mc.samples, mc.seed);
  }
  double previous = 0.0;
  for (int t = 0; t <= T; ++t) {
    std::vector<double> local;
    const std::vector<double>* fares = &shared;
    if (!mc.common_random_numbers) {
      const auto state = CouponSet::make({CouponGroup{v, t, 1}});
      local = draw_fares(profile.mu_p, profile.sigma_p, mc.samples,
                         derive_seed(mc.seed, state.hash()));
      fares = &local;
    }
    double sum = 0.0;
    for (double p : *fares) sum += std::max(std::min(p, v) - previous, 0.0);
    const double gain = sum / static_cast<double>(fares->size());
    previous = previous + profile.lambda_hat * gain;
    if (!std::isfinite(previous)) throw NumericError("non-finite single-coupon value");
  }
  return previous;
}

ValueBounds value_bounds(const CouponSet& set, const TravelerProfile& profile,
                         const SelectionRateModel& sel, const McConfig& mc) {
  profile.validate();
  sel.validate();
  const auto states = enumerate_reachable(set);
  ValueProvenance provenance{profile, mc, sel};
  ValueEstimator lower(ValueKind::lower, SelectionRateModel{sel.base_rate, 0.0}, profile.mu_p,
                       profile.sigma_p, mc, provenance);
  ValueEstimator upper(ValueKind::upper, sel, profile.mu_p, profile.sigma_p, mc, provenance);
  for (const auto& state : states) {
    lower.value(state);
    upper.value(state);
  }
  return {lower.table(), upper.table()};
}

// ---------------------------------------------------------------------------

void DiscreteDistribution::validate(std::size_t max_atoms) const {
  if (atoms.empty()) throw ValidationError("distribution has no atoms");
  if (atoms.size() > max_atoms) {
    throw CapacityError("distribution support exceeds " + std::to_string(max_atoms) + " atoms",
                        atoms.size());
  }
  double total = 0.0;
  for (const auto& [x, w] : atoms) {
    if (!std::isfinite(x) || !(w >= 0.0)) throw ValidationError("invalid distribution atom");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("distribution weights must sum to 1");
}

namespace {

struct ExactSupports {
  const DiscreteDistribution& fares;
  const DiscreteDistribution& utilities;
};

// E_p[max_c {min(v_c, p) + V(f(C, c))}] given successor values.
double expected_best(const CouponSet& set, const std::vector<double>& next,
                     const DiscreteDistribution& fares) {
  double total = 0.0;
  for (const auto& [p, w] : fares.atoms) {
    double best = next[0];
    for (std::size_t i = 1; i < set.groups().size(); ++i) {
      best = std::max(best, std::min(set.groups()[i].v, p) + next[i]);
    }
    total += w * best;
  }
  return total;
}

std::vector<double> successor_values(const ValueTable& table, const CouponSet& set) {
  std::vector<double> next;
  next.reserve(set.size());
  for (const auto& g : set.groups()) next.push_back(table.at(step_set(set, g.key())));
  return next;
}

std::vector<CouponSet> oracle_states(const CouponSet& set, double lambda,
                                     const ExactSupports& supports) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("lambda must lie in [0, 1]");
  supports.fares.validate(kOracleAtomCap);
  supports.utilities.validate(kOracleAtomCap);
  for (const auto& [p, w] : supports.fares.atoms) {
    if (p < 0.0) throw ValidationError("fares must be non-negative");
  }
  return enumerate_reachable(set, kOracleStateCap);
}

}  // namespace

ValueTable value_optimal_oracle(const CouponSet& set, double lambda,
                                const DiscreteDistribution& fares,
                                const DiscreteDistribution& utilities) {
  const auto states = oracle_states(set, lambda, {fares, utilities});
  ValueTable table(ValueKind::oracle);
  for (const auto& state : states) {
    if (state.is_default()) continue;
    const auto next = successor_values(table, state);
    const double idle = next[0];
    const double gain = expected_best(state, next, fares) - idle;
    double trip_term = 0.0;
    for (const auto& [u, w] : utilities.atoms) {
      trip_term += w * (std::max(u + gain, 0.0) - std::max(u, 0.0));
    }
    table.insert(state, idle + lambda * trip_term);
  }
  return table;
}

ValueBounds value_bounds_exact(const CouponSet& set, double lambda,
                               const DiscreteDistribution& fares,
                               const DiscreteDistribution& utilities) {
  const auto optimal = value_optimal_oracle(set, lambda, fares, utilities);
  const auto states = enumerate_reachable(set, kOracleStateCap);

  double p_trip_default = 0.0;
  for (const auto& [u, w] : utilities.atoms) {
    if (u >= 0.0) p_trip_default += w;
  }

  ValueBounds bounds{ValueTable(ValueKind::lower), ValueTable(ValueKind::upper)};
  for (const auto& state : states) {
    if (state.is_default()) continue;

    const auto next_opt = successor_values(optimal, state);
    const double gain_opt = expected_best(state, next_opt, fares) - next_opt[0];
    double p_trip_state = 0.0;
    for (const auto& [u, w] : utilities.atoms) {
      if (u + gain_opt >= 0.0) p_trip_state += w;
    }

    const auto next_lo = successor_values(bounds.lower, state);
    const double gain_lo = expected_best(state, next_lo, fares) - next_lo[0];
    bounds.lower.insert(state, next_lo[0] + lambda * p_trip_default * gain_lo);

    const auto next_hi = successor_values(bounds.upper, state);
    const double gain_hi = expected_best(state, next_hi, fares) - next_hi[0];
    bounds.upper.insert(state, next_hi[0] + lambda * p_trip_state * gain_hi);
  }
  return bounds;
}

std::vector<Money> delta_value(const ValueTable& table, const CouponSet& set,
                               const GroupKey& group, int horizon) {
  if (!group.is_default() && !set.contains(group)) {
    throw DomainError("delta_value: group not in set");
  }
  if (horizon < 0) throw ValidationError("delta_value: horizon must be non-negative");
  std::vector<Money> out;
  out.reserve(static_cast<std::size_t>(horizon));
  CouponSet aged = set;                       // f^{T-1}(C) before the step below
  CouponSet redeemed = step_set(set, group);  // f^{T-1}(f(C, c))
  for (int t = 1; t <= horizon; ++t) {
    aged = step_set(aged);
    out.push_back(table.at(aged) - table.at(redeemed));
    redeemed = step_set(redeemed);
  }
  return out;
}

}  // namespace coupons
