#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "coupons/coupon_core.hpp"

namespace coupons {

// Estimated per-day service selection rate and log-normal fare distribution
// of one traveler.
struct TravelerProfile {
  double lambda_hat = 0.0;
  double mu_p = 0.0;
  double sigma_p = 0.0;

  void validate() const;
  auto operator<=>(const TravelerProfile&) const = default;
};

struct McConfig {
  int samples = 10'000;
  std::uint64_t seed = 0;
  // One fare sample vector shared by every state of a table. When off, each
  // state draws its own stream derived from (seed, state).
  bool common_random_numbers = true;

  void validate() const;
  auto operator<=>(const McConfig&) const = default;
};

// Trip rate as a function of the coupon gain: clamp(base + slope * gain, 0, 1).
struct SelectionRateModel {
  double base_rate = 0.0;
  double value_slope = 0.0;

  void validate() const;
  double rate(double gain) const;
};

enum class ValueKind { hat, lower, upper, oracle };

std::string_view to_string(ValueKind kind);
ValueKind value_kind_from_string(std::string_view name);

// Anything that can answer V(C) for a coupon set.
class ValueProvider {
 public:
  virtual ~ValueProvider() = default;
  virtual double value(const CouponSet& set) = 0;
};

struct ValueProvenance {
  std::optional<TravelerProfile> profile;
  std::optional<McConfig> mc;
  std::optional<SelectionRateModel> selection;
};

// Memoized values over canonical coupon sets. Lookups of absent states throw
// DomainError.
class ValueTable : public ValueProvider {
 public:
  explicit ValueTable(ValueKind kind = ValueKind::hat, ValueProvenance provenance = {});

  ValueKind kind() const { return kind_; }
  const ValueProvenance& provenance() const { return provenance_; }

  double value(const CouponSet& set) override { return at(set); }
  double at(const CouponSet& set) const;
  bool contains(const CouponSet& set) const { return entries_.contains(set); }
  void insert(const CouponSet& set, double value);
  std::size_t size() const { return entries_.size(); }

  // Entries sorted successors-first (C0 first).
  std::vector<std::pair<CouponSet, double>> sorted_entries() const;

 private:
  ValueKind kind_;
  ValueProvenance provenance_;
  std::unordered_map<CouponSet, double, CouponSetHash> entries_;
};

// Lazily evaluates the Monte-Carlo value recursion
//   V(C) = V(f(C)) + rate(g) * g,  g = E_p[max_c {min(v_c, p) + V(f(C, c))} - V(f(C))]
// on any coupon set, memoizing every state it touches. A constant rate gives
// V-hat (rate = lambda_hat) or the lower bound (rate = base); a gain-dependent
// rate gives the upper bound.
class ValueEstimator : public ValueProvider {
 public:
  ValueEstimator(ValueKind kind, SelectionRateModel rate, double mu_p, double sigma_p,
                 McConfig mc, ValueProvenance provenance = {});

  // V-hat for one traveler.
  static ValueEstimator hat(const TravelerProfile& profile, const McConfig& mc);

  double value(const CouponSet& set) override;
  const ValueTable& table() const { return table_; }

  // Fare draws used for `set` (the shared vector under common random numbers).
  std::vector<double> fare_samples(const CouponSet& set) const;

 private:
  double compute(const CouponSet& set);

  SelectionRateModel rate_;
  double mu_p_;
  double sigma_p_;
  McConfig mc_;
  std::vector<double> shared_fares_;
  ValueTable table_;
};

// V-hat over every state reachable from `set`.
ValueTable value_hat(const CouponSet& set, const TravelerProfile& profile, const McConfig& mc);

// Single-coupon recursion V(v, T) = V(v, T-1) + lambda * E max{min(p, v) - V(v, T-1), 0}.
double value_hat_single(Money v, int T, const TravelerProfile& profile, const McConfig& mc);

struct ValueBounds {
  ValueTable lower;
  ValueTable upper;
};

// Lower bound uses the constant rate sel.base_rate; upper bound uses
// sel.rate(gain) of the state itself.
ValueBounds value_bounds(const CouponSet& set, const TravelerProfile& profile,
                         const SelectionRateModel& sel, const McConfig& mc);

// Finite distribution (value, probability).
struct DiscreteDistribution {
  std::vector<std::pair<double, double>> atoms;

  void validate(std::size_t max_atoms) const;
};

inline constexpr std::size_t kOracleStateCap = 10'000;
inline constexpr std::size_t kOracleAtomCap = 100;

// Exact optimal values V* by backward recursion with finite fare and
// trip-utility supports (fare and utility independent).
ValueTable value_optimal_oracle(const CouponSet& set, double lambda,
                                const DiscreteDistribution& fares,
                                const DiscreteDistribution& utilities);

// Lower/upper bounds with exact expectations over the same supports. The
// trip indicator is 1{u >= 0} for the lower bound and the optimal
// mode-choice rule 1{u + E V*_c - V*(f(C)) >= 0} for the upper bound.
ValueBounds value_bounds_exact(const CouponSet& set, double lambda,
                               const DiscreteDistribution& fares,
                               const DiscreteDistribution& utilities);

// Delta V(T) = V(f^T(C)) - V(f^{T-1}(f(C, c))) for T = 1..horizon.
std::vector<Money> delta_value(const ValueTable& table, const CouponSet& set,
                               const GroupKey& group, int horizon);

}  // namespace coupons
