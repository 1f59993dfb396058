#include "coupons/attention.hpp"

#include <cmath>

#include "coupons/error.hpp"

namespace coupons {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double binomial(int n, int k) {
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

}  // namespace

AttentionState::AttentionState(std::map<GroupKey, bool> activation)
    : activation_(std::move(activation)) {
  std::erase_if(activation_, [](const auto& kv) { return kv.first.is_default(); });
}

AttentionState AttentionState::uniform(const CouponSet& set, bool activated) {
  AttentionState state;
  for (const auto& g : set.coupons()) state.activation_[g.key()] = activated;
  return state;
}

bool AttentionState::activated(const GroupKey& key) const {
  auto it = activation_.find(key);
  return it != activation_.end() && it->second;
}

void AttentionState::set(const GroupKey& key, bool activated) {
  if (key.is_default()) return;
  activation_[key] = activated;
}

void AttentionParams::validate() const {
  if (!std::isfinite(theta_a) || !std::isfinite(theta_as)) {
    throw ValidationError("attention parameters must be finite");
  }
}

double awareness_level(const AttentionParams& params, bool activated) {
  return params.theta_a + params.theta_as * (activated ? 1.0 : 0.0);
}

double awareness_probability(const AttentionParams& params, bool activated) {
  return sigmoid(awareness_level(params, activated));
}

double awareness_set_prob(const CouponSet& set, const AttentionState& state,
                          const AttentionParams& params, const AwarenessSubset& subset,
                          AwarenessMode mode) {
  const auto coupons = set.coupons();
  if (subset.counts.size() != coupons.size()) {
    throw DomainError("awareness subset does not match the coupon set");
  }
  double prob = 1.0;
  for (std::size_t i = 0; i < coupons.size(); ++i) {
    const int n = coupons[i].n;
    const int k = subset.counts[i];
    if (k < 0 || k > n) throw DomainError("awareness count out of range");
    const double q = awareness_probability(params, state.activated(coupons[i].key()));
    if (mode == AwarenessMode::group_level) {
      if (k != 0 && k != n) {
        throw DomainError("group-level awareness requires all-or-nothing counts");
      }
      prob *= (k == n) ? q : 1.0 - q;
    } else {
      prob *= binomial(n, k) * std::pow(q, k) * std::pow(1.0 - q, n - k);
    }
  }
  return prob;
}

AwarenessSubset sample_awareness_set(const CouponSet& set, const AttentionState& state,
                                     const AttentionParams& params, Rng& rng) {
  const auto coupons = set.coupons();
  std::vector<int> counts(coupons.size(), 0);
  for (std::size_t i = 0; i < coupons.size(); ++i) {
    const double q = awareness_probability(params, state.activated(coupons[i].key()));
    for (int j = 0; j < coupons[i].n; ++j) {
      if (uniform01(rng) < q) ++counts[i];
    }
  }
  return make_awareness_subset(set, std::move(counts));
}

AttentionState update_attention(const AttentionState& state, const CouponSet& set,
                                const GroupKey& chosen) {
  std::optional<std::size_t> redeemed;
  if (!chosen.is_default()) {
    redeemed = set.index_of(chosen);
    if (!redeemed) throw DomainError("update_attention: chosen group not in set");
  }
  const bool wallet_opened = redeemed.has_value();
  AttentionState next;
  const auto& groups = set.groups();
  for (std::size_t i = 1; i < groups.size(); ++i) {
    CouponGroup g = groups[i];
    if (redeemed && *redeemed == i) --g.n;
    if (g.n == 0) continue;
    const CouponGroup aged = step_group(g);
    if (aged.is_default()) continue;
    next.set(aged.key(), wallet_opened || state.activated(g.key()));
  }
  return next;
}

}  // namespace coupons
