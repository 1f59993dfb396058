#pragma once

#include <map>

#include "coupons/coupon_core.hpp"
#include "coupons/random.hpp"

namespace coupons {

// Activation records I_a per coupon group. Keys are the groups' current
// (v, T); update_attention re-keys them as groups age, so a record follows its
// group from issuance to expiry. Groups without an entry count as inactive.
class AttentionState {
 public:
  AttentionState() = default;
  explicit AttentionState(std::map<GroupKey, bool> activation);

  // Every non-default group of `set` with the same flag.
  static AttentionState uniform(const CouponSet& set, bool activated);

  bool activated(const GroupKey& key) const;
  void set(const GroupKey& key, bool activated);
  const std::map<GroupKey, bool>& entries() const { return activation_; }

  bool operator==(const AttentionState&) const = default;

 private:
  std::map<GroupKey, bool> activation_;
};

struct AttentionParams {
  double theta_a = 0.0;
  double theta_as = 0.0;

  void validate() const;
};

enum class AwarenessMode { coupon_level, group_level };

// h = theta_a + theta_as * I_a.
double awareness_level(const AttentionParams& params, bool activated);
// sigmoid(h): probability that one coupon of the group is perceived.
double awareness_probability(const AttentionParams& params, bool activated);

// P_a(C_a | C, S_a). Coupon level: independent binomial draws per group.
// Group level: each group is perceived whole or not at all, so every count
// must be 0 or n_i. Throws DomainError when `subset` does not fit `set`.
double awareness_set_prob(const CouponSet& set, const AttentionState& state,
                          const AttentionParams& params, const AwarenessSubset& subset,
                          AwarenessMode mode = AwarenessMode::coupon_level);

// One draw of C_a under coupon-level independence.
AwarenessSubset sample_awareness_set(const CouponSet& set, const AttentionState& state,
                                     const AttentionParams& params, Rng& rng);

// f_a: a redemption (chosen != c0) opens the wallet and activates every
// surviving group; otherwise survivors keep their flags. Expired groups are
// dropped. Throws DomainError if `chosen` is not in `set`.
AttentionState update_attention(const AttentionState& state, const CouponSet& set,
                                const GroupKey& chosen);

}  // namespace coupons
