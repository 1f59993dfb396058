#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "coupons/attention.hpp"
#include "coupons/coupon_core.hpp"
#include "coupons/dual.hpp"
#include "coupons/value_engine.hpp"

namespace coupons {

struct ChoiceModelSpec {
  bool unaware = false;
  bool clip = false;
  bool extra = false;
  bool scaled = false;
  bool iid = false;
  double theta_eps = 0.1;
  double theta_V = 0.5;
  double theta_v = 0.0;
  AttentionParams attention{0.5, 1.0};
  AwarenessMode awareness_mode = AwarenessMode::coupon_level;

  void validate() const;
};

inline constexpr std::uint64_t kDefaultAwarenessCap = 64;

// Features of one selectable group inside a consideration set.
struct OptionFeatures {
  Money face_value = 0.0;  // 0 for c0
  int count = 1;
  Money reward = 0.0;       // min(v, p)
  double next_value = 0.0;  // V-hat(f(C', c)) within the consideration set C'
  std::size_t group = 0;    // index into the full set's groups()
};

struct OptionSet {
  std::vector<OptionFeatures> options;
  bool has_default = false;
  // Some visible coupon satisfies 0 < v <= p.
  bool clip_active = false;
};

struct AwarenessBranch {
  std::vector<int> counts;
  OptionSet options;
};

// Everything the choice probabilities of one (C, S_a, p) need, with the value
// lookups already resolved. Building it once per record keeps likelihood
// evaluation free of table access.
struct ChoiceContext {
  CouponSet set;
  Money fare = 0.0;
  OptionSet full;        // every group of C, c0 first
  OptionSet restricted;  // C without c0 (attention recovery)
  std::vector<AwarenessBranch> branches;  // only for unaware specs
  std::vector<int> group_counts;          // n_i per non-default group
  std::vector<bool> activated;            // I_a per non-default group
};

ChoiceContext build_choice_context(const CouponSet& set, const AttentionState& state, Money fare,
                                   ValueProvider& values, bool with_awareness,
                                   AwarenessMode mode = AwarenessMode::coupon_level,
                                   std::uint64_t cap = kDefaultAwarenessCap);

template <class S>
struct ChoiceParams {
  S theta_eps;
  S theta_V;
  S theta_v;
  S theta_a;
  S theta_as;
};

inline ChoiceParams<double> params_of(const ChoiceModelSpec& spec) {
  return {spec.theta_eps, spec.theta_V, spec.theta_v, spec.attention.theta_a,
          spec.attention.theta_as};
}

namespace detail {

template <class S>
S utility(const ChoiceModelSpec& spec, const ChoiceParams<S>& th, const OptionFeatures& o) {
  S u = S(o.reward) + th.theta_V * S(o.next_value);
  if (spec.extra) u -= th.theta_v * S(o.face_value);
  return u;
}

// Logit of redeeming under the single-coupon specifications.
template <class S>
S single_redeem_logit(const ChoiceModelSpec& spec, const ChoiceParams<S>& th,
                      const OptionSet& set) {
  const OptionFeatures& idle = set.options[0];
  const OptionFeatures& coupon = set.options[1];
  S score = utility(spec, th, coupon) - th.theta_V * S(idle.next_value);
  if (spec.scaled) score = score / S(coupon.face_value);
  return th.theta_eps * score;
}

}  // namespace detail

// pi(. | p, C') over the options of one consideration set. `single_form`
// selects the single-coupon specifications when the set is {c0, <v,T,1>}.
template <class S>
std::vector<S> option_probs(const ChoiceModelSpec& spec, const ChoiceParams<S>& th,
                            const OptionSet& set, bool single_form) {
  using std::exp;
  using std::log;
  const std::size_t k = set.options.size();
  if (k == 1) return {S(1.0)};
  if (single_form && set.has_default && k == 2 && set.options[1].count == 1) {
    if (spec.clip && set.clip_active) return {S(0.0), S(1.0)};
    const S z = detail::single_redeem_logit(spec, th, set);
    return {sigmoid(-z), sigmoid(z)};
  }

  const bool drop_default = spec.clip && set.has_default && set.clip_active;
  std::vector<S> logits(k);
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    const OptionFeatures& o = set.options[i];
    if (drop_default && set.has_default && i == 0) continue;
    S score = detail::utility(spec, th, o);
    if (spec.scaled && o.face_value > 0.0) score = score / S(o.face_value);
    S logit = th.theta_eps * score;
    if (spec.iid && o.count > 1) logit += S(std::log(static_cast<double>(o.count)));
    logits[i] = logit;
    shift = std::max(shift, value_of(logit));
  }
  std::vector<S> probs(k, S(0.0));
  S total(0.0);
  for (std::size_t i = 0; i < k; ++i) {
    if (drop_default && i == 0) continue;
    probs[i] = exp(logits[i] - S(shift));
    total += probs[i];
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (drop_default && i == 0) continue;
    probs[i] = probs[i] / total;
  }
  return probs;
}

// log P_a of one awareness branch.
template <class S>
S log_awareness_prob(const ChoiceModelSpec& spec, const ChoiceParams<S>& th,
                     const ChoiceContext& ctx, const AwarenessBranch& branch) {
  S total(0.0);
  for (std::size_t i = 0; i < ctx.group_counts.size(); ++i) {
    const int n = ctx.group_counts[i];
    const int k = branch.counts[i];
    const S h = th.theta_a + th.theta_as * S(ctx.activated[i] ? 1.0 : 0.0);
    const S log_q = log_sigmoid(h);
    const S log_not_q = log_sigmoid(-h);
    if (spec.awareness_mode == AwarenessMode::group_level) {
      total += (k == n) ? log_q : log_not_q;
    } else {
      const double log_binom =
          std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
      total += S(log_binom) + S(static_cast<double>(k)) * log_q +
               S(static_cast<double>(n - k)) * log_not_q;
    }
  }
  return total;
}

// Choice distribution over ctx.set.groups(). Aware specs use pi(. | p, C);
// unaware specs mix over awareness branches for c0 and apply attention
// recovery (c0 removed, full set re-evaluated) for every other group.
template <class S>
std::vector<S> choice_probs(const ChoiceModelSpec& spec, const ChoiceParams<S>& th,
                            const ChoiceContext& ctx, bool single_form) {
  using std::exp;
  const std::size_t m = ctx.set.size();
  std::vector<S> out(m, S(0.0));
  if (!spec.unaware) {
    const auto probs = option_probs(spec, th, ctx.full, single_form);
    for (std::size_t i = 0; i < probs.size(); ++i) out[ctx.full.options[i].group] = probs[i];
    return out;
  }
  S p_default(0.0);
  for (const auto& branch : ctx.branches) {
    const S weight = exp(log_awareness_prob(spec, th, ctx, branch));
    const auto probs = option_probs(spec, th, branch.options, single_form);
    p_default += weight * probs[0];
  }
  out[0] = p_default;
  if (m == 1) return out;
  const auto recovery = option_probs(spec, th, ctx.restricted, false);
  for (std::size_t i = 0; i < recovery.size(); ++i) {
    out[ctx.restricted.options[i].group] = (S(1.0) - p_default) * recovery[i];
  }
  return out;
}

// P(redeem) for C = {c0, <v,T,1>} under the single-coupon specifications.
double single_coupon_prob(const ChoiceModelSpec& spec, Money v, int T, Money fare,
                          ValueProvider& values);

// Multinomial logit over the groups of C (aligned with C.groups()).
std::vector<double> general_coupon_prob(const ChoiceModelSpec& spec, const CouponSet& set,
                                        Money fare, ValueProvider& values);

// Observer-side distribution with unawareness (aligned with C.groups()).
std::vector<double> mixture_prob(const ChoiceModelSpec& spec, const CouponSet& set,
                                 const AttentionState& state, Money fare, ValueProvider& values,
                                 std::uint64_t cap = kDefaultAwarenessCap);

// Index of the most probable group; ties go to c0, then to smaller (v, T).
std::size_t predicted_choice(const std::vector<double>& probs);

}  // namespace coupons
