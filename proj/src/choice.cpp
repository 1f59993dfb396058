#include "coupons/choice.hpp"

#include <algorithm>

#include "coupons/error.hpp"

namespace coupons {

void ChoiceModelSpec::validate() const {
  if (!(theta_eps > 0.0) || !std::isfinite(theta_eps)) {
    throw ValidationError("theta_eps must be positive and finite");
  }
  if (!std::isfinite(theta_V) || !std::isfinite(theta_v)) {
    throw ValidationError("theta_V and theta_v must be finite");
  }
  attention.validate();
}

namespace {

// Options of consideration set `visible` (a subset of `full`), with each
// option's group index mapped back into `full`.
OptionSet make_option_set(const CouponSet& full, const CouponSet& visible, Money fare,
                          ValueProvider& values, bool include_default) {
  OptionSet out;
  out.has_default = include_default;
  for (const auto& g : visible.groups()) {
    if (g.is_default() && !include_default) continue;
    OptionFeatures o;
    o.face_value = g.v;
    o.count = g.n;
    o.reward = redemption_value(fare, g);
    o.next_value = values.value(step_set(visible, g.key()));
    o.group = *full.index_of(g.key());
    if (!g.is_default() && g.v <= fare) out.clip_active = true;
    out.options.push_back(o);
  }
  return out;
}

}  // namespace

ChoiceContext build_choice_context(const CouponSet& set, const AttentionState& state, Money fare,
                                   ValueProvider& values, bool with_awareness,
                                   AwarenessMode mode, std::uint64_t cap) {
  if (!(fare >= 0.0) || !std::isfinite(fare)) {
    throw ValidationError("fare must be finite and non-negative");
  }
  ChoiceContext ctx;
  ctx.set = set;
  ctx.fare = fare;
  ctx.full = make_option_set(set, set, fare, values, true);

  // Attention recovery re-evaluates successors within the full set.
  ctx.restricted = make_option_set(set, set, fare, values, false);
  for (const auto& g : set.coupons()) {
    ctx.group_counts.push_back(g.n);
    ctx.activated.push_back(state.activated(g.key()));
  }
  if (with_awareness) {
    for (auto& subset : enumerate_awareness_subsets(set, cap)) {
      if (mode == AwarenessMode::group_level) {
        bool whole = true;
        for (std::size_t i = 0; i < subset.counts.size(); ++i) {
          whole = whole && (subset.counts[i] == 0 || subset.counts[i] == ctx.group_counts[i]);
        }
        if (!whole) continue;
      }
      AwarenessBranch branch;
      branch.options = make_option_set(set, subset.set, fare, values, true);
      branch.counts = std::move(subset.counts);
      ctx.branches.push_back(std::move(branch));
    }
  }
  return ctx;
}

double single_coupon_prob(const ChoiceModelSpec& spec, Money v, int T, Money fare,
                          ValueProvider& values) {
  spec.validate();
  if (!(v > 0.0)) throw DomainError("single_coupon_prob needs a coupon with v > 0");
  if (T < 0) throw DomainError("single_coupon_prob needs T >= 0");
  const auto set = CouponSet::make({CouponGroup{v, T, 1}});
  const auto options = make_option_set(set, set, fare, values, true);
  return option_probs(spec, params_of(spec), options, true)[1];
}

std::vector<double> general_coupon_prob(const ChoiceModelSpec& spec, const CouponSet& set,
                                        Money fare, ValueProvider& values) {
  spec.validate();
  ChoiceModelSpec aware = spec;
  aware.unaware = false;
  const auto ctx = build_choice_context(set, AttentionState{}, fare, values, false);
  return choice_probs(aware, params_of(spec), ctx, false);
}

std::vector<double> mixture_prob(const ChoiceModelSpec& spec, const CouponSet& set,
                                 const AttentionState& state, Money fare, ValueProvider& values,
                                 std::uint64_t cap) {
  spec.validate();
  if (!spec.unaware) throw DomainError("mixture_prob requires an unaware specification");
  const auto ctx =
      build_choice_context(set, state, fare, values, true, spec.awareness_mode, cap);
  return choice_probs(spec, params_of(spec), ctx, false);
}

std::size_t predicted_choice(const std::vector<double>& probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

}  // namespace coupons
