#include "coupons/coupon_core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "coupons/error.hpp"

namespace coupons {

namespace {

std::size_t mix(std::size_t seed, std::uint64_t value) {
  value += 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
  value ^= value >> 30;
  value *= 0xbf58476d1ce4e5b9ULL;
  value ^= value >> 27;
  value *= 0x94d049bb133111ebULL;
  value ^= value >> 31;
  return seed ^ value;
}

}  // namespace

CouponSet::CouponSet() : groups_{kDefaultGroup} { rehash(); }

CouponSet::CouponSet(std::vector<CouponGroup> canonical) : groups_(std::move(canonical)) {
  rehash();
}

void CouponSet::rehash() {
  std::size_t h = groups_.size();
  for (const auto& g : groups_) {
    h = mix(h, std::bit_cast<std::uint64_t>(g.v));
    h = mix(h, static_cast<std::uint64_t>(g.T));
    h = mix(h, static_cast<std::uint64_t>(g.n));
  }
  hash_ = h;
}

CouponSet CouponSet::make(std::span<const CouponGroup> groups) {
  std::vector<CouponGroup> live;
  live.reserve(groups.size() + 1);
  for (const auto& g : groups) {
    if (!std::isfinite(g.v) || g.v < 0.0 || g.T < 0 || g.n < 0) {
      std::ostringstream os;
      os << "invalid coupon group <" << g.v << "," << g.T << "," << g.n << ">";
      throw ValidationError(os.str());
    }
    if (g.v == 0.0 || g.n == 0) continue;
    live.push_back(g);
  }
  std::sort(live.begin(), live.end(),
            [](const CouponGroup& a, const CouponGroup& b) { return a.key() < b.key(); });

  std::vector<CouponGroup> out{kDefaultGroup};
  for (const auto& g : live) {
    if (out.size() > 1 && out.back().key() == g.key()) {
      out.back().n += g.n;
    } else {
      out.push_back(g);
    }
  }
  return CouponSet(std::move(out));
}

std::optional<std::size_t> CouponSet::index_of(const GroupKey& key) const {
  auto it = std::lower_bound(groups_.begin(), groups_.end(), key,
                             [](const CouponGroup& g, const GroupKey& k) { return g.key() < k; });
  if (it == groups_.end() || it->key() != key) return std::nullopt;
  return static_cast<std::size_t>(it - groups_.begin());
}

int CouponSet::max_T() const {
  int t = -1;
  for (const auto& g : coupons()) t = std::max(t, g.T);
  return t;
}

int CouponSet::coupon_count() const {
  int n = 0;
  for (const auto& g : coupons()) n += g.n;
  return n;
}

Money CouponSet::total_face_value() const {
  Money total = 0.0;
  for (const auto& g : coupons()) total += g.v * g.n;
  return total;
}

std::string CouponSet::to_string() const {
  std::ostringstream os;
  os << "{c0";
  for (const auto& g : coupons()) os << ",<" << g.v << "," << g.T << "," << g.n << ">";
  os << "}";
  return os.str();
}

CouponGroup step_group(const CouponGroup& c) {
  if (c.v > 0.0 && c.n > 0 && c.T >= 1) return {c.v, c.T - 1, c.n};
  return kDefaultGroup;
}

CouponSet step_set(const CouponSet& set, const GroupKey& chosen) {
  std::optional<std::size_t> redeemed;
  if (!chosen.is_default()) {
    redeemed = set.index_of(chosen);
    if (!redeemed) {
      std::ostringstream os;
      os << "group <" << chosen.v << "," << chosen.T << "> is not in " << set.to_string();
      throw DomainError(os.str());
    }
  }
  std::vector<CouponGroup> out{kDefaultGroup};
  out.reserve(set.size());
  const auto& groups = set.groups();
  for (std::size_t i = 1; i < groups.size(); ++i) {
    CouponGroup g = groups[i];
    if (redeemed && *redeemed == i) --g.n;
    if (g.n == 0) continue;
    CouponGroup next = step_group(g);
    // Uniform aging keeps the (v, T) order, so no re-sort is needed.
    if (!next.is_default()) out.push_back(next);
  }
  return CouponSet(std::move(out));
}

std::vector<CouponSet> enumerate_reachable(const CouponSet& set, std::size_t cap) {
  std::unordered_set<CouponSet, CouponSetHash> seen{set};
  std::vector<CouponSet> frontier{set};
  while (!frontier.empty()) {
    CouponSet current = std::move(frontier.back());
    frontier.pop_back();
    for (const auto& g : current.groups()) {
      CouponSet next = step_set(current, g.key());
      if (seen.insert(next).second) {
        if (seen.size() > cap) {
          throw CapacityError("reachable state count exceeds cap " + std::to_string(cap),
                              seen.size());
        }
        frontier.push_back(std::move(next));
      }
    }
  }
  std::vector<CouponSet> states(seen.begin(), seen.end());
  // max_T strictly drops along every non-trivial transition.
  std::sort(states.begin(), states.end(), [](const CouponSet& a, const CouponSet& b) {
    if (a.max_T() != b.max_T()) return a.max_T() < b.max_T();
    return a < b;
  });
  return states;
}

std::uint64_t awareness_subset_count(const CouponSet& set) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t count = 1;
  for (const auto& g : set.coupons()) {
    const auto radix = static_cast<std::uint64_t>(g.n) + 1;
    if (count > kMax / radix) return kMax;
    count *= radix;
  }
  return count;
}

AwarenessSubset make_awareness_subset(const CouponSet& set, std::vector<int> counts) {
  const auto coupons = set.coupons();
  if (counts.size() != coupons.size()) {
    throw DomainError("awareness subset has " + std::to_string(counts.size()) +
                      " counts for " + std::to_string(coupons.size()) + " groups");
  }
  std::vector<CouponGroup> groups;
  groups.reserve(coupons.size());
  for (std::size_t i = 0; i < coupons.size(); ++i) {
    if (counts[i] < 0 || counts[i] > coupons[i].n) {
      throw DomainError("awareness count out of range for group " + std::to_string(i));
    }
    groups.push_back({coupons[i].v, coupons[i].T, counts[i]});
  }
  return {std::move(counts), CouponSet::make(groups)};
}

std::vector<AwarenessSubset> enumerate_awareness_subsets(const CouponSet& set,
                                                         std::uint64_t cap) {
  const std::uint64_t total = awareness_subset_count(set);
  if (total > cap) {
    throw CapacityError("awareness subset count " + std::to_string(total) +
                            " exceeds cap " + std::to_string(cap),
                        total);
  }
  const auto coupons = set.coupons();
  std::vector<AwarenessSubset> out;
  out.reserve(static_cast<std::size_t>(total));
  std::vector<int> counts(coupons.size(), 0);
  for (std::uint64_t k = 0; k < total; ++k) {
    out.push_back(make_awareness_subset(set, counts));
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (++counts[i] <= coupons[i].n) break;
      counts[i] = 0;
    }
  }
  return out;
}

Money redemption_value(Money fare, const CouponGroup& c) {
  if (!(fare >= 0.0)) throw ValidationError("fare must be non-negative");
  if (c.is_default()) return 0.0;
  return std::min(c.v, fare);
}

}  // namespace coupons
