#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace coupons {

using Money = double;

// Identity of a coupon group inside a set: face value and days to expiry.
struct GroupKey {
  Money v = 0.0;
  int T = 0;

  auto operator<=>(const GroupKey&) const = default;
  bool is_default() const { return v == 0.0; }
};

// n identical coupons of face value v that expire in T whole days. T = 0 means
// the coupon is redeemable today and gone tomorrow.
struct CouponGroup {
  Money v = 0.0;
  int T = 0;
  int n = 1;

  auto operator<=>(const CouponGroup&) const = default;

  GroupKey key() const { return {v, T}; }
  bool is_default() const { return v == 0.0; }
};

// The "redeem nothing" option c0 = <0, 0, 1>.
inline constexpr CouponGroup kDefaultGroup{0.0, 0, 1};

// A canonical coupon set: c0 first, then the non-default groups sorted by
// (v, T). Two sets holding the same groups compare equal and hash equal.
class CouponSet {
 public:
  // The default set C0 = {c0}.
  CouponSet();

  // Merges groups sharing (v, T), drops zero counts and v = 0 entries, and
  // inserts c0. Throws ValidationError on negative v, T or n.
  static CouponSet make(std::span<const CouponGroup> groups);
  static CouponSet make(std::initializer_list<CouponGroup> groups) {
    return make(std::span<const CouponGroup>(groups.begin(), groups.size()));
  }

  // All groups including c0 at index 0.
  const std::vector<CouponGroup>& groups() const { return groups_; }
  // Non-default groups only.
  std::span<const CouponGroup> coupons() const {
    return std::span<const CouponGroup>(groups_).subspan(1);
  }

  std::size_t size() const { return groups_.size(); }
  bool is_default() const { return groups_.size() == 1; }
  bool contains(const GroupKey& key) const { return index_of(key).has_value(); }
  std::optional<std::size_t> index_of(const GroupKey& key) const;

  // Largest T over non-default groups; -1 for C0.
  int max_T() const;
  int coupon_count() const;
  Money total_face_value() const;
  bool is_single_coupon() const {
    return groups_.size() == 2 && groups_[1].n == 1;
  }

  std::size_t hash() const { return hash_; }
  std::string to_string() const;

  friend bool operator==(const CouponSet& a, const CouponSet& b) {
    return a.hash_ == b.hash_ && a.groups_ == b.groups_;
  }
  friend bool operator<(const CouponSet& a, const CouponSet& b) {
    return a.groups_ < b.groups_;
  }

 private:
  explicit CouponSet(std::vector<CouponGroup> canonical);
  void rehash();

  std::vector<CouponGroup> groups_;
  std::size_t hash_ = 0;

  friend CouponSet step_set(const CouponSet&, const GroupKey&);
};

struct CouponSetHash {
  std::size_t operator()(const CouponSet& set) const { return set.hash(); }
};

inline CouponSet make_coupon_set(std::span<const CouponGroup> groups) {
  return CouponSet::make(groups);
}

// f_c: one day passes for a single group.
CouponGroup step_group(const CouponGroup& c);

// f(C, c): redeem one coupon of group c (no-op for c0), then age every group.
// Throws DomainError if c is not in C.
CouponSet step_set(const CouponSet& set, const GroupKey& chosen);
inline CouponSet step_set(const CouponSet& set) {
  return step_set(set, kDefaultGroup.key());
}

inline constexpr std::size_t kDefaultReachableCap = 1'000'000;

// Every state reachable from `set` (including itself and C0), ordered so that
// each state's successors come before it. Throws CapacityError above `cap`.
std::vector<CouponSet> enumerate_reachable(const CouponSet& set,
                                           std::size_t cap = kDefaultReachableCap);

// A perceived subset: counts[i] coupons of the i-th non-default group.
struct AwarenessSubset {
  std::vector<int> counts;
  CouponSet set;
};

// prod_i (n_i + 1), saturating at UINT64_MAX.
std::uint64_t awareness_subset_count(const CouponSet& set);

// All of A(C) in mixed-radix order (first group varies fastest), from C0 up to
// C itself. Throws CapacityError carrying the exact size when above `cap`.
std::vector<AwarenessSubset> enumerate_awareness_subsets(const CouponSet& set,
                                                         std::uint64_t cap);

// Materializes per-group counts (aligned with set.coupons()) as a subset.
// Throws DomainError when a count is out of range.
AwarenessSubset make_awareness_subset(const CouponSet& set, std::vector<int> counts);

// r(p, c) = min(v, p). Throws ValidationError for negative p.
Money redemption_value(Money fare, const CouponGroup& c);

}  // namespace coupons
