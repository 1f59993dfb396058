#pragma once

// Reference implementations used only by the tests. They work on plain tuples
// and share no code with the library beyond the public types at the seams.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "coupons/coupon_core.hpp"

namespace oracle {

struct Group {
  double v;
  int T;
  int n;
  auto operator<=>(const Group&) const = default;
};

// Non-default groups only, sorted.
using State = std::vector<Group>;

inline State normalize(State s) {
  std::map<std::pair<double, int>, int> merged;
  for (const auto& g : s) {
    if (g.v > 0 && g.n > 0) merged[{g.v, g.T}] += g.n;
  }
  State out;
  for (const auto& [k, n] : merged) out.push_back({k.first, k.second, n});
  return out;
}

inline State from_set(const coupons::CouponSet& set) {
  State s;
  for (const auto& g : set.coupons()) s.push_back({g.v, g.T, g.n});
  return normalize(s);
}

inline coupons::CouponSet to_set(const State& s) {
  std::vector<coupons::CouponGroup> groups;
  for (const auto& g : s) groups.push_back({g.v, g.T, g.n});
  return coupons::CouponSet::make(groups);
}

// Redeem one coupon of group `index` (-1: none), then age every group.
inline State step(const State& s, int index) {
  State out;
  for (int i = 0; i < static_cast<int>(s.size()); ++i) {
    Group g = s[i];
    if (i == index) --g.n;
    if (g.n == 0 || g.T == 0) continue;
    --g.T;
    out.push_back(g);
  }
  return normalize(out);
}

inline std::set<State> reachable_bfs(const State& start) {
  std::set<State> seen{start};
  std::queue<State> frontier;
  frontier.push(start);
  while (!frontier.empty()) {
    const State s = frontier.front();
    frontier.pop();
    for (int i = -1; i < static_cast<int>(s.size()); ++i) {
      State next = step(s, i);
      if (seen.insert(next).second) frontier.push(next);
    }
  }
  return seen;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// E[min(p, k)] for log p ~ N(mu, sigma^2).
inline double lognormal_expected_min(double k, double mu, double sigma) {
  if (k <= 0) return 0.0;
  const double z = (std::log(k) - mu) / sigma;
  return std::exp(mu + sigma * sigma / 2) * normal_cdf(z - sigma) + k * (1 - normal_cdf(z));
}

inline std::vector<double> lognormal_draws(double mu, double sigma, int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::lognormal_distribution<double> dist(mu, sigma);
  std::vector<double> out(n);
  for (auto& x : out) x = dist(rng);
  return out;
}

// Plain recursion V(C) = V(f(C)) + lambda * mean_p[max(V(f(C)), max_c r + V(f(C,c))) - V(f(C))].
class RecursiveValue {
 public:
  RecursiveValue(double lambda, std::vector<double> fares)
      : lambda_(lambda), fares_(std::move(fares)) {}

  double operator()(const State& s) {
    if (s.empty()) return 0.0;
    if (auto it = memo_.find(s); it != memo_.end()) return it->second;
    const double idle = (*this)(step(s, -1));
    std::vector<double> after(s.size());
    for (int i = 0; i < static_cast<int>(s.size()); ++i) after[i] = (*this)(step(s, i));
    double acc = 0.0;
    for (double p : fares_) {
      double best = idle;
      for (std::size_t i = 0; i < s.size(); ++i) best = std::max(best, std::min(s[i].v, p) + after[i]);
      acc += best - idle;
    }
    const double v = idle + lambda_ * acc / static_cast<double>(fares_.size());
    memo_[s] = v;
    return v;
  }

 private:
  double lambda_;
  std::vector<double> fares_;
  std::map<State, double> memo_;
};

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Every vector of per-group counts 0..n_i.
inline std::vector<std::vector<int>> count_vectors(const State& s) {
  std::vector<std::vector<int>> out{{}};
  for (const auto& g : s) {
    std::vector<std::vector<int>> next;
    for (const auto& prefix : out) {
      for (int k = 0; k <= g.n; ++k) {
        auto v = prefix;
        v.push_back(k);
        next.push_back(v);
      }
    }
    out = std::move(next);
  }
  return out;
}

struct Model {
  bool clip = false, extra = false, scaled = false, iid = false;
  double theta_eps = 0.1, theta_V = 0.5, theta_v = 0.0, theta_a = 0.5, theta_as = 1.0;
};

using ValueFn = std::function<double(const State&)>;

// Multinomial logit over `options` (indices into s, -1 = c0) inside the
// consideration set s. Successor values are those of s itself.
inline std::map<int, double> mnl(const Model& m, const State& s, double fare,
                                 const std::vector<int>& options, const ValueFn& V) {
  bool clip_on = false;
  for (int i : options) {
    if (i >= 0 && s[i].v <= fare) clip_on = true;
  }
  std::map<int, double> w;
  double total = 0.0;
  for (int i : options) {
    if (i < 0 && m.clip && clip_on) continue;
    const double v = i < 0 ? 0.0 : s[i].v;
    double score = (i < 0 ? 0.0 : std::min(v, fare)) + m.theta_V * V(step(s, i));
    if (m.extra) score -= m.theta_v * v;
    if (m.scaled && v > 0) score /= v;
    double e = std::exp(m.theta_eps * score);
    if (m.iid && i >= 0) e *= s[i].n;
    w[i] = e;
    total += e;
  }
  for (auto& [k, x] : w) x /= total;
  return w;
}

// Aware multinomial logit over all of s; result[0] is c0, result[i+1] group i.
inline std::vector<double> general(const Model& m, const State& s, double fare, const ValueFn& V) {
  std::vector<int> options{-1};
  for (int i = 0; i < static_cast<int>(s.size()); ++i) options.push_back(i);
  const auto w = mnl(m, s, fare, options, V);
  std::vector<double> out(s.size() + 1, 0.0);
  for (const auto& [i, p] : w) out[i + 1] = p;
  return out;
}

// Observer distribution under unawareness with coupon-level binomial draws.
inline std::vector<double> mixture(const Model& m, const State& s, const std::vector<bool>& active,
                                   double fare, const ValueFn& V) {
  double p0 = 0.0;
  for (const auto& counts : count_vectors(s)) {
    double pa = 1.0;
    State sub;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double q = logistic(m.theta_a + m.theta_as * (active[i] ? 1.0 : 0.0));
      pa *= binomial(s[i].n, counts[i]) * std::pow(q, counts[i]) * std::pow(1 - q, s[i].n - counts[i]);
      if (counts[i] > 0) sub.push_back({s[i].v, s[i].T, counts[i]});
    }
    sub = normalize(sub);
    std::vector<int> options{-1};
    for (int i = 0; i < static_cast<int>(sub.size()); ++i) options.push_back(i);
    const auto w = mnl(m, sub, fare, options, V);
    if (auto it = w.find(-1); it != w.end()) p0 += pa * it->second;
  }
  std::vector<double> out(s.size() + 1, 0.0);
  out[0] = p0;
  std::vector<int> options;
  for (int i = 0; i < static_cast<int>(s.size()); ++i) options.push_back(i);
  if (options.empty()) return out;
  for (const auto& [i, p] : mnl(m, s, fare, options, V)) out[i + 1] = (1 - p0) * p;
  return out;
}

// Redemption activates every survivor; otherwise flags persist. Survivors are
// tracked by position, then aged.
inline std::map<std::pair<double, int>, bool> attention_step(
    const State& s, const std::map<std::pair<double, int>, bool>& flags, int chosen) {
  std::map<std::pair<double, int>, bool> out;
  for (int i = 0; i < static_cast<int>(s.size()); ++i) {
    const int left = s[i].n - (i == chosen ? 1 : 0);
    if (left == 0 || s[i].T == 0) continue;
    auto it = flags.find({s[i].v, s[i].T});
    const bool before = it != flags.end() && it->second;
    out[{s[i].v, s[i].T - 1}] = chosen >= 0 ? true : before;
  }
  return out;
}

}  // namespace oracle
