#include <gtest/gtest.h>

#include <random>

#include "coupons/error.hpp"
#include "coupons/value_engine.hpp"
#include "oracles.hpp"

using namespace coupons;

namespace {

const TravelerProfile kProfile{0.05, 3.15, 0.75};

CouponSet S(std::initializer_list<CouponGroup> g) { return CouponSet::make(g); }

DiscreteDistribution random_support(std::mt19937& rng, double lo, double hi) {
  std::uniform_real_distribution<double> x(lo, hi), w(0.1, 1.0);
  DiscreteDistribution d;
  double total = 0.0;
  for (int i = 0; i < 3; ++i) {
    d.atoms.push_back({x(rng), w(rng)});
    total += d.atoms.back().second;
  }
  for (auto& a : d.atoms) a.second /= total;
  return d;
}

}  // namespace

TEST(ValueHat, DefaultSetIsZero) {
  const auto table = value_hat(CouponSet(), kProfile, {});
  EXPECT_EQ(table.at(CouponSet()), 0.0);
  EXPECT_EQ(table.size(), 1u);
}

TEST(ValueHat, SingleStepMatchesClosedForm) {
  // V(<5,0,1>) = lambda * E min(p, 5).
  const McConfig mc{200'000, 1, true};
  const auto table = value_hat(S({{5, 0, 1}}), kProfile, mc);
  const double exact = 0.05 * oracle::lognormal_expected_min(5, 3.15, 0.75);
  EXPECT_NEAR(table.at(S({{5, 0, 1}})), exact, 0.001 * exact);
}

TEST(ValueHat, TwoLevelMatchesClosedForm) {
  // V(<5,1,1>) = V0 + lambda * (E min(p,5) - E min(p,V0)) since V0 < 5.
  const McConfig mc{200'000, 2, true};
  const auto table = value_hat(S({{5, 1, 1}}), kProfile, mc);
  const double e5 = oracle::lognormal_expected_min(5, 3.15, 0.75);
  const double v0 = 0.05 * e5;
  const double exact = v0 + 0.05 * (e5 - oracle::lognormal_expected_min(v0, 3.15, 0.75));
  EXPECT_NEAR(table.at(S({{5, 1, 1}})), exact, 0.005 * exact);
}

TEST(ValueHat, TwoGroupSetMatchesIndependentRecursion) {
  const auto set = S({{5, 3, 1}, {10, 2, 1}});
  const auto table = value_hat(set, kProfile, {200'000, 3, true});
  oracle::RecursiveValue reference(0.05, oracle::lognormal_draws(3.15, 0.75, 1'000'000, 99));
  for (const auto& [state, value] : table.sorted_entries()) {
    const double expected = reference(oracle::from_set(state));
    EXPECT_NEAR(value, expected, 0.01 * expected + 1e-12) << state.to_string();
  }
}

TEST(ValueHat, TableIsClosedUnderSuccessors) {
  const auto table = value_hat(S({{10, 4, 2}, {20, 2, 1}}), kProfile, {1000, 0, true});
  for (const auto& [state, value] : table.sorted_entries()) {
    EXPECT_TRUE(std::isfinite(value));
    EXPECT_GE(value, 0.0);
    for (const auto& g : state.groups()) EXPECT_TRUE(table.contains(step_set(state, g.key())));
  }
}

TEST(ValueHat, DeterministicGivenSeed) {
  const auto set = S({{10, 6, 2}, {5, 3, 1}});
  for (bool crn : {true, false}) {
    const McConfig mc{2000, 42, crn};
    const auto a = value_hat(set, kProfile, mc).sorted_entries();
    const auto b = value_hat(set, kProfile, mc).sorted_entries();
    EXPECT_EQ(a, b);
  }
}

TEST(ValueHat, CappedByTotalFaceValue) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> lambda(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const TravelerProfile p{lambda(rng), 3.15, 0.75};
    const auto table = value_hat(S({{10, 5, 2}, {20, 3, 1}}), p, {500, 1, true});
    for (const auto& [state, value] : table.sorted_entries()) {
      EXPECT_LE(value, state.total_face_value() + 1e-9);
    }
  }
}

TEST(ValueHatSingle, Boundaries) {
  EXPECT_EQ(value_hat_single(0, 10, kProfile, {}), 0.0);
  EXPECT_EQ(value_hat_single(5, -1, kProfile, {}), 0.0);
  EXPECT_THROW(value_hat_single(-1, 2, kProfile, {}), ValidationError);
}

TEST(ValueHatSingle, BitIdenticalToTableUnderSharedSamples) {
  for (bool crn : {true, false}) {
    const McConfig mc{10'000, 8, crn};
    const auto table = value_hat(S({{10, 5, 1}}), kProfile, mc);
    for (int T = 0; T <= 5; ++T) {
      EXPECT_EQ(value_hat_single(10, T, kProfile, mc), table.at(S({{10, T, 1}}))) << T;
    }
  }
}

TEST(ValueHat, MonotoneInFaceValueExpiryCountAndRate) {
  const McConfig mc{3000, 4, true};
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> days(0, 6), count(1, 2);
  std::uniform_real_distribution<double> face(1.0, 30.0), rate(0.0, 0.9);
  for (int trial = 0; trial < 40; ++trial) {
    const double v1 = face(rng), v2 = face(rng);
    const int T1 = days(rng), T2 = days(rng), n1 = count(rng), n2 = count(rng);
    const double lambda = rate(rng);
    const TravelerProfile p{lambda, 3.15, 0.75};
    auto V = [&](CouponSet s, TravelerProfile prof = {}) {
      if (prof.lambda_hat == 0.0 && prof.mu_p == 0.0) prof = p;
      return value_hat(s, prof, mc).at(s);
    };
    const double base = V(S({{v1, T1, n1}, {v2, T2, n2}}));
    EXPECT_LE(base, V(S({{v1 + 1.5, T1, n1}, {v2, T2, n2}})) + 1e-12);
    EXPECT_LE(base, V(S({{v1, T1 + 1, n1}, {v2, T2, n2}})) + 1e-12);
    EXPECT_LE(base, V(S({{v1, T1, n1 + 1}, {v2, T2, n2}})) + 1e-12);
    EXPECT_LE(base, V(S({{v1, T1, n1}, {v2, T2, n2}}), {lambda + 0.1, 3.15, 0.75}) + 1e-12);
    const double single = V(S({{v1, T1, 1}}));
    EXPECT_LE(single, V(S({{v1, T1 + 2, 1}})) + 1e-12);
  }
}

TEST(ValueBounds, ZeroSlopeGivesEqualTables) {
  const auto set = S({{10, 6, 2}, {20, 3, 1}});
  const auto b = value_bounds(set, kProfile, {0.05, 0.0}, {2000, 0, true});
  EXPECT_EQ(b.lower.sorted_entries(), b.upper.sorted_entries());
}

TEST(ValueBounds, LowerBelowUpperWithCommonNumbers) {
  const auto set = S({{10, 10, 2}, {10, 5, 1}, {5, 7, 1}});
  const auto b = value_bounds(set, kProfile, {0.05, 0.01}, {2000, 0, true});
  for (const auto& [state, value] : b.lower.sorted_entries()) {
    EXPECT_LE(value, b.upper.at(state)) << state.to_string();
  }
}

TEST(ValueBounds, FourGroupDeltaSeriesBounded) {
  const auto set = S({{10, 30, 2}, {10, 15, 1}, {5, 20, 1}, {20, 5, 1}});
  const auto b = value_bounds(set, kProfile, {0.05, 0.01}, {10'000, 0, true});
  for (const auto* table : {&b.lower, &b.upper}) {
    const auto series = delta_value(*table, set, {10, 30}, 30);
    ASSERT_EQ(series.size(), 30u);
    for (double d : series) {
      EXPECT_TRUE(std::isfinite(d));
      EXPECT_GE(d, 0.0);
      EXPECT_LE(d, 10.0);
    }
  }
}

TEST(DeltaValue, DefaultGroupGivesZeros) {
  const auto set = S({{10, 4, 2}});
  const auto table = value_hat(set, kProfile, {1000, 0, true});
  for (double d : delta_value(table, set, kDefaultGroup.key(), 4)) EXPECT_EQ(d, 0.0);
}

TEST(DeltaValue, SingletonFirstStepIsOneDayYoungerValue) {
  // Delta V(1) = V(f(C)) - V(f(C, c)) = V(<5,2,1>) - V(C0).
  const auto set = S({{5, 3, 1}});
  const McConfig mc{5000, 0, true};
  const auto table = value_hat(set, kProfile, mc);
  const auto series = delta_value(table, set, {5, 3}, 1);
  ASSERT_EQ(series.size(), 1u);
  EXPECT_EQ(series[0], value_hat_single(5, 2, kProfile, mc));
}

TEST(DeltaValue, MissingGroupIsDomainError) {
  const auto set = S({{5, 3, 1}});
  const auto table = value_hat(set, kProfile, {100, 0, true});
  EXPECT_THROW(delta_value(table, set, {5, 2}, 1), DomainError);
}

TEST(ValueTable, RejectsBadEntries) {
  ValueTable t;
  EXPECT_THROW(t.insert(S({{5, 1, 1}}), std::nan("")), NumericError);
  EXPECT_THROW(t.insert(CouponSet(), 1.0), DomainError);
  EXPECT_THROW(t.insert(S({{5, 1, 1}}), -1.0), DomainError);
  EXPECT_THROW(t.at(S({{5, 1, 1}})), DomainError);
}

TEST(Oracle, DefaultSetIsZero) {
  const DiscreteDistribution fares{{{12.0, 1.0}}}, u{{{1.0, 1.0}}};
  EXPECT_EQ(value_optimal_oracle(CouponSet(), 0.5, fares, u).at(CouponSet()), 0.0);
}

TEST(Oracle, DeterministicSingleStep) {
  const DiscreteDistribution fares{{{12.0, 1.0}}}, u{{{1.0, 1.0}}};
  const auto set = S({{5, 0, 1}});
  EXPECT_DOUBLE_EQ(value_optimal_oracle(set, 1.0, fares, u).at(set), 5.0);
}

TEST(Oracle, RejectsOversizedSupport) {
  DiscreteDistribution big;
  for (int i = 0; i < 101; ++i) big.atoms.push_back({double(i), 1.0 / 101});
  const DiscreteDistribution u{{{1.0, 1.0}}};
  EXPECT_THROW(value_optimal_oracle(S({{5, 1, 1}}), 0.5, big, u), CapacityError);
}

TEST(Oracle, BoundsSandwichOptimalValue) {
  std::mt19937 rng(23);
  std::uniform_int_distribution<int> groups(1, 2), days(0, 4), count(1, 2);
  std::uniform_real_distribution<double> face(1, 30), lambda(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<CouponGroup> g;
    const int k = groups(rng);
    for (int i = 0; i < k; ++i) g.push_back({face(rng), days(rng), count(rng)});
    const auto set = CouponSet::make(g);
    const auto fares = random_support(rng, 1, 40);
    const auto u = random_support(rng, -20, 10);
    const double lam = lambda(rng);
    const auto opt = value_optimal_oracle(set, lam, fares, u);
    const auto b = value_bounds_exact(set, lam, fares, u);
    for (const auto& [state, v] : opt.sorted_entries()) {
      EXPECT_LE(b.lower.at(state), v + 1e-12);
      EXPECT_LE(v, b.upper.at(state) + 1e-12);
    }
  }
}

TEST(IndicatorGap, DoubleInequality) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> x(-50, 50);
  auto ind = [](double z) { return z >= 0 ? 1.0 : 0.0; };
  for (int i = 0; i < 100'000; ++i) {
    double a = x(rng), b = x(rng);
    if (a < b) std::swap(a, b);
    const double mid = std::max(a, 0.0) - std::max(b, 0.0);
    EXPECT_GE(ind(a) * (a - b), mid);
    EXPECT_GE(mid, ind(b) * (a - b));
  }
}

TEST(DiscountedGain, ConstantGainConverges) {
  // On the default-set chain a constant per-step gain g accumulates to g / (1 - gamma).
  for (double gamma : {0.5, 0.9, 0.99}) {
    const double g = 3.0;
    double total = 0.0, weight = 1.0;
    for (int t = 0; t < 20'000; ++t) {
      total += weight * g;
      weight *= gamma;
    }
    EXPECT_NEAR(total, g / (1 - gamma), 1e-9 * g / (1 - gamma));
  }
}

TEST(ValueKind, RoundTrip) {
  for (auto k : {ValueKind::hat, ValueKind::lower, ValueKind::upper, ValueKind::oracle}) {
    EXPECT_EQ(value_kind_from_string(to_string(k)), k);
  }
  EXPECT_THROW(value_kind_from_string("nope"), ValidationError);
}
