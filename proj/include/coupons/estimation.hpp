#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coupons/attention.hpp"
#include "coupons/choice.hpp"
#include "coupons/coupon_core.hpp"
#include "coupons/value_engine.hpp"

namespace coupons {

// One observed coupon decision.
struct TripRecord {
  std::string traveler_id;
  std::optional<GroupKey> chosen;  // nullopt: no coupon (c0)
  Money fare = 0.0;
  CouponSet coupon_set;
  AttentionState attention;
  TravelerProfile profile;

  void validate() const;
  GroupKey chosen_key() const { return chosen.value_or(kDefaultGroup.key()); }
};

enum class Weighting { uniform, face_value_rebalanced };

struct FitConfig {
  double learning_rate = 0.001;
  int batch_size = 256;
  int epochs = 50;
  std::uint64_t seed = 0;
  Weighting weighting = Weighting::uniform;
  // Parameter names held at their template values.
  std::vector<std::string> frozen;
  std::uint64_t awareness_cap = kDefaultAwarenessCap;
  int threads = 1;

  void validate() const;
};

struct Metrics {
  double log_likelihood = 0.0;
  double accuracy = 0.0;
  double ms = 0.0;
  double observed_ms = 0.0;
  std::size_t n_records = 0;
  // Records whose observed choice has probability 0 (log-likelihood -inf).
  std::size_t zero_probability_records = 0;
};

// Lazily built V-hat tables, one per distinct traveler profile.
class ValueCatalog {
 public:
  explicit ValueCatalog(McConfig mc = {}) : mc_(mc) {}

  ValueEstimator& for_profile(const TravelerProfile& profile);
  const McConfig& mc() const { return mc_; }
  std::size_t size() const { return estimators_.size(); }

 private:
  McConfig mc_;
  std::map<TravelerProfile, ValueEstimator> estimators_;
};

// Parameters in optimizer coordinates: theta_eps enters through its log.
enum ParamIndex : std::size_t {
  kLogThetaEps = 0,
  kThetaV = 1,
  kThetav = 2,
  kThetaA = 3,
  kThetaAs = 4,
};
inline constexpr std::size_t kNumParams = 5;
using ParamVector = std::array<double, kNumParams>;

ParamVector to_param_vector(const ChoiceModelSpec& spec);
ChoiceModelSpec with_params(ChoiceModelSpec spec, const ParamVector& x);
const std::array<std::string, kNumParams>& param_names();
// Free parameters of a template: theta_eps, theta_V always; theta_v with the
// extra flag; theta_a, theta_as with the unaware flag; minus `frozen`.
std::array<bool, kNumParams> free_parameters(const ChoiceModelSpec& spec,
                                             const std::vector<std::string>& frozen);

// A record with its value lookups resolved.
struct PreparedRecord {
  ChoiceContext context;
  std::size_t chosen = 0;  // index into context.set.groups()
  bool single_form = false;
};

PreparedRecord prepare_record(const TripRecord& record, const ChoiceModelSpec& spec,
                              ValueCatalog& catalog, std::uint64_t cap = kDefaultAwarenessCap);

// Choice distribution of a prepared record (single-coupon specifications on
// single-coupon sets, multinomial logit otherwise).
std::vector<double> record_probs(const ChoiceModelSpec& spec, const PreparedRecord& record);
double record_log_likelihood(const ChoiceModelSpec& spec, const PreparedRecord& record);
// Exact gradient of the record log-likelihood in optimizer coordinates.
ParamVector record_gradient(const ChoiceModelSpec& spec, const PreparedRecord& record);
// Central differences with h = 1e-5 * max(1, |x|).
ParamVector record_gradient_numeric(const ChoiceModelSpec& spec, const PreparedRecord& record);

// w = N / N(v) per record. Throws DomainError on a record with more than one
// coupon group.
std::vector<double> rebalance_weights(const std::vector<TripRecord>& dataset);

// Drops records the awareness enumeration cannot handle under an unaware spec.
std::vector<TripRecord> filter_for_spec(const std::vector<TripRecord>& dataset,
                                        const ChoiceModelSpec& spec, std::uint64_t cap);

Metrics evaluate(const std::vector<TripRecord>& dataset, const ChoiceModelSpec& spec,
                 ValueCatalog& catalog, Weighting weighting = Weighting::uniform,
                 std::uint64_t cap = kDefaultAwarenessCap);

Metrics evaluate_prepared(const std::vector<PreparedRecord>& records,
                          const std::vector<double>& weights, const ChoiceModelSpec& spec,
                          int threads = 1);

struct EpochRecord {
  int epoch = 0;
  double log_likelihood = 0.0;
  ParamVector params{};
};

struct FitResult {
  ChoiceModelSpec spec;
  Metrics metrics;
  std::vector<EpochRecord> history;
  int best_epoch = 0;  // 0: the initial parameters were best
  bool diverged = false;
  std::size_t filtered_records = 0;
};

// Maximizes the (weighted) average log-likelihood with Adam on shuffled
// mini-batches and returns the epoch-end iterate with the best likelihood.
FitResult fit(const std::vector<TripRecord>& dataset, const ChoiceModelSpec& initial,
              const FitConfig& config, ValueCatalog& catalog);

}  // namespace coupons
