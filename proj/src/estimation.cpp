#include "coupons/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>

#include "coupons/adam.hpp"
#include "coupons/error.hpp"
#include "coupons/random.hpp"

namespace coupons {

void TripRecord::validate() const {
  if (!(fare > 0.0) || !std::isfinite(fare)) throw ValidationError("trip fare must be positive");
  if (coupon_set.is_default()) throw ValidationError("trip record has an empty coupon set");
  if (chosen) {
    auto idx = coupon_set.index_of(*chosen);
    if (!idx || chosen->is_default()) {
      throw ValidationError("chosen group is not in the record's coupon set");
    }
  }
  profile.validate();
}

void FitConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (threads < 1) throw ValidationError("threads must be >= 1");
  for (const auto& name : frozen) {
    const auto& names = param_names();
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      throw ValidationError("unknown parameter in frozen list: " + name);
    }
  }
}

ValueEstimator& ValueCatalog::for_profile(const TravelerProfile& profile) {
  auto it = estimators_.find(profile);
  if (it == estimators_.end()) {
    it = estimators_.emplace(profile, ValueEstimator::hat(profile, mc_)).first;
  }
  return it->second;
}

// ---------------------------------------------------------------------------

const std::array<std::string, kNumParams>& param_names() {
  static const std::array<std::string, kNumParams> names{"theta_eps", "theta_V", "theta_v",
                                                         "theta_a", "theta_as"};
  return names;
}

ParamVector to_param_vector(const ChoiceModelSpec& spec) {
  return {std::log(spec.theta_eps), spec.theta_V, spec.theta_v, spec.attention.theta_a,
          spec.attention.theta_as};
}

ChoiceModelSpec with_params(ChoiceModelSpec spec, const ParamVector& x) {
  spec.theta_eps = std::exp(x[kLogThetaEps]);
  spec.theta_V = x[kThetaV];
  spec.theta_v = x[kThetav];
  spec.attention.theta_a = x[kThetaA];
  spec.attention.theta_as = x[kThetaAs];
  return spec;
}

std::array<bool, kNumParams> free_parameters(const ChoiceModelSpec& spec,
                                             const std::vector<std::string>& frozen) {
  std::array<bool, kNumParams> active{true, true, spec.extra, spec.unaware, spec.unaware};
  for (std::size_t i = 0; i < kNumParams; ++i) {
    if (std::find(frozen.begin(), frozen.end(), param_names()[i]) != frozen.end()) {
      active[i] = false;
    }
  }
  return active;
}

// ---------------------------------------------------------------------------

PreparedRecord prepare_record(const TripRecord& record, const ChoiceModelSpec& spec,
                              ValueCatalog& catalog, std::uint64_t cap) {
  record.validate();
  auto& values = catalog.for_profile(record.profile);
  PreparedRecord out;
  out.context = build_choice_context(record.coupon_set, record.attention, record.fare, values,
                                     spec.unaware, spec.awareness_mode, cap);
  out.chosen = *record.coupon_set.index_of(record.chosen_key());
  out.single_form = record.coupon_set.is_single_coupon();
  return out;
}

std::vector<double> record_probs(const ChoiceModelSpec& spec, const PreparedRecord& record) {
  return choice_probs(spec, params_of(spec), record.context, record.single_form);
}

double record_log_likelihood(const ChoiceModelSpec& spec, const PreparedRecord& record) {
  const double p = record_probs(spec, record)[record.chosen];
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

ParamVector record_gradient(const ChoiceModelSpec& spec, const PreparedRecord& record) {
  using D = Dual<kNumParams>;
  const ParamVector x = to_param_vector(spec);
  ChoiceParams<D> th{exp(D::variable(x[kLogThetaEps], kLogThetaEps)),
                     D::variable(x[kThetaV], kThetaV), D::variable(x[kThetav], kThetav),
                     D::variable(x[kThetaA], kThetaA), D::variable(x[kThetaAs], kThetaAs)};
  const auto probs = choice_probs(spec, th, record.context, record.single_form);
  const D ll = log(probs[record.chosen]);
  return ll.d;
}

ParamVector record_gradient_numeric(const ChoiceModelSpec& spec, const PreparedRecord& record) {
  const ParamVector x = to_param_vector(spec);
  ParamVector grad{};
  for (std::size_t i = 0; i < kNumParams; ++i) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
    ParamVector hi = x;
    ParamVector lo = x;
    hi[i] += h;
    lo[i] -= h;
    grad[i] = (record_log_likelihood(with_params(spec, hi), record) -
               record_log_likelihood(with_params(spec, lo), record)) /
              (2.0 * h);
  }
  return grad;
}

// ---------------------------------------------------------------------------

std::vector<double> rebalance_weights(const std::vector<TripRecord>& dataset) {
  std::map<Money, std::size_t> counts;
  for (const auto& r : dataset) {
    if (r.coupon_set.coupons().size() != 1) {
      throw DomainError("rebalanced weights need single-coupon records");
    }
    ++counts[r.coupon_set.coupons()[0].v];
  }
  const double n = static_cast<double>(dataset.size());
  std::vector<double> weights;
  weights.reserve(dataset.size());
  for (const auto& r : dataset) {
    weights.push_back(n / static_cast<double>(counts[r.coupon_set.coupons()[0].v]));
  }
  return weights;
}

std::vector<TripRecord> filter_for_spec(const std::vector<TripRecord>& dataset,
                                        const ChoiceModelSpec& spec, std::uint64_t cap) {
  if (!spec.unaware) return dataset;
  std::vector<TripRecord> out;
  out.reserve(dataset.size());
  for (const auto& r : dataset) {
    if (awareness_subset_count(r.coupon_set) <= cap) out.push_back(r);
  }
  return out;
}

namespace {

constexpr std::size_t kChunk = 256;

// Runs fn(chunk) for fixed-size chunks of [0, n) on up to `threads` threads.
// Chunking does not depend on the thread count, so per-chunk results reduced
// in chunk order are identical for every thread count.
void for_each_chunk(std::size_t n, int threads,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  auto run = [&](std::size_t worker, std::size_t workers) {
    for (std::size_t c = worker; c < chunks; c += workers) {
      fn(c, c * kChunk, std::min(n, (c + 1) * kChunk));
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || chunks <= 1) {
    run(0, 1);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w, workers);
  for (auto& t : pool) t.join();
}

struct Totals {
  double weight = 0.0;
  double ll = 0.0;
  double hits = 0.0;
  double ms = 0.0;
  double observed = 0.0;
  std::size_t zero = 0;
};

std::vector<double> weights_for(const std::vector<TripRecord>& dataset, Weighting weighting) {
  if (weighting == Weighting::face_value_rebalanced) return rebalance_weights(dataset);
  return std::vector<double>(dataset.size(), 1.0);
}

std::vector<PreparedRecord> prepare_all(const std::vector<TripRecord>& dataset,
                                        const ChoiceModelSpec& spec, ValueCatalog& catalog,
                                        std::uint64_t cap) {
  std::vector<PreparedRecord> out;
  out.reserve(dataset.size());
  for (const auto& r : dataset) out.push_back(prepare_record(r, spec, catalog, cap));
  return out;
}

}  // namespace

Metrics evaluate_prepared(const std::vector<PreparedRecord>& records,
                          const std::vector<double>& weights, const ChoiceModelSpec& spec,
                          int threads) {
  const std::size_t chunks = (records.size() + kChunk - 1) / kChunk;
  std::vector<Totals> partial(chunks);
  for_each_chunk(records.size(), threads, [&](std::size_t c, std::size_t begin, std::size_t end) {
    Totals t;
    for (std::size_t i = begin; i < end; ++i) {
      const auto probs = record_probs(spec, records[i]);
      const double w = weights[i];
      const double p = probs[records[i].chosen];
      t.weight += w;
      if (p > 0.0) {
        t.ll += w * std::log(p);
      } else {
        ++t.zero;
      }
      if (predicted_choice(probs) == records[i].chosen) t.hits += w;
      t.ms += w * std::clamp(1.0 - probs[0], 0.0, 1.0);
      if (records[i].chosen != 0) t.observed += w;
    }
    partial[c] = t;
  });
  Totals total;
  for (const auto& t : partial) {
    total.weight += t.weight;
    total.ll += t.ll;
    total.hits += t.hits;
    total.ms += t.ms;
    total.observed += t.observed;
    total.zero += t.zero;
  }
  Metrics m;
  m.n_records = records.size();
  m.zero_probability_records = total.zero;
  if (total.weight > 0.0) {
    m.log_likelihood = total.zero > 0 ? -std::numeric_limits<double>::infinity()
                                      : total.ll / total.weight;
    m.accuracy = total.hits / total.weight;
    m.ms = total.ms / total.weight;
    m.observed_ms = total.observed / total.weight;
  }
  return m;
}

Metrics evaluate(const std::vector<TripRecord>& dataset, const ChoiceModelSpec& spec,
                 ValueCatalog& catalog, Weighting weighting, std::uint64_t cap) {
  spec.validate();
  const auto kept = filter_for_spec(dataset, spec, cap);
  const auto records = prepare_all(kept, spec, catalog, cap);
  return evaluate_prepared(records, weights_for(kept, weighting), spec);
}

FitResult fit(const std::vector<TripRecord>& dataset, const ChoiceModelSpec& initial,
              const FitConfig& config, ValueCatalog& catalog) {
  config.validate();
  initial.validate();
  const auto kept = filter_for_spec(dataset, initial, config.awareness_cap);
  if (kept.empty()) throw ValidationError("fit: no records left to fit");
  const auto records = prepare_all(kept, initial, catalog, config.awareness_cap);
  const auto weights = weights_for(kept, config.weighting);

  FitResult result;
  result.filtered_records = dataset.size() - kept.size();
  const auto active = free_parameters(initial, config.frozen);

  ParamVector x = to_param_vector(initial);
  ParamVector best_x = x;
  double best_ll = evaluate_prepared(records, weights, initial, config.threads).log_likelihood;
  result.history.push_back({0, best_ll, x});

  const bool any_free = std::any_of(active.begin(), active.end(), [](bool b) { return b; });
  if (any_free) {
    Adam<kNumParams> adam(AdamParameters{config.learning_rate});
    Rng rng(config.seed);
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    const auto batch = static_cast<std::size_t>(config.batch_size);

    for (int epoch = 1; epoch <= config.epochs && !result.diverged; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::size_t end = std::min(order.size(), start + batch);
        const ChoiceModelSpec current = with_params(initial, x);
        const std::size_t chunks = (end - start + kChunk - 1) / kChunk;
        std::vector<ParamVector> partial(chunks, ParamVector{});
        std::vector<double> partial_w(chunks, 0.0);
        for_each_chunk(end - start, config.threads,
                       [&](std::size_t c, std::size_t b, std::size_t e) {
                         for (std::size_t k = b; k < e; ++k) {
                           const std::size_t i = order[start + k];
                           const auto g = record_gradient(current, records[i]);
                           for (std::size_t j = 0; j < kNumParams; ++j) {
                             partial[c][j] += weights[i] * g[j];
                           }
                           partial_w[c] += weights[i];
                         }
                       });
        ParamVector grad{};
        double wsum = 0.0;
        for (std::size_t c = 0; c < chunks; ++c) {
          for (std::size_t j = 0; j < kNumParams; ++j) grad[j] += partial[c][j];
          wsum += partial_w[c];
        }
        bool finite = wsum > 0.0;
        for (auto& g : grad) {
          g /= wsum;
          finite = finite && std::isfinite(g);
        }
        if (!finite) {
          result.diverged = true;
          break;
        }
        ParamVector next = x;
        adam.ascend(next, grad, active);
        if (!std::all_of(next.begin(), next.end(), [](double v) { return std::isfinite(v); })) {
          result.diverged = true;
          break;
        }
        x = next;
      }
      const double ll =
          evaluate_prepared(records, weights, with_params(initial, x), config.threads)
              .log_likelihood;
      if (!std::isfinite(ll)) {
        result.diverged = true;
        break;
      }
      result.history.push_back({epoch, ll, x});
      if (ll > best_ll) {
        best_ll = ll;
        best_x = x;
        result.best_epoch = epoch;
      }
    }
  }
  result.spec = with_params(initial, best_x);
  result.metrics = evaluate_prepared(records, weights, result.spec, config.threads);
  return result;
}

}  // namespace coupons
