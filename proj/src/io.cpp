#include "coupons/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "coupons/error.hpp"

namespace coupons::io {

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(std::string("missing JSON field '") + key + "'");
  }
  return j.at(key);
}

double finite_number(const Json& j, const char* what) {
  if (!j.is_number()) throw ValidationError(std::string(what) + " must be a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw ValidationError(std::string(what) + " must be finite");
  return x;
}

int whole_number(const Json& j, const char* what) {
  if (!j.is_number_integer()) {
    if (j.is_number() && std::floor(j.get<double>()) == j.get<double>()) {
      return static_cast<int>(j.get<double>());
    }
    throw ValidationError(std::string(what) + " must be an integer");
  }
  return j.get<int>();
}

}  // namespace

std::string format_number(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw NumericError("cannot format number");
  return std::string(buf, end);
}

Json to_json(const CouponSet& set) {
  Json out = Json::array();
  for (const auto& g : set.coupons()) out.push_back({{"v", g.v}, {"T", g.T}, {"n", g.n}});
  return out;
}

CouponSet coupon_set_from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("a coupon set must be a JSON array of {v, T, n}");
  std::vector<CouponGroup> groups;
  for (const auto& item : j) {
    CouponGroup g;
    g.v = finite_number(require(item, "v"), "v");
    g.T = whole_number(require(item, "T"), "T");
    g.n = item.contains("n") ? whole_number(item.at("n"), "n") : 1;
    groups.push_back(g);
  }
  return CouponSet::make(groups);
}

std::string group_id(const GroupKey& key) {
  return format_number(key.v) + ":" + std::to_string(key.T);
}

GroupKey parse_group_id(const std::string& id) {
  const auto colon = id.find(':');
  if (colon == std::string::npos) throw ValidationError("group id '" + id + "' is not 'v:T'");
  GroupKey key;
  const char* first = id.data();
  auto r1 = std::from_chars(first, first + colon, key.v);
  auto r2 = std::from_chars(first + colon + 1, first + id.size(), key.T);
  if (r1.ec != std::errc() || r1.ptr != first + colon || r2.ec != std::errc() ||
      r2.ptr != first + id.size() || key.v < 0.0 || key.T < 0) {
    throw ValidationError("group id '" + id + "' is not 'v:T'");
  }
  return key;
}

Json to_json(const AttentionState& state) {
  Json out = Json::object();
  for (const auto& [key, flag] : state.entries()) out[group_id(key)] = flag ? 1 : 0;
  return out;
}

AttentionState attention_from_json(const Json& j) {
  if (j.is_null()) return {};
  if (!j.is_object()) throw ValidationError("attention must be a JSON object {\"v:T\": 0|1}");
  AttentionState state;
  for (const auto& [id, flag] : j.items()) {
    bool on = false;
    if (flag.is_boolean()) {
      on = flag.get<bool>();
    } else if (flag.is_number_integer() && (flag.get<int>() == 0 || flag.get<int>() == 1)) {
      on = flag.get<int>() == 1;
    } else {
      throw ValidationError("attention flag for '" + id + "' must be 0 or 1");
    }
    state.set(parse_group_id(id), on);
  }
  return state;
}

Json to_json(const TravelerProfile& p) {
  return {{"lambda_hat", p.lambda_hat}, {"mu_p", p.mu_p}, {"sigma_p", p.sigma_p}};
}

TravelerProfile profile_from_json(const Json& j) {
  TravelerProfile p{finite_number(require(j, "lambda_hat"), "lambda_hat"),
                    finite_number(require(j, "mu_p"), "mu_p"),
                    finite_number(require(j, "sigma_p"), "sigma_p")};
  p.validate();
  return p;
}

Json to_json(const McConfig& mc) {
  return {{"samples", mc.samples},
          {"seed", mc.seed},
          {"common_random_numbers", mc.common_random_numbers}};
}

McConfig mc_from_json(const Json& j) {
  McConfig mc;
  mc.samples = get_or(j, "samples", mc.samples);
  mc.seed = get_or(j, "seed", mc.seed);
  mc.common_random_numbers = get_or(j, "common_random_numbers", mc.common_random_numbers);
  mc.validate();
  return mc;
}

Json to_json(const ValueTable& table) {
  Json out;
  out["kind"] = std::string(to_string(table.kind()));
  const auto& prov = table.provenance();
  out["profile"] = prov.profile ? to_json(*prov.profile) : Json();
  out["mc"] = prov.mc ? to_json(*prov.mc) : Json();
  if (prov.selection) {
    out["selection"] = {{"base_rate", prov.selection->base_rate},
                        {"value_slope", prov.selection->value_slope}};
  }
  Json entries = Json::array();
  for (const auto& [set, value] : table.sorted_entries()) {
    entries.push_back({{"set", to_json(set)}, {"value", value}});
  }
  out["entries"] = std::move(entries);
  return out;
}

ValueTable value_table_from_json(const Json& j) {
  ValueProvenance prov;
  if (j.contains("profile") && !j.at("profile").is_null()) {
    prov.profile = profile_from_json(j.at("profile"));
  }
  if (j.contains("mc") && !j.at("mc").is_null()) prov.mc = mc_from_json(j.at("mc"));
  if (j.contains("selection")) {
    prov.selection = SelectionRateModel{finite_number(require(j["selection"], "base_rate"), "base_rate"),
                                        finite_number(require(j["selection"], "value_slope"), "value_slope")};
  }
  const auto kind = value_kind_from_string(require(j, "kind").get<std::string>());
  ValueTable table(kind, prov);
  for (const auto& e : require(j, "entries")) {
    table.insert(coupon_set_from_json(require(e, "set")), finite_number(require(e, "value"), "value"));
  }
  return table;
}

Json to_json(const ChoiceModelSpec& s) {
  return {{"unaware", s.unaware},
          {"clip", s.clip},
          {"extra", s.extra},
          {"scaled", s.scaled},
          {"iid", s.iid},
          {"theta_eps", s.theta_eps},
          {"theta_V", s.theta_V},
          {"theta_v", s.theta_v},
          {"theta_a", s.attention.theta_a},
          {"theta_as", s.attention.theta_as},
          {"awareness_mode",
           s.awareness_mode == AwarenessMode::group_level ? "group_level" : "coupon_level"}};
}

ChoiceModelSpec spec_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("a spec must be a JSON object");
  ChoiceModelSpec s;
  s.unaware = get_or(j, "unaware", s.unaware);
  s.clip = get_or(j, "clip", s.clip);
  s.extra = get_or(j, "extra", s.extra);
  s.scaled = get_or(j, "scaled", s.scaled);
  s.iid = get_or(j, "iid", s.iid);
  s.theta_eps = get_or(j, "theta_eps", s.theta_eps);
  s.theta_V = get_or(j, "theta_V", s.theta_V);
  s.theta_v = get_or(j, "theta_v", s.theta_v);
  s.attention.theta_a = get_or(j, "theta_a", s.attention.theta_a);
  s.attention.theta_as = get_or(j, "theta_as", s.attention.theta_as);
  const auto mode = get_or<std::string>(j, "awareness_mode", "coupon_level");
  if (mode == "coupon_level") {
    s.awareness_mode = AwarenessMode::coupon_level;
  } else if (mode == "group_level") {
    s.awareness_mode = AwarenessMode::group_level;
  } else {
    throw ValidationError("awareness_mode must be coupon_level or group_level");
  }
  s.validate();
  return s;
}

std::vector<std::string> frozen_from_json(const Json& j) {
  auto frozen = get_or<std::vector<std::string>>(j, "frozen", {});
  const auto& names = param_names();
  for (const auto& f : frozen) {
    if (std::find(names.begin(), names.end(), f) == names.end()) {
      throw ValidationError("unknown frozen parameter '" + f + "'");
    }
  }
  return frozen;
}

Json to_json(const Metrics& m) {
  Json out{{"log_likelihood", std::isfinite(m.log_likelihood) ? Json(m.log_likelihood) : Json()},
           {"accuracy", m.accuracy},
           {"ms", m.ms},
           {"observed_ms", m.observed_ms},
           {"n_records", m.n_records},
           {"zero_probability_records", m.zero_probability_records}};
  return out;
}

Json to_json(const FitResult& fit, const FitConfig& config) {
  Json history = Json::array();
  const auto& names = param_names();
  for (const auto& e : fit.history) {
    Json params = Json::object();
    const auto spec = with_params(fit.spec, e.params);
    const auto sj = to_json(spec);
    for (const auto& name : names) params[name] = sj.at(name);
    history.push_back({{"epoch", e.epoch},
                       {"log_likelihood", std::isfinite(e.log_likelihood) ? Json(e.log_likelihood) : Json()},
                       {"params", params}});
  }
  return {{"spec", to_json(fit.spec)},
          {"metrics", to_json(fit.metrics)},
          {"history", history},
          {"best_epoch", fit.best_epoch},
          {"stop_rule", "best epoch-end log-likelihood"},
          {"diverged", fit.diverged},
          {"filtered_records", fit.filtered_records},
          {"config",
           {{"learning_rate", config.learning_rate},
            {"batch_size", config.batch_size},
            {"epochs", config.epochs},
            {"seed", config.seed},
            {"weighting", config.weighting == Weighting::uniform ? "uniform" : "rebalanced"},
            {"frozen", config.frozen},
            {"awareness_cap", config.awareness_cap}}}};
}

Json to_json(const SimConfig& c) {
  Json out{{"lambda0", c.lambda0},
           {"beta", c.beta},
           {"spec", to_json(c.spec)},
           {"coupon_set", to_json(c.coupon_set)},
           {"mu_p", c.mu_p},
           {"sigma_p", c.sigma_p},
           {"t_max", c.t_max},
           {"replications", c.replications},
           {"seed", c.seed},
           {"inattention_on", c.inattention_on},
           {"value_mc", to_json(c.value_mc)}};
  out["initial_attention"] = c.initial_attention ? to_json(*c.initial_attention) : Json();
  out["value_lambda"] = c.value_lambda ? Json(*c.value_lambda) : Json();
  return out;
}

SimConfig sim_config_from_json(const Json& j) {
  if (!j.is_object()) throw ValidationError("a simulation config must be a JSON object");
  SimConfig c;
  c.lambda0 = get_or(j, "lambda0", c.lambda0);
  c.beta = get_or(j, "beta", c.beta);
  if (j.contains("spec")) {
    // Fields absent from the file fall back to the simulation defaults.
    Json merged = to_json(SimConfig::default_spec());
    merged.update(j.at("spec"));
    c.spec = spec_from_json(merged);
  }
  if (j.contains("coupon_set")) c.coupon_set = coupon_set_from_json(j.at("coupon_set"));
  c.mu_p = get_or(j, "mu_p", c.mu_p);
  c.sigma_p = get_or(j, "sigma_p", c.sigma_p);
  c.t_max = get_or(j, "t_max", c.t_max);
  c.replications = get_or(j, "replications", c.replications);
  c.seed = get_or(j, "seed", c.seed);
  c.inattention_on = get_or(j, "inattention_on", c.inattention_on);
  if (j.contains("initial_attention") && !j.at("initial_attention").is_null()) {
    c.initial_attention = attention_from_json(j.at("initial_attention"));
  }
  if (j.contains("value_mc")) c.value_mc = mc_from_json(j.at("value_mc"));
  if (j.contains("value_lambda") && !j.at("value_lambda").is_null()) {
    c.value_lambda = j.at("value_lambda").get<double>();
  }
  c.threads = get_or(j, "threads", c.threads);
  c.validate();
  return c;
}

Json to_json(const SimResult& r) {
  return {{"n_trip_mean", r.n_trip_mean},
          {"n_trip_std", r.n_trip_std},
          {"v_redeemed_mean", r.v_redeemed_mean},
          {"v_redeemed_std", r.v_redeemed_std},
          {"rho", r.rho ? Json(*r.rho) : Json()},
          {"n_trip_0", r.n_trip_0},
          {"replications", r.replications}};
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ValidationError("failed writing '" + path + "'");
}

Json read_json_file(const std::string& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace coupons::io
