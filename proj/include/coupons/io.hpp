#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "coupons/attention.hpp"
#include "coupons/choice.hpp"
#include "coupons/coupon_core.hpp"
#include "coupons/estimation.hpp"
#include "coupons/simulator.hpp"
#include "coupons/value_engine.hpp"

namespace coupons::io {

using Json = nlohmann::ordered_json;

// Shortest decimal text that parses back to the same double.
std::string format_number(double x);

// [{v, T, n}, ...] in canonical order, c0 omitted. Reading accepts c0 entries.
Json to_json(const CouponSet& set);
CouponSet coupon_set_from_json(const Json& j);

// {"v:T": 0|1}. Reading also accepts true/false.
std::string group_id(const GroupKey& key);
GroupKey parse_group_id(const std::string& id);
Json to_json(const AttentionState& state);
AttentionState attention_from_json(const Json& j);

Json to_json(const TravelerProfile& profile);
TravelerProfile profile_from_json(const Json& j);
Json to_json(const McConfig& mc);
McConfig mc_from_json(const Json& j);

// {kind, profile, mc, entries: [{set, value}]}
Json to_json(const ValueTable& table);
ValueTable value_table_from_json(const Json& j);

// {unaware, clip, extra, scaled, iid, theta_eps, theta_V, theta_v, theta_a,
//  theta_as, awareness_mode}. Missing keys keep their defaults.
Json to_json(const ChoiceModelSpec& spec);
ChoiceModelSpec spec_from_json(const Json& j);
// Optional "frozen": [names] next to the spec fields.
std::vector<std::string> frozen_from_json(const Json& j);

Json to_json(const Metrics& m);
Json to_json(const FitResult& fit, const FitConfig& config);

Json to_json(const SimConfig& config);
SimConfig sim_config_from_json(const Json& j);
Json to_json(const SimResult& result);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace coupons::io
