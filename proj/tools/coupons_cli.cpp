#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "coupons/choice.hpp"
#include "coupons/data_pipeline.hpp"
#include "coupons/error.hpp"
#include "coupons/estimation.hpp"
#include "coupons/io.hpp"
#include "coupons/simulator.hpp"
#include "coupons/value_engine.hpp"

namespace {

using namespace coupons;
using io::Json;

constexpr const char* kToolVersion = "1.0.0";

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
};

// Collects what one run read and wrote, then emits the manifest.
class Run {
 public:
  Run(std::string subcommand, const Globals& g) : subcommand_(std::move(subcommand)), globals_(g) {}

  std::string read(const std::string& path) {
    auto bytes = io::read_text_file(path);
    inputs_.push_back({{"path", path}, {"fnv1a64", hex64(fnv1a64(bytes))}});
    return bytes;
  }

  Json read_json(const std::string& path) {
    const auto bytes = read(path);
    try {
      return Json::parse(bytes);
    } catch (const Json::parse_error& e) {
      throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
    }
  }

  void config(Json c) { config_ = std::move(c); }

  // Data goes to --out when given, standard output otherwise.
  void emit(const std::string& bytes) {
    if (globals_.out.empty()) {
      std::cout << bytes;
      std::cout.flush();
    } else {
      io::write_text_file(globals_.out, bytes);
      outputs_.push_back({{"path", globals_.out}, {"fnv1a64", hex64(fnv1a64(bytes))}});
    }
    Json manifest{{"subcommand", subcommand_},
                  {"config", config_},
                  {"seed", globals_.seed},
                  {"threads", globals_.threads},
                  {"inputs", inputs_},
                  {"outputs", outputs_},
                  {"tool_version", kToolVersion}};
    if (globals_.out.empty()) {
      std::cerr << "manifest: " << manifest.dump() << '\n';
    } else {
      io::write_text_file(globals_.out + ".manifest.json", manifest.dump(2) + "\n");
    }
  }

 private:
  std::string subcommand_;
  Globals globals_;
  Json config_ = Json::object();
  Json inputs_ = Json::array();
  Json outputs_ = Json::array();
};

struct ProfileOpts {
  double lambda = 0.05;
  double mu = 3.15;
  double sigma = 0.75;
  int samples = 10'000;
  bool no_crn = false;

  void add(CLI::App* app, const char* lambda_name = "--lambda") {
    app->add_option(lambda_name, lambda, "Per-day trip rate")->capture_default_str();
    app->add_option("--mu", mu, "Mean of log fare")->capture_default_str();
    app->add_option("--sigma", sigma, "Standard deviation of log fare")->capture_default_str();
    app->add_option("--samples", samples, "Monte-Carlo fare samples per state")
        ->capture_default_str();
    app->add_flag("--no-crn", no_crn, "Independent fare draws per state");
  }
  TravelerProfile profile() const {
    TravelerProfile p{lambda, mu, sigma};
    p.validate();
    return p;
  }
  McConfig mc(std::uint64_t seed) const {
    McConfig mc{samples, seed, !no_crn};
    mc.validate();
    return mc;
  }
  Json json() const {
    return {{"lambda", lambda}, {"mu", mu}, {"sigma", sigma}, {"samples", samples},
            {"common_random_numbers", !no_crn}};
  }
};

std::string dumped(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coupon valuation, choice modelling, estimation and simulation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker thread cap")->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output file (standard output when omitted)");

  // value
  auto* value_cmd = app.add_subcommand("value", "V-hat table over every reachable state");
  std::string set_path;
  ProfileOpts prof;
  value_cmd->add_option("--set", set_path, "Coupon set JSON")->required();
  prof.add(value_cmd);

  // bounds
  auto* bounds_cmd = app.add_subcommand("bounds", "Lower and upper value bounds");
  std::string bounds_set;
  ProfileOpts bprof;
  double kappa = 0.01;
  std::string delta_group;
  int horizon = 0;
  bounds_cmd->add_option("--set", bounds_set, "Coupon set JSON")->required();
  bprof.add(bounds_cmd, "--lambda0");
  bounds_cmd->add_option("--kappa", kappa, "Slope of the trip rate in the coupon gain")
      ->capture_default_str();
  bounds_cmd->add_option("--delta-group", delta_group, "Group 'v:T' for the Delta V series");
  bounds_cmd->add_option("--horizon", horizon, "Length of the Delta V series");

  // choose
  auto* choose_cmd = app.add_subcommand("choose", "Choice probabilities for one decision");
  std::string choose_set, choose_att, choose_spec;
  double fare = 0.0;
  ProfileOpts cprof;
  std::uint64_t cap = kDefaultAwarenessCap;
  choose_cmd->add_option("--set", choose_set, "Coupon set JSON")->required();
  choose_cmd->add_option("--attention", choose_att, "Attention state JSON");
  choose_cmd->add_option("--spec", choose_spec, "Model spec JSON")->required();
  choose_cmd->add_option("--fare", fare, "Trip fare")->required();
  choose_cmd->add_option("--cap", cap, "Awareness subset cap")->capture_default_str();
  cprof.add(choose_cmd);

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "Build estimation records from raw logs");
  std::string orders_path, coupons_path, from, to;
  long long day_seconds = 86'400;
  ingest_cmd->add_option("--orders", orders_path, "Orders CSV")->required();
  ingest_cmd->add_option("--coupons", coupons_path, "Coupons CSV")->required();
  ingest_cmd->add_option("--from", from, "First day of the window (YYYY-MM-DD)")->required();
  ingest_cmd->add_option("--to", to, "Last day of the window (YYYY-MM-DD)")->required();
  ingest_cmd->add_option("--day-seconds", day_seconds, "Length of one time step in seconds")
      ->capture_default_str();

  // analyze
  auto* analyze_cmd = app.add_subcommand("analyze", "Redemption-ratio curves");
  std::string analyze_data, axis = "ratio";
  std::vector<std::string> filter_names;
  std::string experience, frequency;
  double quantile = 0.5;
  analyze_cmd->add_option("--data", analyze_data, "Records CSV")->required();
  analyze_cmd->add_option("--axis", axis, "ratio or quantity")->capture_default_str();
  analyze_cmd->add_option("--filter", filter_names, "single, ia, v_le_p")->delimiter(',');
  analyze_cmd->add_option("--experience", experience, "low or high experience half");
  analyze_cmd->add_option("--frequency", frequency, "low or high trip-frequency half");
  analyze_cmd->add_option("--quantile", quantile, "Split quantile")->capture_default_str();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Maximum-likelihood fit of a model spec");
  std::string fit_data, fit_spec, weighting = "uniform";
  FitConfig fit_config;
  int fit_samples = 10'000;
  fit_cmd->add_option("--data", fit_data, "Records CSV")->required();
  fit_cmd->add_option("--spec", fit_spec, "Template spec JSON")->required();
  fit_cmd->add_option("--epochs", fit_config.epochs, "Passes over the data")->capture_default_str();
  fit_cmd->add_option("--batch", fit_config.batch_size, "Mini-batch size")->capture_default_str();
  fit_cmd->add_option("--lr", fit_config.learning_rate, "Adam step size")->capture_default_str();
  fit_cmd->add_option("--weighting", weighting, "uniform or rebalanced")->capture_default_str();
  fit_cmd->add_option("--cap", fit_config.awareness_cap, "Awareness subset cap")
      ->capture_default_str();
  fit_cmd->add_option("--samples", fit_samples, "Monte-Carlo samples of the V-hat tables")
      ->capture_default_str();

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "Synthetic records from a known spec");
  std::string gen_spec, scenario = "single";
  std::size_t n_records = 0;
  ProfileOpts gprof;
  double activated_share = 0.5;
  int max_T = 30;
  gen_cmd->add_option("--spec", gen_spec, "True spec JSON")->required();
  gen_cmd->add_option("--n", n_records, "Number of records")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--scenario", scenario, "single or multi")->capture_default_str();
  gen_cmd->add_option("--activated-share", activated_share, "Share of groups starting activated")->capture_default_str();
  gen_cmd->add_option("--max-T", max_T, "Largest initial days to expiry")->capture_default_str();
  gprof.add(gen_cmd);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Promotional-effect simulation");
  std::string sim_config;
  sim_cmd->add_option("--config", sim_config, "Simulation config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*value_cmd) {
      Run run("value", g);
      const auto set = io::coupon_set_from_json(run.read_json(set_path));
      run.config({{"set", set_path}, {"profile", prof.json()}});
      run.emit(dumped(io::to_json(value_hat(set, prof.profile(), prof.mc(g.seed)))));
    } else if (*bounds_cmd) {
      Run run("bounds", g);
      const auto set = io::coupon_set_from_json(run.read_json(bounds_set));
      run.config({{"set", bounds_set}, {"profile", bprof.json()}, {"kappa", kappa},
                  {"delta_group", delta_group}, {"horizon", horizon}});
      const auto profile = bprof.profile();
      const SelectionRateModel sel{profile.lambda_hat, kappa};
      sel.validate();
      const auto bounds = value_bounds(set, profile, sel, bprof.mc(g.seed));
      Json out{{"lower", io::to_json(bounds.lower)}, {"upper", io::to_json(bounds.upper)}};
      const double lo = bounds.lower.at(set);
      const double hi = bounds.upper.at(set);
      out["root"] = {{"lower", lo}, {"upper", hi}, {"gap", hi - lo}};
      if (!delta_group.empty()) {
        const auto key = io::parse_group_id(delta_group);
        const int h = horizon > 0 ? horizon : key.T;
        out["delta_value"] = {{"group", delta_group},
                              {"lower", delta_value(bounds.lower, set, key, h)},
                              {"upper", delta_value(bounds.upper, set, key, h)}};
      }
      run.emit(dumped(out));
    } else if (*choose_cmd) {
      Run run("choose", g);
      const auto set = io::coupon_set_from_json(run.read_json(choose_set));
      const auto state = choose_att.empty() ? AttentionState::uniform(set, false)
                                            : io::attention_from_json(run.read_json(choose_att));
      const auto spec = io::spec_from_json(run.read_json(choose_spec));
      run.config({{"set", choose_set}, {"attention", choose_att}, {"spec", io::to_json(spec)},
                  {"fare", fare}, {"cap", cap}, {"profile", cprof.json()}});
      if (!(fare > 0.0)) throw ValidationError("fare must be positive");
      auto values = ValueEstimator::hat(cprof.profile(), cprof.mc(g.seed));
      const auto probs = spec.unaware ? mixture_prob(spec, set, state, fare, values, cap)
                                      : general_coupon_prob(spec, set, fare, values);
      Json groups = Json::array();
      for (std::size_t i = 0; i < probs.size(); ++i) {
        const auto& grp = set.groups()[i];
        groups.push_back({{"group", i == 0 ? "c0" : io::group_id(grp.key())},
                          {"n", grp.n},
                          {"probability", probs[i]}});
      }
      const auto best = predicted_choice(probs);
      run.emit(dumped({{"probabilities", groups},
                       {"predicted", best == 0 ? "c0" : io::group_id(set.groups()[best].key())}}));
    } else if (*ingest_cmd) {
      Run run("ingest", g);
      std::istringstream orders_in(run.read(orders_path));
      std::istringstream coupons_in(run.read(coupons_path));
      const DateWindow window{parse_date(from), parse_date(to)};
      run.config({{"orders", orders_path}, {"coupons", coupons_path}, {"from", from}, {"to", to},
                  {"day_seconds", day_seconds}});
      const auto result = build_dataset(read_orders_csv(orders_in), read_coupons_csv(coupons_in),
                                        std::chrono::seconds{day_seconds}, window);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      std::ostringstream out;
      write_records_csv(out, result.records);
      run.emit(out.str());
    } else if (*analyze_cmd) {
      Run run("analyze", g);
      std::istringstream in(run.read(analyze_data));
      CurveFilters filters;
      for (const auto& f : filter_names) {
        if (f == "single") {
          filters.single_coupon = true;
        } else if (f == "ia") {
          filters.require_I_a = true;
        } else if (f == "v_le_p") {
          filters.require_v_le_p = true;
        } else {
          throw ValidationError("unknown filter '" + f + "' (single, ia, v_le_p)");
        }
      }
      auto split = [&](const std::string& side) -> std::optional<QuantileSplit> {
        if (side.empty()) return std::nullopt;
        if (side != "low" && side != "high") throw ValidationError("split side must be low or high");
        return QuantileSplit{quantile, side == "high"};
      };
      filters.experience = split(experience);
      filters.frequency = split(frequency);
      const auto curve_axis = curve_axis_from_string(axis);
      run.config({{"data", analyze_data}, {"axis", to_string(curve_axis)},
                  {"filters", filter_names}, {"experience", experience},
                  {"frequency", frequency}, {"quantile", quantile}});
      std::ostringstream out;
      write_curve_csv(out, curve_axis, redemption_ratio_curve(read_records_csv(in), curve_axis, filters));
      run.emit(out.str());
    } else if (*fit_cmd) {
      Run run("fit", g);
      std::istringstream in(run.read(fit_data));
      const auto spec_json = run.read_json(fit_spec);
      const auto spec = io::spec_from_json(spec_json);
      fit_config.frozen = io::frozen_from_json(spec_json);
      fit_config.seed = g.seed;
      fit_config.threads = g.threads;
      if (weighting == "uniform") {
        fit_config.weighting = Weighting::uniform;
      } else if (weighting == "rebalanced") {
        fit_config.weighting = Weighting::face_value_rebalanced;
      } else {
        throw ValidationError("weighting must be uniform or rebalanced");
      }
      const McConfig mc{fit_samples, g.seed, true};
      mc.validate();
      run.config({{"data", fit_data}, {"spec", io::to_json(spec)}, {"frozen", fit_config.frozen},
                  {"weighting", weighting}, {"samples", fit_samples}});
      ValueCatalog catalog(mc);
      const auto result = fit(read_records_csv(in), spec, fit_config, catalog);
      if (result.diverged) std::cerr << "warning: fit diverged; reporting the last finite iterate\n";
      run.emit(dumped(io::to_json(result, fit_config)));
    } else if (*gen_cmd) {
      Run run("generate", g);
      const auto spec = io::spec_from_json(run.read_json(gen_spec));
      run.config({{"spec", io::to_json(spec)}, {"n", n_records}, {"scenario", scenario},
                  {"activated_share", activated_share}, {"max_T", max_T},
                  {"profile", gprof.json()}});
      const std::vector<Money> faces{5, 10, 20, 30};
      ScenarioSampler sampler;
      if (scenario == "single") {
        sampler = single_coupon_scenarios(faces, max_T, activated_share);
      } else if (scenario == "multi") {
        sampler = multi_coupon_scenarios(faces, 3, 2, max_T, activated_share);
      } else {
        throw ValidationError("scenario must be single or multi");
      }
      ValueCatalog catalog(gprof.mc(g.seed));
      const auto records =
          generate_dataset(spec, {gprof.profile()}, sampler, n_records, g.seed, catalog);
      std::ostringstream out;
      write_records_csv(out, records);
      run.emit(out.str());
    } else if (*sim_cmd) {
      Run run("simulate", g);
      auto json = run.read_json(sim_config);
      auto config = io::sim_config_from_json(json);
      // Global flags override the file when given explicitly.
      if (app.count("--seed")) config.seed = g.seed;
      if (app.count("--threads")) config.threads = g.threads;
      run.config(io::to_json(config));
      run.emit(dumped(io::to_json(simulate_promotion(config))));
    }
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << " (size " << e.size() << ")\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << '\n';
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 1;
  } catch (const Json::exception& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
