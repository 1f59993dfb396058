#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "coupons/error.hpp"
#include "coupons/io.hpp"

using namespace coupons;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("coupons_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

int run_cli(const std::string& args) {
  const std::string command = std::string(COUPONS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write(const std::string& path, const std::string& text) { io::write_text_file(path, text); }

}  // namespace

TEST(Json, FormatNumberIsShortestRoundTrip) {
  EXPECT_EQ(io::format_number(0.1), "0.1");
  EXPECT_EQ(io::format_number(10), "10");
  EXPECT_EQ(std::stod(io::format_number(1.0 / 3)), 1.0 / 3);
}

TEST(Json, CouponSetRoundTrip) {
  const auto set = CouponSet::make({{10, 30, 2}, {5, 20, 1}});
  EXPECT_EQ(io::coupon_set_from_json(io::to_json(set)), set);
  EXPECT_EQ(io::coupon_set_from_json(io::Json::parse(R"([{"v":5,"T":3}])")),
            CouponSet::make({{5, 3, 1}}));
  EXPECT_THROW(io::coupon_set_from_json(io::Json::parse(R"([{"v":5}])")), ValidationError);
  EXPECT_THROW(io::coupon_set_from_json(io::Json::parse(R"({"v":5})")), ValidationError);
}

TEST(Json, AttentionRoundTrip) {
  AttentionState state;
  state.set({10, 3}, true);
  state.set({5, 0}, false);
  const auto j = io::to_json(state);
  EXPECT_EQ(j.dump(), R"({"5:0":0,"10:3":1})");
  EXPECT_EQ(io::attention_from_json(j).entries(), state.entries());
  EXPECT_TRUE(io::attention_from_json(io::Json::parse(R"({"10:3":true})")).activated({10, 3}));
  EXPECT_EQ(io::parse_group_id("2.5:4"), (GroupKey{2.5, 4}));
  EXPECT_THROW(io::parse_group_id("10"), ValidationError);
  EXPECT_THROW(io::parse_group_id("10:x"), ValidationError);
}

TEST(Json, SpecRoundTrip) {
  ChoiceModelSpec spec;
  spec.unaware = true;
  spec.iid = true;
  spec.theta_eps = 0.25;
  spec.attention = {-0.3, 1.2};
  spec.awareness_mode = AwarenessMode::group_level;
  const auto back = io::spec_from_json(io::to_json(spec));
  EXPECT_EQ(io::to_json(back).dump(), io::to_json(spec).dump());
  EXPECT_THROW(io::spec_from_json(io::Json::parse(R"({"theta_eps": -1})")), ValidationError);
  EXPECT_EQ(io::frozen_from_json(io::Json::parse(R"({"frozen":["theta_V"]})")),
            std::vector<std::string>{"theta_V"});
  EXPECT_THROW(io::frozen_from_json(io::Json::parse(R"({"frozen":["theta_x"]})")), ValidationError);
}

TEST(Json, ValueTableRoundTrip) {
  const auto table = value_hat(CouponSet::make({{5, 3, 1}, {10, 2, 1}}), {0.05, 3.15, 0.75},
                               {500, 2, true});
  const auto back = io::value_table_from_json(io::to_json(table));
  EXPECT_EQ(back.size(), table.size());
  for (const auto& [set, value] : table.sorted_entries()) EXPECT_EQ(back.at(set), value);
}

TEST(Json, SimConfigRoundTrip) {
  SimConfig c;
  c.coupon_set = CouponSet::make({{10, 5, 1}});
  c.replications = 77;
  c.inattention_on = true;
  c.initial_attention = AttentionState::uniform(c.coupon_set, false);
  const auto back = io::sim_config_from_json(io::to_json(c));
  EXPECT_EQ(back.coupon_set, c.coupon_set);
  EXPECT_EQ(back.replications, 77);
  EXPECT_TRUE(back.inattention_on);
  ASSERT_TRUE(back.initial_attention.has_value());
  EXPECT_FALSE(back.initial_attention->activated({10, 5}));
  SimResult r;
  EXPECT_TRUE(io::to_json(r)["rho"].is_null());
}

TEST(Cli, ValueWritesTableAndManifest) {
  TempDir dir;
  write(dir / "set.json", R"([{"v":5,"T":3,"n":1},{"v":10,"T":2,"n":1}])");
  ASSERT_EQ(run_cli("--seed 3 --out " + (dir / "v.json") + " value --set " + (dir / "set.json") +
                    " --samples 1000"),
            0);
  const auto table = io::value_table_from_json(io::read_json_file(dir / "v.json"));
  EXPECT_GT(table.at(CouponSet::make({{5, 3, 1}, {10, 2, 1}})), 0.0);
  const auto manifest = io::read_json_file(dir / "v.json.manifest.json");
  EXPECT_EQ(manifest["subcommand"], "value");
  EXPECT_EQ(manifest["seed"], 3);
  EXPECT_EQ(manifest["inputs"].size(), 1u);
  EXPECT_EQ(manifest["outputs"][0]["fnv1a64"].get<std::string>().size(), 16u);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  write(dir / "set.json", R"([{"v":5,"T":1,"n":4},{"v":10,"T":1,"n":4},{"v":20,"T":1,"n":4}])");
  write(dir / "unaware.json", R"({"unaware":true})");
  write(dir / "broken.json", "[{");
  EXPECT_EQ(run_cli("value"), 1);
  EXPECT_EQ(run_cli("bogus"), 1);
  EXPECT_EQ(run_cli("value --set " + (dir / "broken.json")), 1);
  EXPECT_EQ(run_cli("value --set " + (dir / "missing.json")), 1);
  EXPECT_EQ(run_cli("--threads 0 value --set " + (dir / "set.json")), 1);
  EXPECT_EQ(run_cli("choose --set " + (dir / "set.json") + " --spec " + (dir / "unaware.json") +
                    " --fare 12"),
            2);
  EXPECT_EQ(run_cli("--out " + (dir / "p.json") + " choose --set " + (dir / "set.json") +
                    " --spec " + (dir / "unaware.json") + " --fare 12 --cap 200"),
            0);
  const auto probs = io::read_json_file(dir / "p.json");
  double total = 0.0;
  for (const auto& p : probs["probabilities"]) total += p["probability"].get<double>();
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Cli, BoundsReportsDeltaSeries) {
  TempDir dir;
  write(dir / "set.json", R"([{"v":5,"T":2,"n":1}])");
  ASSERT_EQ(run_cli("--out " + (dir / "b.json") + " bounds --set " + (dir / "set.json") +
                    " --kappa 0.001 --delta-group 5:2 --horizon 3 --samples 1000"),
            0);
  const auto b = io::read_json_file(dir / "b.json");
  EXPECT_LE(b["root"]["lower"].get<double>(), b["root"]["upper"].get<double>());
  EXPECT_EQ(b["delta_value"]["lower"].size(), 3u);
}

TEST(Cli, GenerateFitAnalyzeSimulatePipeline) {
  TempDir dir;
  write(dir / "truth.json", R"({"unaware":true,"theta_eps":0.3,"theta_V":0.8,"theta_a":1.0,"theta_as":1.5})");
  write(dir / "template.json", R"({"unaware":true})");
  ASSERT_EQ(run_cli("--seed 5 --out " + (dir / "d.csv") + " generate --spec " + (dir / "truth.json") +
                    " --n 400 --samples 500"),
            0);
  ASSERT_EQ(run_cli("--seed 5 --out " + (dir / "fit.json") + " fit --data " + (dir / "d.csv") +
                    " --spec " + (dir / "template.json") + " --epochs 2 --lr 0.01 --samples 500"),
            0);
  const auto fit = io::read_json_file(dir / "fit.json");
  EXPECT_EQ(fit["history"].size(), 3u);
  EXPECT_EQ(fit["stop_rule"], "best epoch-end log-likelihood");
  EXPECT_LE(fit["metrics"]["log_likelihood"].get<double>(), 0.0);

  ASSERT_EQ(run_cli("--out " + (dir / "curve.csv") + " analyze --data " + (dir / "d.csv") +
                    " --axis quantity --filter single,v_le_p"),
            0);
  EXPECT_EQ(io::read_text_file(dir / "curve.csv").rfind("axis,bin,ratio,count", 0), 0u);
  EXPECT_EQ(run_cli("analyze --data " + (dir / "d.csv") + " --filter nonsense"), 1);

  write(dir / "sim.json", R"({"coupon_set":[{"v":10,"T":5,"n":1}],"replications":500,
                              "t_max":10,"value_mc":{"samples":500,"seed":0,"common_random_numbers":true}})");
  ASSERT_EQ(run_cli("--seed 2 --threads 2 --out " + (dir / "sim_out.json") + " simulate --config " +
                    (dir / "sim.json")),
            0);
  const auto sim = io::read_json_file(dir / "sim_out.json");
  EXPECT_EQ(sim["replications"], 500);
  EXPECT_GT(sim["n_trip_mean"].get<double>(), 0.0);
}

TEST(Cli, IngestFromLogs) {
  TempDir dir;
  write(dir / "orders.csv",
        "order_id,traveler_id,trip_start,trip_end,fare,used_coupon_id,payment\n"
        "o1,u1,2024-03-02 09:00:00,2024-03-02 09:30:00,12,c1,2\n"
        "o2,u1,2024-03-03 09:00:00,2024-03-03 09:30:00,8,,8\n");
  write(dir / "coupons.csv",
        "coupon_id,traveler_id,face_value,start_time,expire_time\n"
        "c1,u1,10,2024-03-01 10:00:00,2024-03-06 10:00:00\n");
  ASSERT_EQ(run_cli("--out " + (dir / "r.csv") + " ingest --orders " + (dir / "orders.csv") +
                    " --coupons " + (dir / "coupons.csv") + " --from 2024-03-01 --to 2024-03-10"),
            0);
  const auto text = io::read_text_file(dir / "r.csv");
  EXPECT_NE(text.find("u1,12,10,4,"), std::string::npos);
  write(dir / "bad_orders.csv",
        "order_id,traveler_id,trip_start,trip_end,fare,used_coupon_id,payment\n"
        "o1,u1,2024-03-09 09:00:00,2024-03-09 09:30:00,12,c1,2\n");
  EXPECT_EQ(run_cli("ingest --orders " + (dir / "bad_orders.csv") + " --coupons " +
                    (dir / "coupons.csv") + " --from 2024-03-01 --to 2024-03-10"),
            1);
}
