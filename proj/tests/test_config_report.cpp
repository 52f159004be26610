#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "mcfault/commands.hpp"
#include "mcfault/config.hpp"
#include "mcfault/report.hpp"

namespace mcfault {
namespace {

AppConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string config_error(const std::string& text) {
  try {
    (void)parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(Config, Defaults) {
  const auto c = parse("");
  EXPECT_EQ(c.plan.seeds.size(), 20U);
  EXPECT_EQ(c.plan.seeds[0].value, mix64(0));
  EXPECT_EQ(c.plan.seeds[19].value, mix64(19));
  EXPECT_EQ(c.plan.workers, (std::vector<std::uint32_t>{1, 2, 4}));
  EXPECT_EQ(c.plan.mappings.size(), 3U);
  EXPECT_EQ(c.plan.stream_modes.size(), 2U);
  EXPECT_TRUE(std::holds_alternative<Ideal>(c.plan.fault));
  EXPECT_FALSE(c.plan.fix.has_value());
  EXPECT_FALSE(c.plan.inject_determinism_fault);
}

TEST(Config, SeedCountExpansion) {
  // tests/oracles/mix64_oracle.py: seed_count expansion [0..3)
  const auto c = parse("[experiment]\nseed_count = 3\n");
  ASSERT_EQ(c.plan.seeds.size(), 3U);
  EXPECT_EQ(c.plan.seeds[0].value, 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(c.plan.seeds[1].value, 0x910A2DEC89025CC1ULL);
}

TEST(Config, FullDocument) {
  const auto c = parse(R"([experiment]
seeds = 1, 0x10, 3
n_clocks = 8
horizon = 12.5
alpha = 0.05
samples = 2000

[fault]
kind = low_thinning
c = 0.4
q = 0.9

[transform]
names = reflect, rotate_half+reflect

[fix]
a = 0.4
b = 1

[parallel]
workers = 1, 8
mappings = round-robin
stream_modes = per_worker

[output]
directory = out/x
formats = json, events_csv
)");
  EXPECT_EQ(c.plan.seeds.size(), 3U);
  EXPECT_EQ(c.plan.seeds[1].value, 16U);
  EXPECT_EQ(c.plan.n_clocks, 8U);
  EXPECT_EQ(c.plan.horizon, 12.5);
  EXPECT_EQ(c.plan.alpha, 0.05);
  EXPECT_EQ(c.samples, 2000U);
  EXPECT_EQ(std::get<LowThinning>(c.plan.fault), (LowThinning{0.4, 0.9}));
  ASSERT_EQ(c.transforms.size(), 2U);
  EXPECT_EQ(c.transforms[1].name(), "rotate_half+reflect");
  EXPECT_FALSE(c.plan.map.has_value());
  EXPECT_EQ(c.plan.fix->a, 0.4);
  EXPECT_EQ(c.plan.workers, (std::vector<std::uint32_t>{1, 8}));
  EXPECT_EQ(c.plan.mappings, std::vector<MappingKind>{MappingKind::RoundRobin});
  EXPECT_EQ(c.plan.stream_modes, std::vector<StreamMode>{StreamMode::PerWorker});
  EXPECT_EQ(c.output.directory, "out/x");
  EXPECT_TRUE(c.output.json);
  EXPECT_FALSE(c.output.summary_csv);
  EXPECT_TRUE(c.output.events_csv);
}

TEST(Config, TransformSimulate) {
  const auto c = parse("[transform]\nnames = rotate_half\nsimulate = true\n");
  ASSERT_TRUE(c.plan.map.has_value());
  EXPECT_EQ(c.plan.map->name(), "rotate_half");
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_NE(config_error("[experiment]\nalpha = 1.5\n").find("alpha"), std::string::npos);
  EXPECT_NE(config_error("[experiment]\nalpha = abc\n").find("experiment.alpha"), std::string::npos);
  EXPECT_NE(config_error("[experiment]\nbogus = 1\n").find("experiment.bogus"), std::string::npos);
  EXPECT_NE(config_error("[weird]\nx = 1\n").find("weird"), std::string::npos);
  EXPECT_NE(config_error("[parallel]\nmappings = spiral\n").find("parallel.mappings"), std::string::npos);
  EXPECT_NE(config_error("[parallel]\nstream_modes = shared\n").find("parallel.stream_modes"), std::string::npos);
  EXPECT_NE(config_error("[parallel]\nworkers = 0\n").find("parallel.workers"), std::string::npos);
  EXPECT_NE(config_error("[fault]\nkind = power_bias\n").find("fault.gamma"), std::string::npos);
  EXPECT_NE(config_error("[fault]\nkind = ideal\ngamma = 2\n").find("fault.gamma"), std::string::npos);
  EXPECT_NE(config_error("[fault]\nkind = cosmic\n").find("fault.kind"), std::string::npos);
  EXPECT_NE(config_error("[fault]\nkind = low_thinning\nc = 1\nq = 0.5\n").find("fault.c"), std::string::npos);
  EXPECT_NE(config_error("[fix]\na = 0.9\nb = 0.1\n").find("fix.a"), std::string::npos);
  EXPECT_NE(config_error("[fix]\na = 0.1\n").find("fix.b"), std::string::npos);
  EXPECT_NE(config_error("[transform]\nnames = twist\n").find("transform.names"), std::string::npos);
  EXPECT_NE(config_error("[transform]\nsimulate = true\n").find("transform.simulate"), std::string::npos);
  EXPECT_NE(config_error("[experiment]\nseed = 1\nseed_count = 2\n").find("experiment.seed"), std::string::npos);
  EXPECT_NE(config_error("[experiment]\nseed_count = 0\n").find("experiment.seed_count"), std::string::npos);
  EXPECT_NE(config_error("[output]\nformats = xml\n").find("output.formats"), std::string::npos);
  EXPECT_NE(config_error("[diagnostics]\ninject_determinism_fault = yes\n").find("diagnostics.inject_determinism_fault"),
            std::string::npos);
  EXPECT_NE(config_error("[experiment\n").find("config"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Report rendering

TEST(Csv, FieldQuoting) {
  EXPECT_EQ(report::csv_field("plain"), "plain");
  EXPECT_EQ(report::csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(report::csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(report::csv_field("two\nlines"), "\"two\nlines\"");
}

TEST(Csv, SummaryLayout) {
  std::ostringstream os;
  report::write_summary_csv(os, {{7, "serial vs P=2", "ks_inter_event", "a, b", 0.25, 0.5, "consistent"},
                                 {7, "ab:reflect", "mean", "-log(y)", 1.0, std::nullopt, ""}});
  EXPECT_EQ(os.str(),
            "seed,pairing,test,subject,statistic,p_value,verdict\r\n"
            "7,serial vs P=2,ks_inter_event,\"a, b\",0.25,0.5,consistent\r\n"
            "7,ab:reflect,mean,-log(y),1.0,,\r\n");
}

TEST(Csv, EventsLayout) {
  Trajectory t;
  t.events = {{0.5, 3, 2}, {1.25, 0, 4}};
  std::ostringstream os;
  report::write_events_csv(os, t);
  EXPECT_EQ(os.str(), "time,mark,draw_index\r\n0.5,3,2\r\n1.25,0,4\r\n");
}

TEST(Report, NumberFormatRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, 0.0}) {
    EXPECT_EQ(std::stod(report::format_number(x)), x);
  }
}

AppConfig small_config() {
  return parse(R"([experiment]
seed = 5
n_clocks = 16
horizon = 100

[parallel]
workers = 1, 2
mappings = round-robin
stream_modes = per_clock, per_worker
)");
}

TEST(Report, KeysAlphabeticalAndSchemaVersioned) {
  const auto res = cli::cmd_detect(small_config());
  EXPECT_EQ(res.body.at("schema_version"), 1);
  const std::string text = res.body.dump();
  EXPECT_EQ(text.find("timestamp"), std::string::npos);
  std::vector<std::string> keys;
  for (const auto& [k, _] : res.body.items()) keys.push_back(k);
  EXPECT_TRUE(std::is_sorted(keys.begin(), keys.end()));
  // Nested objects keep sorted order too.
  const auto& plan = res.body.at("plan");
  std::vector<std::string> plan_keys;
  for (const auto& [k, _] : plan.items()) plan_keys.push_back(k);
  EXPECT_TRUE(std::is_sorted(plan_keys.begin(), plan_keys.end()));
}

TEST(Report, DetectDeterministic) {
  const auto a = cli::cmd_detect(small_config());
  const auto b = cli::cmd_detect(small_config());
  EXPECT_EQ(a.body.dump(2), b.body.dump(2));
  EXPECT_EQ(a.exit_code, b.exit_code);
}

TEST(Report, EveryCsvNumberAppearsInJson) {
  const auto res = cli::cmd_detect(small_config());
  const std::string text = res.body.dump();
  ASSERT_FALSE(res.rows.empty());
  for (const auto& r : res.rows) {
    EXPECT_NE(text.find(report::format_number(r.statistic)), std::string::npos) << r.test;
    if (r.p_value) {
      EXPECT_NE(text.find(report::format_number(*r.p_value)), std::string::npos) << r.test;
    }
  }
}

// ---------------------------------------------------------------------------
// Commands

TEST(Commands, CalibrateForcesIdealWithWarning) {
  auto cfg = small_config();
  cfg.plan.fault = PowerBias{2.0};
  const auto res = cli::cmd_calibrate(cfg);
  ASSERT_EQ(res.warnings.size(), 1U);
  EXPECT_NE(res.warnings[0].find("fault.kind"), std::string::npos);
  EXPECT_EQ(res.body.at("plan").at("fault").at("kind"), "ideal");
  EXPECT_EQ(res.exit_code, cli::kExitConsistent);
}

TEST(Commands, DetectPowerBiasDiverges) {
  auto cfg = small_config();
  cfg.plan.fault = PowerBias{2.0};
  cfg.plan.horizon = 2000.0;
  EXPECT_EQ(cli::cmd_detect(cfg).exit_code, cli::kExitDivergence);
}

TEST(Commands, DetectInjectedFaultIsBreach) {
  auto cfg = small_config();
  cfg.plan.inject_determinism_fault = true;
  EXPECT_EQ(cli::cmd_detect(cfg).exit_code, cli::kExitDeterminismBreach);
}

TEST(Commands, AbTestRequiresTransform) {
  EXPECT_THROW((void)cli::cmd_ab_test(small_config()), ConfigError);
}

TEST(Commands, AbTestPowerBiasMeansInRows) {
  auto cfg = parse("[experiment]\nseed = 1\n[fault]\nkind = power_bias\ngamma = 2\n[transform]\nnames = reflect\n");
  const auto res = cli::cmd_ab_test(cfg);
  EXPECT_EQ(res.exit_code, cli::kExitDivergence);
  ASSERT_GE(res.rows.size(), 2U);
  EXPECT_EQ(res.rows[0].test, "mean");
  EXPECT_NEAR(res.rows[0].statistic, 0.5, 0.01);
  EXPECT_NEAR(res.rows[1].statistic, 1.5, 0.03);
}

TEST(Commands, AbTestIdealConsistent) {
  auto cfg = parse("[experiment]\nseed = 1\n[transform]\nnames = reflect\n");
  EXPECT_EQ(cli::cmd_ab_test(cfg).exit_code, cli::kExitConsistent);
}

TEST(Commands, FixDemo) {
  auto fixed = parse("[experiment]\nseed = 1\n[fault]\nkind = low_thinning\nc = 0.5\nq = 1\n[fix]\na = 0.5\nb = 1\n");
  const auto res = cli::cmd_fix_demo(fixed);
  EXPECT_EQ(res.exit_code, cli::kExitConsistent);
  EXPECT_EQ(res.body.at("fixes")[0].at("before").at("verdict").at("outcome"), "divergence");

  auto identity = parse("[experiment]\nseed = 1\n[fix]\na = 0\nb = 1\n");
  const auto id = cli::cmd_fix_demo(identity);
  EXPECT_EQ(id.exit_code, cli::kExitConsistent);
  EXPECT_EQ(id.body.at("fixes")[0].at("discard_rate"), 0.0);

  EXPECT_THROW((void)cli::cmd_fix_demo(small_config()), ConfigError);
}

}  // namespace
}  // namespace mcfault
