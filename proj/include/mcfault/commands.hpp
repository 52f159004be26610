#pragma once

// Subcommand logic behind the mcfault executable. Each command returns the
// report body, summary rows and exit code; writing files is left to the
// caller.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mcfault/config.hpp"
#include "mcfault/detector.hpp"
#include "mcfault/report.hpp"

namespace mcfault::cli {

enum ExitCode : int {
  kExitConsistent = 0,
  kExitUsage = 1,
  kExitDivergence = 2,
  kExitDeterminismBreach = 3,
};

enum class Command : std::uint8_t { Calibrate, Detect, AbTest, FixDemo };

[[nodiscard]] inline std::string_view command_name(Command c) {
  switch (c) {
    case Command::Calibrate: return "calibrate";
    case Command::Detect: return "detect";
    case Command::AbTest: return "ab-test";
    case Command::FixDemo: return "fix-demo";
  }
  return "?";
}

struct CommandResult {
  int exit_code = kExitConsistent;
  report::json body;  // report.json without the timestamp field
  std::vector<report::SummaryRow> rows;
  std::vector<std::string> warnings;
};

namespace detail {

inline report::json base_body(Command cmd, const AppConfig& cfg, const std::vector<std::string>& warnings) {
  report::json body;
  body["schema_version"] = report::kSchemaVersion;
  body["command"] = std::string(command_name(cmd));
  body["plan"] = report::plan_json(cfg.plan);
  body["warnings"] = warnings;
  return body;
}

inline void experiment_rows(std::vector<report::SummaryRow>& rows, const ComparisonReport& rep) {
  for (const auto& s : rep.seeds) {
    for (const auto& p : s.pairings) report::append_verdict_rows(rows, s.seed, p.name, p.verdict);
  }
}

inline void fix_rows(std::vector<report::SummaryRow>& rows, Seed seed, const FixReport& f) {
  report::append_verdict_rows(rows, seed, "fix:before", f.before.verdict);
  report::append_verdict_rows(rows, seed, "fix:after", f.after.verdict);
  rows.push_back({seed.value, "fix:after", "discard_rate", "candidates discarded by fault and window",
                  f.discard_rate, std::nullopt, ""});
}

inline int experiment_exit(const ComparisonReport& rep) {
  if (rep.any_determinism_breach()) return kExitDeterminismBreach;
  return rep.any_divergence() ? kExitDivergence : kExitConsistent;
}

}  // namespace detail

/// Full plan under the ideal source. Succeeds when every test's rejection
/// count stays inside the binomial 99% band for its number of trials.
[[nodiscard]] inline CommandResult cmd_calibrate(AppConfig cfg, const TrajectoryObserver& observe = {}) {
  CommandResult res;
  if (!std::holds_alternative<Ideal>(cfg.plan.fault)) {
    res.warnings.push_back("fault.kind: calibrate forces the ideal source; configured fault '" +
                           fault_name(cfg.plan.fault) + "' ignored");
    cfg.plan.fault = Ideal{};
  }
  const ComparisonReport rep = run_experiment(cfg.plan, observe);
  const auto counts = rejection_counts(rep);
  bool within = true;
  for (const auto& c : counts) within = within && c.within_band();

  res.body = detail::base_body(Command::Calibrate, cfg, res.warnings);
  report::json seeds = report::json::array();
  for (const auto& s : rep.seeds) seeds.push_back(report::seed_json(s));
  res.body["seeds"] = seeds;
  res.body["rejection_counts"] = report::rejection_counts_json(counts);
  detail::experiment_rows(res.rows, rep);

  if (rep.any_determinism_breach()) {
    res.exit_code = kExitDeterminismBreach;
  } else {
    res.exit_code = within ? kExitConsistent : kExitDivergence;
  }
  res.body["exit_code"] = res.exit_code;
  return res;
}

[[nodiscard]] inline CommandResult cmd_detect(const AppConfig& cfg, const TrajectoryObserver& observe = {}) {
  CommandResult res;
  const ComparisonReport rep = run_experiment(cfg.plan, observe);
  res.body = detail::base_body(Command::Detect, cfg, res.warnings);
  report::json seeds = report::json::array();
  for (const auto& s : rep.seeds) {
    seeds.push_back(report::seed_json(s));
    if (s.fix) detail::fix_rows(res.rows, s.seed, *s.fix);
  }
  res.body["seeds"] = seeds;
  res.body["rejection_counts"] = report::rejection_counts_json(rejection_counts(rep));
  detail::experiment_rows(res.rows, rep);
  res.exit_code = detail::experiment_exit(rep);
  res.body["exit_code"] = res.exit_code;
  return res;
}

[[nodiscard]] inline CommandResult cmd_ab_test(const AppConfig& cfg) {
  if (!cfg.has_transform_section) throw ConfigError("transform: section is required for ab-test");
  if (cfg.transforms.empty()) throw ConfigError("transform.names: at least one transform is required");
  CommandResult res;
  res.body = detail::base_body(Command::AbTest, cfg, res.warnings);
  report::json tests = report::json::array();
  bool diverged = false;
  const SamplePipeline source{cfg.plan.fault, std::nullopt, cfg.plan.fix};
  for (Seed seed : cfg.plan.seeds) {
    for (const auto& map : cfg.transforms) {
      const auto ab = transform_ab_test(source, map, cfg.samples, cfg.plan.alpha, seed);
      diverged = diverged || ab.verdict.diverged();
      auto j = report::ab_json(ab);
      j["seed"] = seed.value;
      tests.push_back(j);
      const std::string pairing = "ab:" + ab.map_name;
      res.rows.push_back({seed.value, pairing, "mean", "-log(y)", ab.raw.mean, std::nullopt, ""});
      res.rows.push_back({seed.value, pairing, "mean", "-log(" + ab.map_name + "(y))", ab.mapped.mean, std::nullopt, ""});
      report::append_verdict_rows(res.rows, seed, pairing, ab.verdict);
    }
  }
  res.body["ab_tests"] = tests;
  res.exit_code = diverged ? kExitDivergence : kExitConsistent;
  res.body["exit_code"] = res.exit_code;
  return res;
}

/// Before/after evaluation of the window fix. Succeeds when every after-fix
/// verdict is consistent.
[[nodiscard]] inline CommandResult cmd_fix_demo(const AppConfig& cfg) {
  if (!cfg.has_fix_section || !cfg.plan.fix) throw ConfigError("fix: section with a and b is required for fix-demo");
  CommandResult res;
  res.body = detail::base_body(Command::FixDemo, cfg, res.warnings);
  const MeasurePreservingMap map = cfg.transforms.empty() ? MeasurePreservingMap::reflect() : cfg.transforms.front();
  report::json fixes = report::json::array();
  bool after_ok = true;
  for (Seed seed : cfg.plan.seeds) {
    const auto f = fix_evaluation(cfg.plan.fault, *cfg.plan.fix, cfg.plan.fix_samples, cfg.plan.alpha, seed, map);
    after_ok = after_ok && !f.after.verdict.diverged();
    auto j = report::fix_json(f);
    j["seed"] = seed.value;
    fixes.push_back(j);
    detail::fix_rows(res.rows, seed, f);
  }
  res.body["fixes"] = fixes;
  res.exit_code = after_ok ? kExitConsistent : kExitDivergence;
  res.body["exit_code"] = res.exit_code;
  return res;
}

[[nodiscard]] inline CommandResult run_command(Command cmd, const AppConfig& cfg, const TrajectoryObserver& observe = {}) {
  switch (cmd) {
    case Command::Calibrate: return cmd_calibrate(cfg, observe);
    case Command::Detect: return cmd_detect(cfg, observe);
    case Command::AbTest: return cmd_ab_test(cfg);
    case Command::FixDemo: return cmd_fix_demo(cfg);
  }
  throw ConfigError("unknown command");
}

}  // namespace mcfault::cli
