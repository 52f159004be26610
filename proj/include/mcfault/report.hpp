#pragma once

// JSON and CSV renderings of detector results.
//
// JSON objects use nlohmann::json's default (sorted) key order, so field
// order is alphabetical and stable. Numbers in the CSV files are rendered
// with the same serializer, so every CSV number reappears verbatim in
// report.json.

#include <cstdint>
#include <ctime>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "mcfault/detector.hpp"
#include "mcfault/process.hpp"
#include "mcfault/rng.hpp"
#include "mcfault/stats.hpp"
#include "mcfault/transforms.hpp"

namespace mcfault::report {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kTimestampField = "timestamp";

/// Locale-independent shortest round-trip rendering; non-finite values become "null".
[[nodiscard]] inline std::string format_number(double x) { return json(x).dump(); }

[[nodiscard]] inline json fault_json(const FaultModel& f) {
  json j;
  j["kind"] = fault_name(f);
  if (const auto* pb = std::get_if<PowerBias>(&f)) j["gamma"] = pb->gamma;
  if (const auto* lt = std::get_if<LowThinning>(&f)) {
    j["c"] = lt->c;
    j["q"] = lt->q;
  }
  return j;
}

[[nodiscard]] inline json window_json(const std::optional<FixWindow>& w) {
  if (!w) return nullptr;
  return json{{"a", w->a}, {"b", w->b}};
}

[[nodiscard]] inline json plan_json(const ExperimentPlan& p) {
  json seeds = json::array();
  for (auto s : p.seeds) seeds.push_back(s.value);
  json mappings = json::array();
  for (auto m : p.mappings) mappings.push_back(std::string(mapping_name(m)));
  json modes = json::array();
  for (auto m : p.stream_modes) modes.push_back(std::string(stream_mode_name(m)));
  return json{{"alpha", p.alpha},
              {"fault", fault_json(p.fault)},
              {"fix", window_json(p.fix)},
              {"fix_samples", p.fix_samples},
              {"horizon", p.horizon},
              {"inject_determinism_fault", p.inject_determinism_fault},
              {"map", p.map ? json(p.map->name()) : json(nullptr)},
              {"mappings", mappings},
              {"n_clocks", p.n_clocks},
              {"seeds", seeds},
              {"stream_modes", modes},
              {"workers", p.workers}};
}

[[nodiscard]] inline json summary_json(const stats::SampleSummary& s) {
  return json{{"mean", s.mean}, {"n", s.n}, {"variance", s.has_variance() ? json(s.variance) : json(nullptr)}};
}

[[nodiscard]] inline json drift_json(const stats::DriftReport& d) {
  return json{{"expected_time", d.expected_time},
              {"lag", d.lag},
              {"lag_per_tick", d.ticks ? json(d.lag_per_tick()) : json(nullptr)},
              {"reported_time", d.reported_time},
              {"ticks", d.ticks}};
}

[[nodiscard]] inline json evidence_json(const Evidence& e) {
  return json{{"p_value", e.p_value}, {"statistic", e.statistic}, {"subject", e.subject}, {"test", e.test}};
}

[[nodiscard]] inline json verdict_json(const Verdict& v) {
  json ev = json::array();
  for (const auto& e : v.evidence) ev.push_back(evidence_json(e));
  return json{{"alpha", v.alpha},
              {"determinism_breach", v.determinism_breach},
              {"evidence", ev},
              {"outcome", outcome_name(v.outcome)}};
}

[[nodiscard]] inline json run_json(const RunSummary& r) {
  return json{{"drift", drift_json(r.drift)},
              {"events", r.events},
              {"final_time", r.final_time},
              {"inter_event", summary_json(r.inter_event)},
              {"label", r.label},
              {"total_draws", r.total_draws}};
}

[[nodiscard]] inline json ks_json(const stats::KsResult& k) {
  return json{{"m", k.m}, {"n", k.n}, {"p_value", k.p_value}, {"statistic", k.statistic}};
}

[[nodiscard]] inline json ab_json(const AbTestResult& ab) {
  return json{{"map", ab.map_name},
              {"mapped", summary_json(ab.mapped)},
              {"raw", summary_json(ab.raw)},
              {"verdict", verdict_json(ab.verdict)}};
}

[[nodiscard]] inline json fix_json(const FixReport& f) {
  auto stage = [](const FixStage& s) {
    return json{{"ab_test", ab_json(s.ab)}, {"uniformity", ks_json(s.uniformity)}, {"verdict", verdict_json(s.verdict)}};
  };
  return json{{"after", stage(f.after)},
              {"before", stage(f.before)},
              {"candidates", f.candidates},
              {"discard_rate", f.discard_rate},
              {"discard_rate_se", f.discard_rate_se},
              {"discarded", f.discarded},
              {"window", window_json(f.window)}};
}

[[nodiscard]] inline json seed_json(const SeedReport& s) {
  json par = json::array();
  for (const auto& r : s.parallel) par.push_back(run_json(r));
  json pairings = json::array();
  for (const auto& p : s.pairings) pairings.push_back(json{{"name", p.name}, {"verdict", verdict_json(p.verdict)}});
  return json{{"fix", s.fix ? fix_json(*s.fix) : json(nullptr)},
              {"pairings", pairings},
              {"parallel", par},
              {"seed", s.seed.value},
              {"serial", run_json(s.serial)}};
}

[[nodiscard]] inline json rejection_counts_json(const std::vector<TestRejectionCount>& counts) {
  json out = json::array();
  for (const auto& c : counts) {
    out.push_back(json{{"band", c.band},
                       {"rejections", c.rejections},
                       {"test", c.test},
                       {"trials", c.trials},
                       {"within_band", c.within_band()}});
  }
  return out;
}

[[nodiscard]] inline std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// CSV

/// RFC 4180 field quoting.
[[nodiscard]] inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline constexpr const char* kSummaryHeader = "seed,pairing,test,subject,statistic,p_value,verdict";
inline constexpr const char* kEventsHeader = "time,mark,draw_index";

struct SummaryRow {
  std::uint64_t seed = 0;
  std::string pairing;
  std::string test;
  std::string subject;
  double statistic = 0.0;
  std::optional<double> p_value;  // empty for descriptive rows (means, rates)
  std::string verdict;
};

inline void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  os << kSummaryHeader << "\r\n";
  for (const auto& r : rows) {
    os << r.seed << ',' << csv_field(r.pairing) << ',' << csv_field(r.test) << ',' << csv_field(r.subject) << ','
       << format_number(r.statistic) << ',' << (r.p_value ? format_number(*r.p_value) : std::string()) << ','
       << csv_field(r.verdict) << "\r\n";
  }
}

inline void append_verdict_rows(std::vector<SummaryRow>& rows, Seed seed, const std::string& pairing, const Verdict& v) {
  for (const auto& e : v.evidence) {
    rows.push_back({seed.value, pairing, e.test, e.subject, e.statistic, e.p_value, outcome_name(v.outcome)});
  }
}

inline void write_events_csv(std::ostream& os, const Trajectory& t) {
  os << kEventsHeader << "\r\n";
  for (const auto& e : t.events) os << format_number(e.time) << ',' << e.mark << ',' << e.draw_index << "\r\n";
}

}  // namespace mcfault::report
