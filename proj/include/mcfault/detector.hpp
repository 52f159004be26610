#pragma once

// Detection methodology: transform A/B tests on the source, serial vs
// parallel and parallel vs parallel comparisons, and before/after checks of
// the rejection-rescale repair.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

#include "mcfault/error.hpp"
#include "mcfault/mapping.hpp"
#include "mcfault/pipeline.hpp"
#include "mcfault/process.hpp"
#include "mcfault/rng.hpp"
#include "mcfault/stats.hpp"
#include "mcfault/transforms.hpp"

namespace mcfault {

// Substreams for the two independent arms of the A/B test and for the
// one-sample uniformity probe.
inline constexpr StreamId kAbRawStream{3'000'000};
inline constexpr StreamId kAbMappedStream{3'000'001};
inline constexpr StreamId kUniformityStream{3'000'002};

inline constexpr std::uint64_t kMinAbSamples = 1'000;
inline constexpr std::uint64_t kMinCompareEvents = 1'000;
inline constexpr std::uint64_t kMinFixSamples = 10'000;

enum class Outcome : std::uint8_t { Consistent, DivergenceDetected };

[[nodiscard]] inline const char* outcome_name(Outcome o) {
  return o == Outcome::Consistent ? "consistent" : "divergence";
}

struct Evidence {
  std::string test;     // base test name, e.g. "ks_inter_event"
  std::string subject;  // what was compared, e.g. "serial vs P=4/round-robin/per_worker"
  double statistic = 0.0;
  double p_value = 1.0;
};

// Base name of evidence emitted when PerClock replays are not bit-identical.
inline constexpr const char* kDeterminismBreach = "determinism_breach";
inline constexpr const char* kBitEquality = "bit_equality";

struct Verdict {
  Outcome outcome = Outcome::Consistent;
  std::vector<Evidence> evidence;
  double alpha = 0.01;
  bool determinism_breach = false;

  [[nodiscard]] bool diverged() const noexcept { return outcome == Outcome::DivergenceDetected; }
  [[nodiscard]] double min_p_value() const noexcept {
    double p = 1.0;
    for (const auto& e : evidence) p = std::min(p, e.p_value);
    return p;
  }
};

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
}

[[nodiscard]] inline Verdict make_verdict(std::vector<Evidence> evidence, double alpha) {
  Verdict v;
  v.alpha = alpha;
  v.evidence = std::move(evidence);
  for (const auto& e : v.evidence) {
    if (e.test == kDeterminismBreach) v.determinism_breach = true;
    if (e.p_value < alpha) v.outcome = Outcome::DivergenceDetected;
  }
  if (v.determinism_breach) v.outcome = Outcome::DivergenceDetected;
  return v;
}

// ---------------------------------------------------------------------------
// Transform A/B test

struct AbTestResult {
  Verdict verdict;
  stats::SampleSummary raw;     // -log(y)
  stats::SampleSummary mapped;  // -log(f(y))
  std::string map_name;
};

/// Draws n samples for each arm from independent substreams of the same
/// source and compares the clock functional -log(y) against -log(f(y)).
[[nodiscard]] inline AbTestResult transform_ab_test(const SamplePipeline& source, const MeasurePreservingMap& map,
                                                    std::uint64_t n, double alpha, Seed seed) {
  check_alpha(alpha);
  if (n < kMinAbSamples) throw ConfigError("transform_ab_test: n must be >= 1000");
  SamplePipeline plain = source;
  plain.map.reset();
  PipelineStream raw_src(seed, kAbRawStream, plain);
  PipelineStream mapped_src(seed, kAbMappedStream, plain);
  std::vector<double> raw(n);
  std::vector<double> mapped(n);
  for (std::uint64_t i = 0; i < n; ++i) raw[i] = -std::log(raw_src.next().value());
  for (std::uint64_t i = 0; i < n; ++i) mapped[i] = -std::log(map.apply(mapped_src.next()).value());

  AbTestResult out;
  out.map_name = map.name();
  out.raw = stats::summarize(raw);
  out.mapped = stats::summarize(mapped);
  const auto welch = stats::welch_t(out.raw, out.mapped);
  const auto ks = stats::ks_two_sample(raw, mapped);
  const std::string subject = "-log(y) vs -log(" + out.map_name + "(y))";
  out.verdict = make_verdict({{"welch_mean", subject, welch.statistic, welch.p_value},
                              {"ks_two_sample", subject, ks.statistic, ks.p_value}},
                             alpha);
  return out;
}

[[nodiscard]] inline AbTestResult transform_ab_test(const FaultModel& fault, const MeasurePreservingMap& map,
                                                    std::uint64_t n, double alpha, Seed seed) {
  return transform_ab_test(SamplePipeline{fault, std::nullopt, std::nullopt}, map, n, alpha, seed);
}

// ---------------------------------------------------------------------------
// Trajectory comparisons

namespace detail {

inline void append_mark_test(std::vector<Evidence>& ev, const Trajectory& t, const std::string& subject) {
  if (t.per_clock_ticks.size() < 2) return;
  const auto chi = stats::chi_square_uniform(t.per_clock_ticks);
  ev.push_back({"chi2_marks", subject, chi.statistic, chi.p_value});
}

inline std::vector<Evidence> compare_trajectories(const Trajectory& a, const std::string& a_name,
                                                  const Trajectory& b, const std::string& b_name) {
  if (a.size() < kMinCompareEvents || b.size() < kMinCompareEvents) {
    throw ConfigError("trajectory comparison needs at least 1000 events per side");
  }
  const auto gaps_a = a.inter_event_times();
  const auto gaps_b = b.inter_event_times();
  const std::string subject = a_name + " vs " + b_name;
  std::vector<Evidence> ev;
  const auto ks = stats::ks_two_sample(gaps_a, gaps_b);
  ev.push_back({"ks_inter_event", subject, ks.statistic, ks.p_value});
  const auto welch = stats::welch_t(stats::summarize(gaps_a), stats::summarize(gaps_b));
  ev.push_back({"welch_inter_event_mean", subject, welch.statistic, welch.p_value});
  append_mark_test(ev, a, a_name);
  append_mark_test(ev, b, b_name);
  return ev;
}

}  // namespace detail

[[nodiscard]] inline Verdict serial_parallel_compare(const Trajectory& serial, const Trajectory& parallel, double alpha,
                                                     const std::string& parallel_name = "parallel") {
  check_alpha(alpha);
  return make_verdict(detail::compare_trajectories(serial, "serial", parallel, parallel_name), alpha);
}

/// A parallel run with a human-readable label, e.g. "P=4/round-robin/per_clock".
struct ParallelRun {
  std::string label;
  ParallelConfig config;
  Trajectory trajectory;
};

[[nodiscard]] inline std::string run_label(std::uint32_t workers, MappingKind mapping, StreamMode mode) {
  return "P=" + std::to_string(workers) + "/" + std::string(mapping_name(mapping)) + "/" +
         std::string(stream_mode_name(mode));
}

/// PerClock runs must replay bit-identically; PerWorker runs are compared
/// pairwise with the statistical battery.
[[nodiscard]] inline Verdict cross_parallel_compare(const std::vector<ParallelRun>& runs, double alpha) {
  check_alpha(alpha);
  if (runs.size() < 2) throw ConfigError("cross_parallel_compare: need at least 2 runs");
  const auto& ref = runs.front().config;
  for (const auto& r : runs) {
    const auto& c = r.config;
    if (c.n_clocks != ref.n_clocks || c.horizon != ref.horizon || c.seed != ref.seed || c.fault != ref.fault ||
        c.map != ref.map || c.fix != ref.fix) {
      throw ConfigError("cross_parallel_compare: runs differ in clocks, horizon, seed, fault, map or fix");
    }
  }

  std::vector<Evidence> ev;
  const ParallelRun* first_per_clock = nullptr;
  std::vector<const ParallelRun*> per_worker;
  for (const auto& r : runs) {
    if (r.config.stream_mode == StreamMode::PerWorker) {
      per_worker.push_back(&r);
      continue;
    }
    if (first_per_clock == nullptr) {
      first_per_clock = &r;
      continue;
    }
    const bool same = r.trajectory == first_per_clock->trajectory;
    const std::string subject = first_per_clock->label + " vs " + r.label;
    if (same) {
      ev.push_back({kBitEquality, subject, 0.0, 1.0});
    } else {
      ev.push_back({kDeterminismBreach, subject, 1.0, 0.0});
    }
  }
  for (std::size_t i = 0; i < per_worker.size(); ++i) {
    for (std::size_t j = i + 1; j < per_worker.size(); ++j) {
      auto pair_ev = detail::compare_trajectories(per_worker[i]->trajectory, per_worker[i]->label,
                                                  per_worker[j]->trajectory, per_worker[j]->label);
      ev.insert(ev.end(), pair_ev.begin(), pair_ev.end());
    }
  }
  return make_verdict(std::move(ev), alpha);
}

/// Fits an exponential to the trajectory's own mean gap and runs a one-sample
/// KS against it. A single serial run has no other reference to test against.
[[nodiscard]] inline stats::KsResult self_exponential_check(const Trajectory& traj) {
  const auto gaps = traj.inter_event_times();
  const double mean = stats::summarize(gaps).mean;
  return stats::ks_one_sample(gaps, [mean](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x / mean); });
}

// ---------------------------------------------------------------------------
// Fix evaluation

struct FixStage {
  stats::KsResult uniformity;
  AbTestResult ab;
  Verdict verdict;
};

struct FixReport {
  FixWindow window;
  FixStage before;
  FixStage after;
  std::uint64_t candidates = 0;  // values offered to the fault and fix layers
  std::uint64_t discarded = 0;
  double discard_rate = 0.0;
  double discard_rate_se = 0.0;  // binomial standard error at the observed rate
};

namespace detail {

inline FixStage evaluate_stage(const SamplePipeline& pipe, const MeasurePreservingMap& map, std::uint64_t n,
                               double alpha, Seed seed, PipelineStream* probe_out = nullptr) {
  PipelineStream probe(seed, kUniformityStream, pipe);
  std::vector<double> xs(n);
  for (auto& x : xs) x = probe.next().value();
  FixStage st;
  st.uniformity = stats::ks_one_sample(xs, stats::uniform_cdf);
  st.ab = transform_ab_test(pipe, map, n, alpha, seed);
  std::vector<Evidence> ev{{"ks_uniform", "samples vs U(0,1)", st.uniformity.statistic, st.uniformity.p_value}};
  ev.insert(ev.end(), st.ab.verdict.evidence.begin(), st.ab.verdict.evidence.end());
  st.verdict = make_verdict(std::move(ev), alpha);
  if (probe_out != nullptr) *probe_out = probe;
  return st;
}

}  // namespace detail

[[nodiscard]] inline FixReport fix_evaluation(const FaultModel& fault, const FixWindow& window, std::uint64_t n,
                                              double alpha, Seed seed,
                                              const MeasurePreservingMap& map = MeasurePreservingMap::reflect()) {
  check_alpha(alpha);
  window.validate();
  validate(fault);
  if (n < kMinFixSamples) throw ConfigError("fix_evaluation: n must be >= 10000");
  FixReport r;
  r.window = window;
  r.before = detail::evaluate_stage({fault, std::nullopt, std::nullopt}, map, n, alpha, seed);
  PipelineStream probe(seed, kUniformityStream, {fault, std::nullopt, window});
  r.after = detail::evaluate_stage({fault, std::nullopt, window}, map, n, alpha, seed, &probe);
  r.candidates = probe.candidates();
  r.discarded = probe.discarded_candidates();
  r.discard_rate = static_cast<double>(r.discarded) / static_cast<double>(r.candidates);
  r.discard_rate_se = std::sqrt(r.discard_rate * (1.0 - r.discard_rate) / static_cast<double>(r.candidates));
  return r;
}

// ---------------------------------------------------------------------------
// Experiment orchestration

struct ExperimentPlan {
  std::vector<Seed> seeds;
  std::uint32_t n_clocks = 16;
  double horizon = 100.0;
  FaultModel fault = Ideal{};
  std::optional<MeasurePreservingMap> map;
  std::optional<FixWindow> fix;
  std::vector<std::uint32_t> workers{1};
  std::vector<MappingKind> mappings{MappingKind::ContiguousBlocks};
  std::vector<StreamMode> stream_modes{StreamMode::PerClock};
  double alpha = 0.01;
  std::uint64_t fix_samples = kMinFixSamples;
  // Self-test of the breach path: salts PerClock stream ids with the worker
  // count, so runs with different P stop replaying identically.
  bool inject_determinism_fault = false;

  void validate() const {
    if (seeds.empty()) throw ConfigError("seeds: plan needs at least one seed");
    check_alpha(alpha);
    SerialConfig{n_clocks, horizon, Seed{}, fault, map, fix}.validate();
    if (workers.empty()) throw ConfigError("workers: at least one worker count required");
    for (auto w : workers) {
      if (w == 0) throw ConfigError("workers: counts must be >= 1");
    }
    if (mappings.empty()) throw ConfigError("mappings: at least one mapping required");
    if (stream_modes.empty()) throw ConfigError("stream_modes: at least one stream mode required");
    if (fix && fix_samples < kMinFixSamples) throw ConfigError("fix_samples must be >= 10000");
  }
};

struct RunSummary {
  std::string label;  // "serial" or a parallel run label
  std::uint64_t events = 0;
  std::uint64_t total_draws = 0;
  double final_time = 0.0;
  stats::SampleSummary inter_event;
  stats::DriftReport drift;
};

struct Pairing {
  std::string name;
  Verdict verdict;
};

struct SeedReport {
  Seed seed;
  RunSummary serial;
  std::vector<RunSummary> parallel;
  std::vector<Pairing> pairings;
  std::optional<FixReport> fix;
};

struct ComparisonReport {
  ExperimentPlan plan;
  std::vector<SeedReport> seeds;

  [[nodiscard]] bool any_divergence() const {
    for (const auto& s : seeds) {
      for (const auto& p : s.pairings) {
        if (p.verdict.diverged()) return true;
      }
    }
    return false;
  }
  [[nodiscard]] bool any_determinism_breach() const {
    for (const auto& s : seeds) {
      for (const auto& p : s.pairings) {
        if (p.verdict.determinism_breach) return true;
      }
    }
    return false;
  }
};

/// Called once per simulated trajectory, in deterministic order.
using TrajectoryObserver = std::function<void(Seed, const std::string& label, const Trajectory&)>;

namespace detail {

inline Trajectory simulate_salted(const ParallelConfig& pc) {
  const SamplePipeline pipe = pc.pipeline();
  const Seed seed = pc.seed;
  const std::uint64_t salt = std::uint64_t{pc.workers} << 40;
  return simulate_parallel(pc, [pipe, seed, salt](StreamId id) { return PipelineStream(seed, StreamId{id.value ^ salt}, pipe); });
}

inline RunSummary summarize_run(const std::string& label, const Trajectory& t, double nominal_rate) {
  RunSummary s;
  s.label = label;
  s.events = t.size();
  s.total_draws = t.total_draws;
  s.final_time = t.final_time;
  if (!t.empty()) {
    s.inter_event = stats::summarize(t.inter_event_times());
    s.drift = stats::clock_drift(t, nominal_rate);
  }
  return s;
}

}  // namespace detail

[[nodiscard]] inline ComparisonReport run_experiment(const ExperimentPlan& plan,
                                                     const TrajectoryObserver& observe = {}) {
  plan.validate();
  ComparisonReport report;
  report.plan = plan;
  const double rate = static_cast<double>(plan.n_clocks);

  for (Seed seed : plan.seeds) {
    SeedReport sr;
    sr.seed = seed;
    const Trajectory serial = simulate_serial({plan.n_clocks, plan.horizon, seed, plan.fault, plan.map, plan.fix});
    if (observe) observe(seed, "serial", serial);
    sr.serial = detail::summarize_run("serial", serial, rate);

    std::vector<ParallelRun> runs;
    for (auto workers : plan.workers) {
      for (auto mapping : plan.mappings) {
        for (auto mode : plan.stream_modes) {
          ParallelConfig pc{plan.n_clocks, plan.horizon, seed,    plan.fault,
                            plan.map,      plan.fix,     workers, make_mapping(mapping, plan.n_clocks, workers, seed),
                            mode};
          ParallelRun run{run_label(workers, mapping, mode), pc,
                          plan.inject_determinism_fault ? detail::simulate_salted(pc) : simulate_parallel(pc)};
          if (observe) observe(seed, run.label, run.trajectory);
          sr.parallel.push_back(detail::summarize_run(run.label, run.trajectory, rate));
          sr.pairings.push_back({"serial vs " + run.label,
                                 serial_parallel_compare(serial, run.trajectory, plan.alpha, run.label)});
          runs.push_back(std::move(run));
        }
      }
    }
    if (runs.size() >= 2) sr.pairings.push_back({"cross-parallel", cross_parallel_compare(runs, plan.alpha)});
    if (plan.fix) sr.fix = fix_evaluation(plan.fault, *plan.fix, plan.fix_samples, plan.alpha, seed);
    report.seeds.push_back(std::move(sr));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Type-I calibration band

/// Smallest k with P(X <= k) >= level for X ~ Binomial(trials, alpha).
[[nodiscard]] inline std::uint64_t binomial_upper_band(std::uint64_t trials, double alpha, double level = 0.99) {
  if (trials == 0) return 0;
  const boost::math::binomial_distribution<double> dist(static_cast<double>(trials), alpha);
  std::uint64_t k = 0;
  while (k < trials && boost::math::cdf(dist, static_cast<double>(k)) < level) ++k;
  return k;
}

struct TestRejectionCount {
  std::string test;
  std::uint64_t trials = 0;
  std::uint64_t rejections = 0;
  std::uint64_t band = 0;
  [[nodiscard]] bool within_band() const noexcept { return rejections <= band; }
};

/// Per-test rejection counts across every statistical evidence row in the
/// report. Bit-equality rows are excluded; they are not statistical.
[[nodiscard]] inline std::vector<TestRejectionCount> rejection_counts(const ComparisonReport& report) {
  std::map<std::string, TestRejectionCount> by_test;
  for (const auto& s : report.seeds) {
    for (const auto& p : s.pairings) {
      for (const auto& e : p.verdict.evidence) {
        if (e.test == kBitEquality || e.test == kDeterminismBreach) continue;
        auto& c = by_test[e.test];
        c.test = e.test;
        ++c.trials;
        if (e.p_value < report.plan.alpha) ++c.rejections;
      }
    }
  }
  std::vector<TestRejectionCount> out;
  for (auto& [name, c] : by_test) {
    c.band = binomial_upper_band(c.trials, report.plan.alpha);
    out.push_back(c);
  }
  return out;
}

}  // namespace mcfault
