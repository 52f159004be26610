#pragma once

// The same marked Poisson process simulated two ways: one merged clock of
// rate N with uniform marks (serial), and N independent unit-rate clocks
// distributed over workers (parallel).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mcfault/error.hpp"
#include "mcfault/mapping.hpp"
#include "mcfault/pipeline.hpp"
#include "mcfault/rng.hpp"
#include "mcfault/transforms.hpp"

namespace mcfault {

// Normative substream layout.
inline constexpr std::uint64_t kSerialStream = 0;
inline constexpr std::uint64_t kClockStreamBase = 1;
inline constexpr std::uint64_t kWorkerStreamBase = 1'000'000;

struct Event {
  double time = 0.0;
  std::uint32_t mark = 0;
  std::uint64_t draw_index = 0;  // raw draws taken by the producing stream so far
  friend bool operator==(const Event&, const Event&) = default;
};

[[nodiscard]] inline bool event_before(const Event& x, const Event& y) noexcept {
  return x.time < y.time || (x.time == y.time && x.mark < y.mark);
}

struct Trajectory {
  std::vector<Event> events;
  double final_time = 0.0;
  std::uint64_t total_draws = 0;
  std::vector<std::uint64_t> per_clock_ticks;

  [[nodiscard]] std::size_t size() const noexcept { return events.size(); }
  [[nodiscard]] bool empty() const noexcept { return events.empty(); }

  /// Gaps between consecutive events, with the first measured from time 0.
  [[nodiscard]] std::vector<double> inter_event_times() const {
    std::vector<double> out;
    out.reserve(events.size());
    double prev = 0.0;
    for (const auto& e : events) {
      out.push_back(e.time - prev);
      prev = e.time;
    }
    return out;
  }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

[[nodiscard]] inline double exp_increment(double u, double rate) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("exp_increment: u outside (0,1)");
  if (!(rate > 0.0) || !std::isfinite(rate)) throw DomainError("exp_increment: rate must be > 0");
  return -std::log(u) / rate;
}
[[nodiscard]] inline double exp_increment(UnitSample u, double rate) { return exp_increment(u.value(), rate); }

struct SerialConfig {
  std::uint32_t n_clocks = 1;
  double horizon = 1.0;
  Seed seed{};
  FaultModel fault = Ideal{};
  std::optional<MeasurePreservingMap> map;
  std::optional<FixWindow> fix;

  [[nodiscard]] SamplePipeline pipeline() const { return {fault, map, fix}; }

  void validate() const {
    if (n_clocks == 0) throw ConfigError("n_clocks must be >= 1");
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon must be > 0");
    pipeline().validate();
  }
};

enum class StreamMode : std::uint8_t { PerClock, PerWorker };

[[nodiscard]] inline std::string_view stream_mode_name(StreamMode m) {
  return m == StreamMode::PerClock ? "per_clock" : "per_worker";
}

[[nodiscard]] inline StreamMode parse_stream_mode(std::string_view s) {
  if (s == "per_clock") return StreamMode::PerClock;
  if (s == "per_worker") return StreamMode::PerWorker;
  throw ConfigError("unknown stream mode '" + std::string(s) + "'");
}

struct ParallelConfig {
  std::uint32_t n_clocks = 1;
  double horizon = 1.0;
  Seed seed{};
  FaultModel fault = Ideal{};
  std::optional<MeasurePreservingMap> map;
  std::optional<FixWindow> fix;
  std::uint32_t workers = 1;
  std::vector<std::uint32_t> mapping;  // clock id -> worker id
  StreamMode stream_mode = StreamMode::PerClock;

  [[nodiscard]] SamplePipeline pipeline() const { return {fault, map, fix}; }

  void validate() const {
    SerialConfig{n_clocks, horizon, seed, fault, map, fix}.validate();
    if (workers == 0) throw ConfigError("workers must be >= 1");
    if (mapping.size() != n_clocks) throw ConfigError("mapping must cover every clock");
    for (auto w : mapping) {
      if (w >= workers) throw ConfigError("mapping assigns a clock to a worker id >= workers");
    }
  }
};

/// Superposes individually time-sorted event lists into one trajectory,
/// ordered by time with ties broken by ascending mark. `total_draws` is left
/// for the caller.
[[nodiscard]] inline Trajectory merge(std::span<const std::vector<Event>> parts, std::size_t n_clocks = 0) {
  Trajectory out;
  std::size_t total = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 1; i < p.size(); ++i) {
      if (p[i].time < p[i - 1].time) throw InternalError("merge: input part is not time-sorted");
    }
    total += p.size();
  }
  out.events.reserve(total);
  for (const auto& p : parts) out.events.insert(out.events.end(), p.begin(), p.end());
  std::stable_sort(out.events.begin(), out.events.end(), event_before);

  out.per_clock_ticks.assign(std::max(n_clocks, parts.size()), 0);
  for (const auto& e : out.events) {
    if (e.mark >= out.per_clock_ticks.size()) out.per_clock_ticks.resize(e.mark + 1, 0);
    ++out.per_clock_ticks[e.mark];
  }
  if (!out.events.empty()) out.final_time = out.events.back().time;
  return out;
}

/// Serial merged clock driven by an arbitrary source: two draws per event.
template <UnitSource Source>
[[nodiscard]] Trajectory simulate_serial(const SerialConfig& cfg, Source& src) {
  cfg.validate();
  const double rate = static_cast<double>(cfg.n_clocks);
  const std::uint64_t draws_before = src.draws();
  Trajectory traj;
  traj.per_clock_ticks.assign(cfg.n_clocks, 0);
  double t = 0.0;
  for (;;) {
    const double next_t = t + exp_increment(UnitSample(src.next()), rate);
    if (next_t > cfg.horizon) break;
    const double u2 = UnitSample(src.next()).value();
    const auto mark = std::min<std::uint32_t>(static_cast<std::uint32_t>(u2 * rate), cfg.n_clocks - 1);
    traj.events.push_back({next_t, mark, src.draws()});
    ++traj.per_clock_ticks[mark];
    t = next_t;
  }
  traj.final_time = t;
  traj.total_draws = src.draws() - draws_before;
  return traj;
}

[[nodiscard]] inline Trajectory simulate_serial(const SerialConfig& cfg) {
  cfg.validate();
  PipelineStream src(cfg.seed, StreamId{kSerialStream}, cfg.pipeline());
  return simulate_serial(cfg, src);
}

namespace detail {

struct WorkerOutput {
  std::uint64_t draws = 0;
};

template <typename Factory>
void run_per_clock_worker(const ParallelConfig& cfg, std::span<const std::uint32_t> clocks, Factory& make_source,
                          std::vector<std::vector<Event>>& per_clock, WorkerOutput& out) {
  for (std::uint32_t c : clocks) {
    auto src = make_source(StreamId{kClockStreamBase + c});
    auto& evs = per_clock[c];
    double t = 0.0;
    for (;;) {
      const double next_t = t + exp_increment(UnitSample(src.next()), 1.0);
      if (next_t > cfg.horizon) break;
      evs.push_back({next_t, c, src.draws()});
      t = next_t;
    }
    out.draws += src.draws();
  }
}

template <typename Factory>
void run_per_worker(const ParallelConfig& cfg, std::uint32_t worker, std::span<const std::uint32_t> clocks,
                    Factory& make_source, std::vector<std::vector<Event>>& per_clock, WorkerOutput& out) {
  auto src = make_source(StreamId{kWorkerStreamBase + worker});
  std::vector<double> t(clocks.size(), 0.0);
  std::vector<bool> active(clocks.size(), true);
  std::size_t remaining = clocks.size();
  while (remaining > 0) {
    for (std::size_t k = 0; k < clocks.size(); ++k) {
      if (!active[k]) continue;
      const double next_t = t[k] + exp_increment(UnitSample(src.next()), 1.0);
      if (next_t > cfg.horizon) {
        active[k] = false;
        --remaining;
        continue;
      }
      per_clock[clocks[k]].push_back({next_t, clocks[k], src.draws()});
      t[k] = next_t;
    }
  }
  out.draws += src.draws();
}

}  // namespace detail

/// Parallel clocks. `make_source(StreamId)` must return a fresh UnitSource.
/// Workers run on their own threads when workers > 1; output does not depend
/// on scheduling because workers share no stream state or clocks.
template <typename Factory>
[[nodiscard]] Trajectory simulate_parallel(const ParallelConfig& cfg, Factory make_source) {
  cfg.validate();
  std::vector<std::vector<std::uint32_t>> clocks_of(cfg.workers);
  for (std::uint32_t c = 0; c < cfg.n_clocks; ++c) clocks_of[cfg.mapping[c]].push_back(c);

  std::vector<std::vector<Event>> per_clock(cfg.n_clocks);
  std::vector<detail::WorkerOutput> outputs(cfg.workers);
  std::vector<std::exception_ptr> failures(cfg.workers);

  auto work = [&](std::uint32_t w) {
    try {
      Factory local = make_source;
      if (cfg.stream_mode == StreamMode::PerClock) {
        detail::run_per_clock_worker(cfg, clocks_of[w], local, per_clock, outputs[w]);
      } else if (!clocks_of[w].empty()) {
        detail::run_per_worker(cfg, w, clocks_of[w], local, per_clock, outputs[w]);
      }
    } catch (...) {
      failures[w] = std::current_exception();
    }
  };

  if (cfg.workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(cfg.workers);
    for (std::uint32_t w = 0; w < cfg.workers; ++w) threads.emplace_back(work, w);
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  Trajectory traj = merge(per_clock, cfg.n_clocks);
  for (const auto& o : outputs) traj.total_draws += o.draws;
  return traj;
}

[[nodiscard]] inline Trajectory simulate_parallel(const ParallelConfig& cfg) {
  cfg.validate();
  const SamplePipeline pipe = cfg.pipeline();
  const Seed seed = cfg.seed;
  return simulate_parallel(cfg, [pipe, seed](StreamId id) { return PipelineStream(seed, id, pipe); });
}

}  // namespace mcfault
