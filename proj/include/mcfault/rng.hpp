#pragma once

// Reference uniform source: a SplitMix64 stream with deterministic substream
// derivation, plus wrappers that inject parametric density defects.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <variant>

#include "mcfault/error.hpp"

namespace mcfault {

struct Seed {
  std::uint64_t value = 0;
  friend constexpr bool operator==(Seed, Seed) = default;
};

struct StreamId {
  std::uint64_t value = 0;
  friend constexpr bool operator==(StreamId, StreamId) = default;
};

/// A real number strictly inside (0,1). Construction checks the bound.
class UnitSample {
 public:
  explicit UnitSample(double v) : value_(v) {
    if (!(v > 0.0 && v < 1.0)) {
      throw DomainError("unit sample outside (0,1): " + std::to_string(v));
    }
  }

  [[nodiscard]] double value() const noexcept { return value_; }
  explicit operator double() const noexcept { return value_; }

  friend bool operator==(UnitSample, UnitSample) = default;

 private:
  double value_;
};

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 step: golden-ratio increment followed by the output finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += kGoldenGamma;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Raw generator position. `draw_count` counts every raw 64-bit draw taken.
struct GeneratorState {
  std::uint64_t state = 0;
  std::uint64_t draw_count = 0;
  friend constexpr bool operator==(const GeneratorState&, const GeneratorState&) = default;
};

/// Maps the top 52 bits onto the half-offset grid ((k + 0.5) * 2^-52), i.e.
/// odd multiples of 2^-53. Every grid point and its reflection 1 - u are
/// exact doubles; the result is never 0, 1 or exactly 1/2.
[[nodiscard]] constexpr double unit_from_bits(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

[[nodiscard]] inline std::pair<UnitSample, GeneratorState> next_unit(GeneratorState s) {
  const std::uint64_t out = mix64(s.state);
  return {UnitSample(unit_from_bits(out)),
          GeneratorState{s.state + kGoldenGamma, s.draw_count + 1}};
}

[[nodiscard]] constexpr GeneratorState substream(Seed seed, StreamId id) noexcept {
  return GeneratorState{mix64(seed.value ^ mix64(id.value)), 0};
}

// ---------------------------------------------------------------------------
// Fault models

struct Ideal {
  friend constexpr bool operator==(Ideal, Ideal) = default;
};

/// Output y = x^(1/gamma): density gamma * y^(gamma-1).
struct PowerBias {
  double gamma = 1.0;
  friend constexpr bool operator==(PowerBias, PowerBias) = default;
};

/// Draws below `c` are dropped with probability `q` and redrawn.
struct LowThinning {
  double c = 0.5;
  double q = 0.0;
  friend constexpr bool operator==(LowThinning, LowThinning) = default;
};

using FaultModel = std::variant<Ideal, PowerBias, LowThinning>;

inline void validate(const FaultModel& model) {
  if (const auto* pb = std::get_if<PowerBias>(&model)) {
    if (!(pb->gamma > 0.0) || !std::isfinite(pb->gamma)) {
      throw ConfigError("power_bias gamma must be a finite value > 0");
    }
  } else if (const auto* lt = std::get_if<LowThinning>(&model)) {
    if (!(lt->c > 0.0 && lt->c < 1.0)) throw ConfigError("low_thinning c must lie in (0,1)");
    if (!(lt->q >= 0.0 && lt->q <= 1.0)) throw ConfigError("low_thinning q must lie in [0,1]");
  }
}

[[nodiscard]] inline std::string fault_name(const FaultModel& model) {
  struct Namer {
    std::string operator()(Ideal) const { return "ideal"; }
    std::string operator()(PowerBias) const { return "power_bias"; }
    std::string operator()(LowThinning) const { return "low_thinning"; }
  };
  return std::visit(Namer{}, model);
}

namespace detail {

// Keeps a mapped value inside (0,1) when rounding lands on an endpoint.
[[nodiscard]] inline double clamp_open_unit(double y) noexcept {
  if (y <= 0.0) return std::numeric_limits<double>::min();
  if (y >= 1.0) return std::nextafter(1.0, 0.0);
  return y;
}

}  // namespace detail

/// y = x^(1/gamma), kept inside (0,1) at the representable extremes.
[[nodiscard]] inline UnitSample power_bias_map(UnitSample x, double gamma) {
  if (gamma == 1.0) return x;
  return UnitSample(detail::clamp_open_unit(std::pow(x.value(), 1.0 / gamma)));
}

/// One faulted draw with the number of primary candidates the fault rejected.
struct FaultDraw {
  UnitSample value;
  GeneratorState state;
  std::uint64_t rejected_candidates = 0;
};

[[nodiscard]] inline FaultDraw draw_with_fault_counted(const FaultModel& model, GeneratorState state) {
  if (const auto* pb = std::get_if<PowerBias>(&model)) {
    auto [x, next] = next_unit(state);
    return {power_bias_map(x, pb->gamma), next, 0};
  }
  if (const auto* lt = std::get_if<LowThinning>(&model)) {
    std::uint64_t rejected = 0;
    for (;;) {
      auto [x, after_x] = next_unit(state);
      state = after_x;
      if (x.value() >= lt->c) return {x, state, rejected};
      auto [r, after_r] = next_unit(state);
      state = after_r;
      if (r.value() >= lt->q) return {x, state, rejected};
      ++rejected;
    }
  }
  auto [x, next] = next_unit(state);
  return {x, next, 0};
}

[[nodiscard]] inline std::pair<UnitSample, GeneratorState> draw_with_fault(const FaultModel& model,
                                                                           GeneratorState state) {
  auto d = draw_with_fault_counted(model, state);
  return {d.value, d.state};
}

/// Stateful adapter over draw_with_fault. Tracks raw draws and the candidate
/// values offered and rejected by the fault layer.
class FaultedStream {
 public:
  FaultedStream(GeneratorState start, FaultModel model) : state_(start), model_(model) {
    validate(model_);
  }
  FaultedStream(Seed seed, StreamId id, FaultModel model) : FaultedStream(substream(seed, id), model) {}

  UnitSample next() {
    auto d = draw_with_fault_counted(model_, state_);
    state_ = d.state;
    candidates_ += d.rejected_candidates + 1;
    rejected_ += d.rejected_candidates;
    return d.value;
  }

  [[nodiscard]] const GeneratorState& state() const noexcept { return state_; }
  [[nodiscard]] std::uint64_t draws() const noexcept { return state_.draw_count; }
  [[nodiscard]] std::uint64_t candidates() const noexcept { return candidates_; }
  [[nodiscard]] std::uint64_t rejected_candidates() const noexcept { return rejected_; }

 private:
  GeneratorState state_;
  FaultModel model_;
  std::uint64_t candidates_ = 0;
  std::uint64_t rejected_ = 0;
};

}  // namespace mcfault
