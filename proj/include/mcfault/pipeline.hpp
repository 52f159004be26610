#pragma once

#include <concepts>
#include <cstdint>
#include <optional>

#include "mcfault/rng.hpp"
#include "mcfault/transforms.hpp"

namespace mcfault {

/// A source of unit samples that also reports how many raw draws it consumed.
template <typename S>
concept UnitSource = requires(S s, const S cs) {
  { s.next() } -> std::convertible_to<UnitSample>;
  { cs.draws() } -> std::convertible_to<std::uint64_t>;
};

/// Raw stream -> fault -> optional fix window -> optional map.
struct SamplePipeline {
  FaultModel fault = Ideal{};
  std::optional<MeasurePreservingMap> map;
  std::optional<FixWindow> fix;

  void validate() const {
    mcfault::validate(fault);
    if (fix) fix->validate();
  }
};

class PipelineStream {
 public:
  PipelineStream(GeneratorState start, const SamplePipeline& pipe)
      : faulted_(start, pipe.fault), map_(pipe.map), fix_(pipe.fix) {
    if (fix_) fix_->validate();
  }
  PipelineStream(Seed seed, StreamId id, const SamplePipeline& pipe)
      : PipelineStream(substream(seed, id), pipe) {}

  UnitSample next() {
    UnitSample x = fix_ ? take_fixed() : faulted_.next();
    if (map_) x = map_->apply(x);
    return x;
  }

  [[nodiscard]] std::uint64_t draws() const noexcept { return faulted_.draws(); }
  [[nodiscard]] std::uint64_t fix_discards() const noexcept { return fix_discards_; }

  /// Candidate values offered to the fault and fix layers, and how many of
  /// them were thrown away before an output was produced.
  [[nodiscard]] std::uint64_t candidates() const noexcept { return faulted_.candidates(); }
  [[nodiscard]] std::uint64_t discarded_candidates() const noexcept {
    return faulted_.rejected_candidates() + fix_discards_;
  }

 private:
  UnitSample take_fixed() {
    auto r = rejection_rescale(*fix_, [this] { return faulted_.next(); });
    fix_discards_ += r.discards;
    return r.value;
  }

  FaultedStream faulted_;
  std::optional<MeasurePreservingMap> map_;
  std::optional<FixWindow> fix_;
  std::uint64_t fix_discards_ = 0;
};

static_assert(UnitSource<PipelineStream>);
static_assert(UnitSource<FaultedStream>);

}  // namespace mcfault
