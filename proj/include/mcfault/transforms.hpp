#pragma once

// Measure-preserving maps of (0,1) used to probe uniformity, and the
// rejection-rescale repair that restores uniformity on a trusted window.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "mcfault/error.hpp"
#include "mcfault/rng.hpp"

namespace mcfault {

// Both maps are exact on the reference grid. Off-grid inputs closer to an
// endpoint than one grid step can round onto it; those are pulled back inside.

[[nodiscard]] inline UnitSample reflect(UnitSample x) {
  return UnitSample(detail::clamp_open_unit(1.0 - x.value()));
}

/// Shift by one half modulo 1. The half-point itself is off the reference
/// grid and would map to 0, so it is rejected.
[[nodiscard]] inline UnitSample rotate_half(UnitSample x) {
  const double v = x.value();
  if (v == 0.5) throw DomainError("rotate_half: input is exactly 1/2");
  return UnitSample(detail::clamp_open_unit(v < 0.5 ? v + 0.5 : v - 0.5));
}

enum class MapKind : std::uint8_t { Reflect, RotateHalf };

/// Either a single map or a left-to-right composition. Stored flattened.
class MeasurePreservingMap {
 public:
  MeasurePreservingMap() = default;  // empty composition, i.e. the identity

  static MeasurePreservingMap reflect() { return MeasurePreservingMap({MapKind::Reflect}); }
  static MeasurePreservingMap rotate_half() { return MeasurePreservingMap({MapKind::RotateHalf}); }
  static MeasurePreservingMap compose(const std::vector<MeasurePreservingMap>& maps) {
    MeasurePreservingMap out;
    for (const auto& m : maps) out.stages_.insert(out.stages_.end(), m.stages_.begin(), m.stages_.end());
    return out;
  }

  [[nodiscard]] UnitSample apply(UnitSample x) const {
    for (MapKind k : stages_) {
      x = (k == MapKind::Reflect) ? mcfault::reflect(x) : mcfault::rotate_half(x);
    }
    return x;
  }
  UnitSample operator()(UnitSample x) const { return apply(x); }

  [[nodiscard]] const std::vector<MapKind>& stages() const noexcept { return stages_; }
  [[nodiscard]] bool is_identity() const noexcept { return stages_.empty(); }

  /// "reflect", "rotate_half", or stage names joined by '+'; "identity" if empty.
  [[nodiscard]] std::string name() const {
    if (stages_.empty()) return "identity";
    std::string out;
    for (MapKind k : stages_) {
      if (!out.empty()) out += '+';
      out += (k == MapKind::Reflect) ? "reflect" : "rotate_half";
    }
    return out;
  }

  /// Inverse of name().
  static MeasurePreservingMap parse(std::string_view text) {
    MeasurePreservingMap out;
    if (text == "identity") return out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t plus = text.find('+', pos);
      const std::string_view tok = text.substr(pos, plus == std::string_view::npos ? text.npos : plus - pos);
      if (tok == "reflect") {
        out.stages_.push_back(MapKind::Reflect);
      } else if (tok == "rotate_half") {
        out.stages_.push_back(MapKind::RotateHalf);
      } else {
        throw ConfigError("unknown transform '" + std::string(tok) + "'");
      }
      if (plus == std::string_view::npos) break;
      pos = plus + 1;
    }
    return out;
  }

  friend bool operator==(const MeasurePreservingMap&, const MeasurePreservingMap&) = default;

 private:
  explicit MeasurePreservingMap(std::initializer_list<MapKind> s) : stages_(s) {}
  std::vector<MapKind> stages_;
};

[[nodiscard]] inline UnitSample compose(const std::vector<MeasurePreservingMap>& maps, UnitSample x) {
  return MeasurePreservingMap::compose(maps).apply(x);
}

/// Trusted subinterval (a,b) with 0 <= a < b <= 1.
struct FixWindow {
  double a = 0.0;
  double b = 1.0;

  void validate() const {
    if (!(a >= 0.0 && a < b && b <= 1.0)) {
      throw ConfigError("fix window requires 0 <= a < b <= 1");
    }
  }
  [[nodiscard]] double width() const noexcept { return b - a; }
  friend bool operator==(const FixWindow&, const FixWindow&) = default;
};

struct RescaleResult {
  UnitSample value;
  std::uint64_t discards = 0;
};

/// Draws until a < x < b (strict), then returns (x-a)/(b-a).
template <std::invocable Draw>
  requires std::convertible_to<std::invoke_result_t<Draw&>, UnitSample>
[[nodiscard]] RescaleResult rejection_rescale(const FixWindow& window, Draw&& draw) {
  std::uint64_t discards = 0;
  for (;;) {
    const double x = UnitSample(draw()).value();
    if (window.a < x && x < window.b) {
      const double y = (x - window.a) / (window.b - window.a);
      return {UnitSample(detail::clamp_open_unit(y)), discards};
    }
    ++discards;
  }
}

}  // namespace mcfault
