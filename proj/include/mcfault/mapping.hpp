#pragma once

// Named, deterministic clock -> worker assignments.

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "mcfault/error.hpp"
#include "mcfault/rng.hpp"

namespace mcfault {

enum class MappingKind : std::uint8_t { ContiguousBlocks, RoundRobin, SeededShuffle };

inline constexpr std::array kAllMappings{MappingKind::ContiguousBlocks, MappingKind::RoundRobin,
                                         MappingKind::SeededShuffle};

// Substream used to drive the seeded shuffle; disjoint from clock and worker ids.
inline constexpr StreamId kShuffleStream{2'000'000};

[[nodiscard]] inline std::string_view mapping_name(MappingKind k) {
  switch (k) {
    case MappingKind::ContiguousBlocks: return "contiguous-blocks";
    case MappingKind::RoundRobin: return "round-robin";
    case MappingKind::SeededShuffle: return "seeded-shuffle";
  }
  return "?";
}

[[nodiscard]] inline MappingKind parse_mapping(std::string_view name) {
  for (MappingKind k : kAllMappings) {
    if (mapping_name(k) == name) return k;
  }
  throw ConfigError("unknown mapping '" + std::string(name) + "'");
}

/// Returns worker id per clock. Every worker in [0, workers) receives clocks
/// when n_clocks >= workers.
[[nodiscard]] inline std::vector<std::uint32_t> make_mapping(MappingKind kind, std::uint32_t n_clocks,
                                                             std::uint32_t workers, Seed seed) {
  if (n_clocks == 0) throw ConfigError("n_clocks must be >= 1");
  if (workers == 0) throw ConfigError("workers must be >= 1");
  std::vector<std::uint32_t> out(n_clocks);
  switch (kind) {
    case MappingKind::ContiguousBlocks:
      for (std::uint32_t i = 0; i < n_clocks; ++i) {
        out[i] = static_cast<std::uint32_t>(std::uint64_t{i} * workers / n_clocks);
      }
      break;
    case MappingKind::RoundRobin:
      for (std::uint32_t i = 0; i < n_clocks; ++i) out[i] = i % workers;
      break;
    case MappingKind::SeededShuffle: {
      // Fisher-Yates over clock ids, then deal the shuffled order round-robin.
      std::vector<std::uint32_t> order(n_clocks);
      std::iota(order.begin(), order.end(), 0U);
      GeneratorState g = substream(seed, kShuffleStream);
      for (std::uint32_t i = n_clocks - 1; i > 0; --i) {
        auto [u, next] = next_unit(g);
        g = next;
        const auto j = std::min<std::uint32_t>(static_cast<std::uint32_t>(u.value() * (i + 1)), i);
        std::swap(order[i], order[j]);
      }
      for (std::uint32_t pos = 0; pos < n_clocks; ++pos) out[order[pos]] = pos % workers;
      break;
    }
  }
  return out;
}

}  // namespace mcfault
