#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "mcfault/pipeline.hpp"
#include "mcfault/rng.hpp"

namespace mcfault::testing {

// Pre-registered seeds for every calibration and power claim. Generated once
// as mix64(1000 + i), i = 0..99 (tests/oracles/mix64_oracle.py), and frozen
// here so that statistical acceptance is a deterministic regression test.
inline constexpr std::array<std::uint64_t, 100> kPreregisteredSeeds{
    0x3C1EBA8B4DCCC148ULL, 0x533E00F7F3C606D4ULL, 0xEEFA317FAC7AB8FDULL, 0x9A989360446679B8ULL,
    0xC8E28BFE16044686ULL, 0xEE73B213DFD00283ULL, 0x73107157F961EA45ULL, 0xE637BB4C9E7D0985ULL,
    0xEECA0D1638D4FF44ULL, 0x927F2452D4B0258AULL, 0x5267207749D7D891ULL, 0x7D58D2344464BD8EULL,
    0x103269E656FB174CULL, 0x2F61324E2880D25CULL, 0xA05955C9267C7F5FULL, 0xACD6640CD844B3DBULL,
    0xE4EF795FF906FDCEULL, 0x5982B57817B1014FULL, 0x3D836A4CEFE2D32CULL, 0x5FFDC18818799A51ULL,
    0x685FEE6DB9884765ULL, 0xAB1B255251AABB9FULL, 0x99803E79206B9DE2ULL, 0xC99070D0B823C1BFULL,
    0x4426ACBA529F17CCULL, 0x98FD4A3EBA5761F5ULL, 0xD75AB635202FF869ULL, 0xFE7F4D1F11DAC5E8ULL,
    0xE3A920EFC4409C42ULL, 0xBD6F06C9DA178CC3ULL, 0x1416B2FC5E794939ULL, 0x5B45A4A7152F9B41ULL,
    0x68D7A2CE8EBA591CULL, 0x6E1AD258BB59A39BULL, 0x0DD281CA0FC8F793ULL, 0x012BD79C680791AEULL,
    0x6FBEA466B13FCE84ULL, 0x61C223B280FF955CULL, 0xF63D542F42B063DAULL, 0xDF88318C88CC5FE2ULL,
    0x42E7CDB2A969552BULL, 0x4259010126B363D2ULL, 0x95F9F779259E6B9DULL, 0x2281577824742403ULL,
    0x72C54FF1213DC704ULL, 0xBDE303994CED506CULL, 0xB33DCF8EFFA47CF5ULL, 0xB863155FBD1DCDD8ULL,
    0x0048F2705BC4D5B6ULL, 0x152E02B4E1F4242BULL, 0x430BB5C3F4DBB47FULL, 0x245E348F43A15722ULL,
    0x3157E9983E1FC466ULL, 0xCAB118D821BB9AA6ULL, 0xE1567980D4FA8F8BULL, 0xAE86D5CEC2A14189ULL,
    0x869F3ABB4CEFEC49ULL, 0xCCA9800F0AB9747EULL, 0x42A52743D79C8262ULL, 0x9D8923457D5C5A89ULL,
    0x16438B61C2BCBCF9ULL, 0xF6219C679737EE92ULL, 0x1C3FB7CCDAC367E5ULL, 0x497D6EBD6E3A4E28ULL,
    0x1CF2D5BEC4F57509ULL, 0x7538C866B5B5E5E8ULL, 0x1780692CB30979B2ULL, 0x637F3A941B361532ULL,
    0xDE46DC4874992D17ULL, 0x97629500787D9C76ULL, 0x0FF65A881D6404C3ULL, 0x941605CC9FEB6AF7ULL,
    0x87A6132DA17F1747ULL, 0x03AAD6FF044A4744ULL, 0x4F159B33563AC4D6ULL, 0x9C8F1CD4736D2BEEULL,
    0xA6DA9AD6BF6BCECCULL, 0xC420CB611C3B194CULL, 0x55DEDC29689DA895ULL, 0x61D8DE0ED31C45D5ULL,
    0x3F04A5B3F14ED072ULL, 0x8A135B10BD1F3EA5ULL, 0x312E9ED8C44F5C1DULL, 0xE5A087068B116D77ULL,
    0x304B1130AB09C593ULL, 0x8AF039BF654BA0FAULL, 0x72EA674E476CC758ULL, 0xDFDF1B603F2678A9ULL,
    0x41523D23B2479C6AULL, 0xDD7AEEBDDD8099AFULL, 0x3DFA037D4BDAFB49ULL, 0x46932D98E96F7DADULL,
    0xDB26FF4783C35ACDULL, 0x47D25CCD1E09AA34ULL, 0x5C2E168FC740D9E6ULL, 0x4466F3A946FD1384ULL,
    0x0E29247A7FD7374CULL, 0xFC62792DC80161D0ULL, 0x7C4D83C2D2648A22ULL, 0x45B8CA48009B2B66ULL,
};

/// Degenerate source that always yields the same value.
class ConstantSource {
 public:
  explicit ConstantSource(double v) : value_(v) {}
  UnitSample next() {
    ++draws_;
    return value_;
  }
  [[nodiscard]] std::uint64_t draws() const noexcept { return draws_; }

 private:
  UnitSample value_;
  std::uint64_t draws_ = 0;
};

/// Plays back a fixed list, cycling when exhausted.
class ScriptedSource {
 public:
  explicit ScriptedSource(std::vector<double> values) : values_(std::move(values)) {}
  UnitSample next() {
    const double v = values_[draws_ % values_.size()];
    ++draws_;
    return UnitSample(v);
  }
  [[nodiscard]] std::uint64_t draws() const noexcept { return draws_; }

 private:
  std::vector<double> values_;
  std::uint64_t draws_ = 0;
};

static_assert(UnitSource<ConstantSource>);
static_assert(UnitSource<ScriptedSource>);

inline const double kInvE = std::exp(-1.0);

}  // namespace mcfault::testing
