#pragma once

#include <cstdint>

namespace aggr {

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Counter-based generator: the n-th draw of stream `key` under `seed` is a pure
// function of (seed, key, n), so draws do not depend on iteration order or on
// how work is split across threads.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t key) noexcept
      : base_(mix64(mix64(seed) ^ (key * 0xD1B54A32D192ED03ull))) {}

  constexpr std::uint64_t next_u64() noexcept { return mix64(base_ + 0x9E3779B97F4A7C15ull * ++counter_); }

  // Uniform in [0, 1).
  constexpr double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1].
  constexpr double uniform_open0() noexcept { return 1.0 - uniform(); }

  // Uniform integer in [0, bound); bound > 0.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

}  // namespace aggr
