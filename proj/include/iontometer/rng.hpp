#pragma once

#include <cstdint>
#include <initializer_list>

// Counter-based random number generation (Philox2x64-10).
//
// Every random quantity in the simulator is addressed by a (key, counter)
// pair instead of by generator state. Keys are derived from the campaign
// seed plus structural labels (point index, realization index, ...), and
// counters enumerate draws within a stream. The same (key, counter) always
// yields the same value, so results are independent of evaluation order,
// thread count, and scheduling.
namespace iontometer::rng {

namespace detail {

inline constexpr std::uint64_t philox_m = 0xD2B74407B1CE6E93ull;
inline constexpr std::uint64_t philox_w = 0x9E3779B97F4A7C15ull;

inline void philox_round(std::uint64_t& c0, std::uint64_t& c1,
                         std::uint64_t& key) {
  const unsigned __int128 prod =
      static_cast<unsigned __int128>(philox_m) * c0;
  const auto hi = static_cast<std::uint64_t>(prod >> 64);
  const auto lo = static_cast<std::uint64_t>(prod);
  c0 = hi ^ key ^ c1;
  c1 = lo;
  key += philox_w;
}

// SplitMix64 finalizer, used for key derivation only.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

} // namespace detail

/// Philox2x64-10 bijection; returns both output words.
struct Block {
  std::uint64_t w0;
  std::uint64_t w1;
};

inline Block philox(std::uint64_t key, std::uint64_t counter) {
  std::uint64_t c0 = counter;
  std::uint64_t c1 = 0xA5A5A5A5A5A5A5A5ull;
  for (int round = 0; round < 10; ++round) {
    detail::philox_round(c0, c1, key);
  }
  return {c0, c1};
}

/// Derive a stream key from a seed and a list of structural labels.
inline std::uint64_t derive_key(std::uint64_t seed,
                                std::initializer_list<std::uint64_t> labels) {
  std::uint64_t key = detail::mix64(seed);
  for (std::uint64_t label : labels) {
    key = detail::mix64(key ^ detail::mix64(label + 0x1F123BB5ull));
  }
  return key;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::uint64_t key, std::uint64_t counter) {
  return static_cast<double>(philox(key, counter).w0 >> 11) * 0x1.0p-53;
}

/// Uniform double in [0, 2*pi).
double uniform_phase(std::uint64_t key, std::uint64_t counter);

/// Standard normal deviate (Box-Muller on the two Philox output words).
double normal(std::uint64_t key, std::uint64_t counter);

} // namespace iontometer::rng
