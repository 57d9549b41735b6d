#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace sik {

// std::mt19937_64 output is fixed by the standard; the distributions in
// <random> are not, so the helpers below are written out to keep fitted
// models identical across standard libraries.
using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Seed of the stream owned by item `index` (a partitioning, a grid point)
/// under the run seed `seed`: mix64(seed ^ mix64(index)).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(seed ^ mix64(index));
}

namespace detail {
__extension__ using u128 = unsigned __int128;
}  // namespace detail

/// Uniform integer in [0, bound), bound > 0. Lemire's multiply-and-reject.
inline std::uint64_t uniform_below(Engine& rng, std::uint64_t bound) {
  detail::u128 m = static_cast<detail::u128>(rng()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<detail::u128>(rng()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Standard normal deviate (Box-Muller, one value per call).
inline double standard_normal(Engine& rng) {
  double u1 = uniform_unit(rng);
  while (u1 <= 0.0) u1 = uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace sik
