#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace grasp {

/// splitmix64 finalizer; used for seed derivation and stable hashing.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Derives an independent seed for a named sub-stream ("generate", "select:k500", ...).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view salt) noexcept;

/// Seeded random stream. Draws are implemented on top of the raw engine output
/// rather than std:: distributions so sequences are identical across standard
/// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  /// Uniform real in [0, 1).
  double uniform();

  /// Uniform real in [lo, hi].
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller.
  double normal();

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace grasp
