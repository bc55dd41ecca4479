#pragma once

#include <cstdint>
#include <random>

namespace smbo {

/// Seeded generator with distribution code written out by hand, so a seed
/// yields the same stream on every standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();
  /// Uniform on the inclusive range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);
  /// Standard normal (Box-Muller).
  double normal();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of an independent stream identified by (master, stream).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace smbo
