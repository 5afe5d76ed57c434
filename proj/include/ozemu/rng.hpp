#pragma once

#include <cstdint>
#include <random>

namespace ozemu {

/// Seedable, splittable 64-bit generator.
///
/// The engine is std::mt19937_64 seeded through std::seed_seq from
/// (seed, stream); both are fully specified by the standard, so streams are
/// identical across platforms. Real-valued draws use the top 53 bits of one
/// engine output and do not go through the implementation-defined
/// std::*_distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1p-53; }
  /// Uniform on the open interval (0, 1).
  double uniform_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1p-53; }
  /// Uniform integer on [lo, hi] (rejection sampling, unbiased).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Independent child stream; does not advance this generator.
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace ozemu
