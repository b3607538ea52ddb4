#pragma once

#include <cstdint>
#include <random>

namespace hopr {

/// Seeded generator wrapping std::mt19937_64 with portable derived draws.
/// The raw mt19937_64 stream is fixed by the standard, and the reductions
/// below avoid std::uniform_*_distribution, whose output is
/// implementation-defined; equal seeds give equal streams everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1).
  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; never zero, so drawn values can be stored sparsely.
  double unit_pos() { return 1.0 - unit(); }

  /// Uniform integer in [0, bound) via multiply-shift.
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(gen_()) * bound) >> 64);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace hopr
