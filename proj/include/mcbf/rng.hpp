#pragma once

#include <cstdint>
#include <random>

#include "mcbf/types.hpp"

namespace mcbf {

/// Independent random streams derived from one experiment seed. Each consumer
/// draws from its own stream so that, e.g., changing the number of
/// coordinate-schedule draws never perturbs the channels.
enum class Stream : std::uint64_t {
  instance = 1,  // channel generation
  init = 2,      // feasible-initializer perturbations
  schedule = 3,  // coordinate sampling; sub-index = MM iteration
};

/// Seeded generator over std::mt19937_64, whose output sequence is fixed by
/// the standard. Uniform, integer and Gaussian draws are derived here rather
/// than through <random> distributions, which are implementation-defined and
/// would break cross-platform reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// seed' = splitmix64(seed ^ splitmix64(tag) ^ splitmix64(index + (tag << 32))).
  static Rng stream(std::uint64_t seed, Stream tag, std::uint64_t index = 0);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), unbiased (bound > 0).
  std::uint64_t below(std::uint64_t bound);

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

  /// Circularly-symmetric complex Gaussian CN(0, variance).
  Complex complex_normal(double variance);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace mcbf
