#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace cohort {

/// Seeded generator with platform-stable output. The engine is mt19937_64,
/// whose sequence the standard fixes. Standard library distributions differ
/// between implementations, so the ones below are hand-rolled.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound). `bound` must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform integer in [lo, hi], inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  bool coin(double p_true) { return uniform01() < p_true; }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

  /// Chi-square with `df` degrees of freedom as a sum of squared normals.
  double chi_square(int df);

  /// `k` distinct indices from [0, n) in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cohort
