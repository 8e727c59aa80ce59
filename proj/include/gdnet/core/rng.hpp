#pragma once

#include <cstdint>
#include <string_view>

namespace gdnet::core {

/// Counter-based generator: draw i is a pure function of (seed, i), so a
/// stream is reproducible bit for bit on any platform with IEEE doubles.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed = 0) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return counter_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Truncated to [-2, 2] standard deviations.
  double truncated_normal(double stddev);
  std::uint64_t poisson(double lambda);

  /// Independent child stream, keyed by an integer or a name.
  SeededRng fork(std::uint64_t stream) const;
  SeededRng fork(std::string_view name) const;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_name(std::string_view name);

}  // namespace gdnet::core
