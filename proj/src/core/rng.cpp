#include "gdnet/core/rng.hpp"

#include <cmath>

#include "gdnet/core/error.hpp"

namespace gdnet::core {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t SeededRng::next_u64() {
  const std::uint64_t i = counter_++;
  return splitmix64(splitmix64(seed_) ^ (i * 0xD1B54A32D192ED03ULL));
}

double SeededRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t SeededRng::below(std::uint64_t n) {
  if (n == 0) throw ContractError("SeededRng::below(0)");
  // rejection keeps the draw unbiased
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

double SeededRng::normal() {
  // Box-Muller, one value per pair of uniforms
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double SeededRng::truncated_normal(double stddev) {
  double v;
  do {
    v = normal();
  } while (v < -2.0 || v > 2.0);
  return v * stddev;
}

std::uint64_t SeededRng::poisson(double lambda) {
  if (!(lambda >= 0.0)) throw ContractError("poisson rate must be non-negative");
  if (lambda == 0.0) return 0;
  if (lambda < 10.0) {
    // Knuth multiplication method
    const double limit = std::exp(-lambda);
    std::uint64_t k = 0;
    double p = uniform();
    while (p > limit) {
      ++k;
      p *= uniform();
    }
    return k;
  }
  // PTRS transformed rejection (Hormann 1993)
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <= -lambda + k * loglam - std::lgamma(k + 1.0))
      return static_cast<std::uint64_t>(k);
  }
}

SeededRng SeededRng::fork(std::uint64_t stream) const {
  return SeededRng(splitmix64(seed_ ^ splitmix64(stream + 0x632BE59BD9B4E019ULL)));
}

SeededRng SeededRng::fork(std::string_view name) const { return fork(hash_name(name)); }

}  // namespace gdnet::core
