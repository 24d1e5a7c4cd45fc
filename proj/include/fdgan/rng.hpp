#pragma once
// Deterministic random streams.
//
// Everything reproducible in this project flows through RngStream: an
// mt19937_64 whose raw 64-bit output is specified by the C++ standard,
// turned into doubles with fixed arithmetic (no std::distribution objects,
// whose sequences vary across standard libraries). Same seed => bitwise
// identical streams on every platform.
//
// Box-Muller consumes exactly two uniforms per normal draw (the sine branch
// is discarded) so the stream position never depends on call history.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace fdgan {

class RngStream {
 public:
  // stream_id selects decorrelated substreams of one experiment seed
  // (training vs evaluation draws must not perturb each other).
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : engine_(mix(seed + 0x9E3779B97F4A7C15ull * (stream_id + 1))) {}

  // Uniform on (0, 1]: 53 random bits, never exactly 0 so log() is safe.
  double uniform() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (cosine branch only). The (0,1] uniform
  // bounds the result to about 8.6 sigma, so draws are always finite.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev) {
    return mean + stddev * normal();
  }

  // Index draw proportional to the given nonnegative weights.
  std::size_t categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double x = uniform() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      x -= weights[i];
      if (x <= 0.0) return i;
    }
    return weights.empty() ? 0 : weights.size() - 1;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  // splitmix64 finalizer: decorrelates nearby seeds before seeding the engine.
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 engine_;
};

}  // namespace fdgan
