#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace cfgtn {

/// Default seed used by the CLI when --seed is not given.
inline constexpr std::uint64_t kDefaultSeed = 42;

/// SplitMix64 finalizer; bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

/// Seed of substream `index` under `seed`. Distinct indices give independent
/// streams, and the mapping does not depend on the order substreams are used.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Deterministic random stream. Variates are generated by hand from the raw
/// 64-bit engine output so streams are identical across standard libraries.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  /// Unit-rate exponential.
  double exponential();
  /// Gamma(shape, 1), Marsaglia-Tsang.
  double gamma(double shape);
  double chi_squared(double dof);
  /// Index drawn with probabilities proportional to weights.
  std::size_t categorical(std::span<const double> weights);
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace cfgtn
