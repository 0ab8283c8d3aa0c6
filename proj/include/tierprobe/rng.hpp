#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

namespace tierprobe {

/// Seeded pseudo-random source used for every stochastic step (splits, label
/// permutations, MLP initialization, synthetic data).
///
/// The raw engine is std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. The distributions on top of it are implemented here rather
/// than taken from <random>, because the standard library distributions are
/// not required to produce the same values across implementations.
class Rng {
 public:
  /// Identifier recorded in run manifests. Bump the version suffix whenever
  /// any derived distribution below changes.
  static constexpr std::string_view kAlgorithm = "mt19937_64/fisher-yates/splitmix-substreams/v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t uniform_below(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal draw (Box-Muller; the second value of each pair is cached).
  double normal();

  /// In-place Fisher-Yates shuffle, from the last element down.
  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_below(i));
      using std::swap;
      swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer; a bijective 64-bit mix.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for the `index`-th independent substream of `base`. Substream i does
/// not depend on how many other substreams are drawn, so parallel and serial
/// consumers see identical draws.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept;

}  // namespace tierprobe
