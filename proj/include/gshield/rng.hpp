#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace gshield {

/// SplitMix64 finalizer. Used to decorrelate derived seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// FNV-1a over bytes; stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Seed of the independent stream identified by (seed, tag, index).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                                    std::uint64_t index = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ tag) + index);
}

/// Stream tags. Each consumer of randomness owns one so streams never alias.
namespace stream {
inline constexpr std::uint64_t kFilterTopology = 0x1001;
inline constexpr std::uint64_t kFilterFeature = 0x1002;
inline constexpr std::uint64_t kSampleRandom = 0x2001;
inline constexpr std::uint64_t kTopologyClusters = 0x2002;
inline constexpr std::uint64_t kTopologyDraw = 0x2003;
inline constexpr std::uint64_t kFeatureMask = 0x2004;
inline constexpr std::uint64_t kTrigger = 0x3001;
inline constexpr std::uint64_t kInject = 0x3002;
inline constexpr std::uint64_t kPoison = 0x3003;
inline constexpr std::uint64_t kAttackSet = 0x3004;
inline constexpr std::uint64_t kDataset = 0x4001;
inline constexpr std::uint64_t kSplit = 0x4002;
inline constexpr std::uint64_t kDefense = 0x4003;
inline constexpr std::uint64_t kVictim = 0x4004;
}  // namespace stream

/// Deterministic random source. All bounded draws are implemented here
/// instead of with <random> distributions, whose output is
/// implementation-defined, so results are identical across standard
/// libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_below(std::uint64_t bound);

  /// Uniform real in [0, 1) with 53 bits of precision.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Standard normal via Box-Muller.
  double normal(double mean = 0.0, double stddev = 1.0);

  /// k distinct values from [0, n) in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n,
                                                      std::size_t k);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = uniform_below(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gshield
