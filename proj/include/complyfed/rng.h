#ifndef COMPLYFED_RNG_H_
#define COMPLYFED_RNG_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace complyfed {

// Seeded random stream with a fixed, platform-independent sampling path.
//
// The raw engine is std::mt19937_64, whose output sequence is pinned by the
// standard. The standard distributions are not, so uniform, index and
// Gaussian draws are implemented here: uniforms take the top 53 bits,
// indices use rejection sampling, and normals use the Box-Muller transform
// (both variates of a pair are consumed).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform();

  // Uniform in [low, high).
  double uniform(double low, double high) { return low + (high - low) * uniform(); }

  // Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);

  // Standard normal via Box-Muller.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::span<T> values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// FNV-1a over the bytes of a string.
std::uint64_t hash_string(std::string_view text);

// Derives an independent stream seed from a parent seed and a list of
// components. Changing any component yields an unrelated stream; adding a
// new client never perturbs the seeds of others.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t component);
std::uint64_t derive_seed(std::uint64_t parent, std::string_view component);

template <typename First, typename Second, typename... Rest>
std::uint64_t derive_seed(std::uint64_t parent, First first, Second second,
                          Rest... rest) {
  return derive_seed(derive_seed(parent, first), second, rest...);
}

}  // namespace complyfed

#endif  // COMPLYFED_RNG_H_
