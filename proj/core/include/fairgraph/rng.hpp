#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fairgraph {

// Deterministic random stream. The engine is std::mt19937_64 (bit-exact by
// the standard); every distribution below is built by hand from raw 64-bit
// draws so sequences do not depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1), 53 bits of mantissa.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Box-Muller, one value per call. The paired cosine/sine value is
  // discarded to keep the draw count per event fixed.
  double normal(double mean = 0.0, double stddev = 1.0);

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform index in [0, n). Modulo bias is < n / 2^64, far below anything
  // observable at the scales this library works with.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(next_u64() % static_cast<std::uint64_t>(n));
  }

  // Fisher-Yates, back to front.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      std::size_t j = uniform_index(i + 1);
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Derives an independent stream seed from a master seed, a purpose tag and
// an optional index (for example an epoch number). Identical inputs give
// identical seeds; distinct tags give unrelated streams.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t index = 0);

}  // namespace fairgraph
