#include "fairgraph/rng.hpp"

#include <cmath>

namespace fairgraph {
namespace {

// splitmix64 finalizer; good avalanche, cheap, stable.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

double Rng::normal(double mean, double stddev) {
  // u1 in (0, 1] so the log is finite; u2 in [0, 1).
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t index) {
  std::uint64_t h = mix64(master ^ fnv1a(tag));
  return mix64(h ^ mix64(index));
}

}  // namespace fairgraph
