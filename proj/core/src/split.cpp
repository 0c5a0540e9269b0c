#include "fairgraph/split.hpp"

#include <cmath>
#include <string>

#include "fairgraph/errors.hpp"
#include "fairgraph/rng.hpp"

namespace fairgraph {

Masks split_masks(const std::vector<std::uint8_t>& labels, SplitFractions f,
                  std::uint64_t seed) {
  if (f.train < 0 || f.val < 0 || f.test < 0) {
    throw ValidationError("split_masks: negative fraction");
  }
  if (f.train + f.val + f.test > 1.0 + 1e-9) {
    throw ValidationError("split_masks: fractions sum to more than 1");
  }

  std::vector<std::uint32_t> labeled;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kUnlabeled) labeled.push_back(static_cast<std::uint32_t>(i));
  }
  const auto n = static_cast<double>(labeled.size());

  Rng rng(seed);
  rng.shuffle(labeled);

  // Cumulative rounding keeps the three sizes monotone and within bounds
  // even when individual fractions do not round nicely.
  auto b1 = static_cast<std::size_t>(std::llround(f.train * n));
  auto b2 = static_cast<std::size_t>(std::llround((f.train + f.val) * n));
  auto b3 = static_cast<std::size_t>(std::llround((f.train + f.val + f.test) * n));
  if (b1 == 0 || b2 == b1 || b3 == b2) {
    throw ValidationError("split_masks: a split is empty (labeled nodes: " +
                          std::to_string(labeled.size()) + ", fractions " +
                          std::to_string(f.train) + "/" + std::to_string(f.val) + "/" +
                          std::to_string(f.test) + ")");
  }

  Masks m;
  m.train.assign(labels.size(), 0);
  m.val.assign(labels.size(), 0);
  m.test.assign(labels.size(), 0);
  for (std::size_t i = 0; i < b1; ++i) m.train[labeled[i]] = 1;
  for (std::size_t i = b1; i < b2; ++i) m.val[labeled[i]] = 1;
  for (std::size_t i = b2; i < b3; ++i) m.test[labeled[i]] = 1;
  return m;
}

}  // namespace fairgraph
