#pragma once

#include <cstdint>
#include <vector>

#include "fairgraph/graph.hpp"

namespace fairgraph {

struct SplitFractions {
  double train = 0.5;
  double val = 0.2;
  double test = 0.3;
};

// Assigns every labeled node (label != kUnlabeled) to exactly one of
// train/val/test by a seeded shuffle. Split sizes come from cumulative
// rounding of the fractions over the labeled count, so they are stable and
// sum correctly. Unlabeled nodes are left out of all three masks.
// Throws ValidationError on bad fractions or when any split ends up empty.
Masks split_masks(const std::vector<std::uint8_t>& labels, SplitFractions fractions,
                  std::uint64_t seed);

}  // namespace fairgraph
