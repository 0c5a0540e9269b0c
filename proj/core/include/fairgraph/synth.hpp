#pragma once

#include <cstdint>

#include "fairgraph/graph.hpp"
#include "fairgraph/split.hpp"

namespace fairgraph {

// Two-cluster synthetic dataset with a controllable fairness problem baked
// in. Labels are balanced coin flips; non-sensitive attributes are Gaussian
// clusters around per-class means. Each attribute has standard deviation
// attr_scale, and the class means sit cluster_separation noise units apart,
// so the classification difficulty depends only on cluster_separation while
// attr_scale fixes the physical units the encoder sees. The sensitive bit
// is a noisy threshold readout of the attributes' class-signal direction,
// calibrated so it agrees with the label with probability (1 + bias) / 2,
// so corr(s, y) ~ bias; when the requested correlation exceeds what the
// attribute signal supports, the remainder is drawn from the label
// directly. Deriving the bit from the attributes makes it (mostly)
// redundant for prediction, like a protected attribute that other features
// already encode: an accurate classifier that ignores it exists, yet it
// stays the single most label-correlated column. Edges appear within a
// sensitive group with a base probability and across groups with that
// probability scaled by (1 - homophily).
struct SynthConfig {
  std::size_t n_nodes = 1000;
  std::size_t n_attrs = 20;  // non-sensitive columns; the sensitive bit is appended last
  double homophily = 0.8;
  double bias = 0.8;
  std::uint64_t seed = 1;
  double expected_degree = 10.0;
  double cluster_separation = 2.6;
  // Per-attribute standard deviation. Raw-feature units (> 1) by default:
  // they put the trained weight norms near where the per-epoch
  // renormalization holds them, so that constraint stays gentle instead of
  // fighting the optimizer every step.
  double attr_scale = 3.0;
  // Sparse labels by default: node classification on graphs is usually
  // semi-supervised, with far fewer labeled nodes than test nodes.
  SplitFractions split{0.1, 0.1, 0.8};
};

// Deterministic in every field of the config. Throws ValidationError on
// n_nodes < 10, n_attrs < 1, homophily/bias outside [0, 1], negative
// cluster_separation, or non-positive attr_scale.
Graph synth_dataset(const SynthConfig& cfg);

// Shorthand used all over the tests.
Graph synth_dataset(std::size_t n_nodes, std::size_t n_attrs, double homophily,
                    double bias, std::uint64_t seed);

}  // namespace fairgraph
