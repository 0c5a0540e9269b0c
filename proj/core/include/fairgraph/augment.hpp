#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fairgraph/graph.hpp"
#include "fairgraph/rng.hpp"

namespace fairgraph {

// Per-epoch augmentation parameters. `seed` is the stream root; every epoch
// and purpose derives its own substream, so view generation is reproducible
// and independent of anything else that consumes randomness.
struct AugmentConfig {
  double attr_noise_prob = 0.1;   // per node and non-sensitive attribute
  double edge_drop_prob = 0.001;  // per undirected edge
  double noise_stddev = 1.0;
  std::uint64_t seed = 0;
};

enum class ViewKind { noisy, counterfactual };

// A perturbed copy of the trainable surface of a graph: an attribute matrix
// plus an adjacency in CSR form.
struct View {
  Matrix attrs;
  std::vector<std::uint32_t> row_ptr;
  std::vector<std::uint32_t> col_idx;
  ViewKind kind = ViewKind::noisy;

  std::span<const std::uint32_t> neighbors(std::uint32_t u) const {
    return {col_idx.data() + row_ptr[u], col_idx.data() + row_ptr[u + 1]};
  }
};

struct ViewPair {
  View noisy;
  View counterfactual;
};

// Adds mask * Normal(0, stddev^2) noise to every non-sensitive entry, where
// the mask is a fresh Bernoulli(noise_prob) draw per entry. The sensitive
// column is copied through untouched.
Matrix perturb_attributes(const Matrix& attrs, std::size_t sensitive_idx,
                          double noise_prob, double stddev, Rng& rng);

// Returns a copy with the sensitive column flipped 0 <-> 1. An involution.
// Throws ValidationError if the column holds anything but 0 or 1.
Matrix flip_sensitive(const Matrix& attrs, std::size_t sensitive_idx);

// Removes each undirected edge with probability drop_prob; both directions
// go together, so the result stays symmetric.
std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> drop_edges(
    const Graph& g, double drop_prob, Rng& rng);

// Builds the two training views for one epoch: a noisy view (attribute noise
// plus edge dropping) and a counterfactual view (sensitive column flipped on
// the original attributes, original adjacency). `attrs` is the matrix the
// model actually consumes, which may differ from g.attrs() when features are
// rescaled for training.
ViewPair make_views(const Graph& g, const Matrix& attrs, const AugmentConfig& cfg,
                    std::uint64_t epoch);

// Convenience: views over the graph's own attribute matrix.
ViewPair make_views(const Graph& g, const AugmentConfig& cfg, std::uint64_t epoch);

}  // namespace fairgraph
