#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairgraph/graph.hpp"
#include "fairgraph/split.hpp"
#include "fairgraph/table.hpp"

namespace fairgraph {

// Recipe for turning a tabular dataset into a graph: connect every pair of
// rows whose attribute similarity reaches a fraction of the maximum pairwise
// similarity observed in the table.
struct SimilarityConfig {
  double threshold_fraction = 0.8;   // edge iff sim >= fraction * max sim
  double minkowski_p = 2.0;
  std::vector<std::string> exclude;  // column names left out of the distance
  bool standardize = false;          // z-score columns before the distance
  std::uint64_t seed = 0;            // drives the train/val/test split
  SplitFractions split;
  std::size_t max_nodes = 50000;     // guard: the build is O(N^2) in time
  unsigned n_threads = 0;            // 0 = FAIRGRAPH_THREADS or hardware
};

// 1 / (1 + minkowski_p distance); 1 for identical vectors, falls toward 0
// as rows move apart.
double similarity(std::span<const double> x, std::span<const double> y, double p);

// Builds the graph over table rows. The label column never participates in
// the distance (it is not part of the table matrix); the sensitive column
// participates unless listed in `exclude`. The edge set is identical no
// matter how many threads run. Emits a warning to stderr when the threshold
// connects every pair (typically: identical rows). Throws CapacityError when
// the table exceeds max_nodes and ValidationError on bad parameters.
Graph build_similarity_graph(const AttributeTable& table, const SimilarityConfig& cfg);

// Worker count for parallel sections: explicit value, else the
// FAIRGRAPH_THREADS environment variable, else hardware concurrency.
unsigned resolve_thread_count(unsigned requested);

}  // namespace fairgraph
