#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairgraph/augment.hpp"
#include "fairgraph/graph.hpp"
#include "fairgraph/model.hpp"

namespace fairgraph {

// Ranking quality of the scores over the masked nodes, computed from
// midranks so tied scores contribute 1/2 per tied pair. Throws MetricError
// when the mask holds only one class, naming both class counts.
double auroc(const std::vector<double>& scores,
             const std::vector<std::uint8_t>& labels, const Mask& mask);

// Binary F1 of the positive class; defined as 0 when precision + recall
// is 0. Throws MetricError on an empty mask.
double f1_score(const std::vector<std::uint8_t>& preds,
                const std::vector<std::uint8_t>& labels, const Mask& mask);

// | P(pred=1 | group 0) - P(pred=1 | group 1) | over the masked nodes.
// Throws MetricError when either group is empty, reporting both sizes.
double statistical_parity(const std::vector<std::uint8_t>& preds,
                          const std::vector<std::uint8_t>& group, const Mask& mask);

// | P(pred=1 | label=1, group 0) - P(pred=1 | label=1, group 1) |.
// Throws MetricError when either group has no positive-labeled node.
double equal_opportunity(const std::vector<std::uint8_t>& preds,
                         const std::vector<std::uint8_t>& labels,
                         const std::vector<std::uint8_t>& group, const Mask& mask);

// The graph's sensitive column as a 0/1 vector.
std::vector<std::uint8_t> sensitive_groups(const Graph& g);

// Percentage of test nodes whose predicted label changes when the sensitive
// attribute is flipped for every node in one pass (the node's own flip plus
// its neighbors'). Adjacency and weights stay fixed.
double unfairness(NiftyModel& m, const Graph& g);

// Exact per-node variant: flips one node at a time and checks only that
// node's prediction. One forward pass per test node, so it is capped at
// graphs of 2000 nodes.
double unfairness_per_node(NiftyModel& m, const Graph& g);

// Percentage of test nodes whose predicted label changes when attribute
// noise drawn by the training law is applied (in model space, adjacency
// fixed), averaged over n_trials independent draws. The evaluation stream
// is derived from `seed` and independent of training randomness.
double instability(NiftyModel& m, const Graph& g, const AugmentConfig& noise,
                   int n_trials, std::uint64_t seed);

struct MetricCounts {
  std::size_t n_test = 0;
  std::size_t n_test_pos = 0;
  std::size_t n_test_neg = 0;
  std::size_t group0 = 0;
  std::size_t group1 = 0;
  std::size_t group0_pos = 0;
  std::size_t group1_pos = 0;
};

struct EvalConfig {
  // Noise law for instability and the bound check; its seed field is
  // ignored, evaluation streams derive from `seed` below.
  AugmentConfig noise;
  int n_trials = 1;
  std::size_t bound_samples = 200;
  bool per_node_unfairness = false;
  std::uint64_t seed = 1;
};

struct MetricsReport {
  double auroc = 0.0;
  double f1 = 0.0;
  double unfairness_pct = 0.0;
  double instability_pct = 0.0;
  double delta_sp = 0.0;
  double delta_eo = 0.0;
  BoundReport bound;
  MetricCounts counts;
};

// All six metrics plus the bound diagnostic in one pass, evaluated over the
// test mask. Deterministic given cfg.seed.
MetricsReport evaluate(NiftyModel& m, const Graph& g, const EvalConfig& cfg);

}  // namespace fairgraph
