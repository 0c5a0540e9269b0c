#pragma once

#include <cstdint>
#include <string>

#include "fairgraph/metrics.hpp"
#include "fairgraph/model.hpp"

namespace fairgraph {

struct RunMetadata {
  std::string dataset;  // graph directory, or "synthetic:<params>"
  std::uint64_t graph_fingerprint = 0;
  std::uint64_t seed = 0;  // master run seed
};

// Full evaluation report as a pretty-printed JSON document: schema version,
// resolved configuration echo, metrics, bound diagnostics and counts. Keys
// are sorted and numbers render shortest-round-trip, so identical inputs
// serialize byte for byte.
std::string report_to_json(const MetricsReport& r, const TrainConfig& train_cfg,
                           const EvalConfig& eval_cfg, const RunMetadata& meta);

// One JSON object per epoch, newline-terminated.
std::string training_log_jsonl(const TrainResult& result);

// Flat row for sweep/ablation aggregation.
std::string report_csv_header();
std::string report_csv_row(const MetricsReport& r, const TrainConfig& train_cfg,
                           std::uint64_t seed);

}  // namespace fairgraph
