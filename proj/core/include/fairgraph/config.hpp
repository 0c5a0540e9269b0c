#pragma once

#include <cstdint>
#include <string>

#include "fairgraph/metrics.hpp"
#include "fairgraph/model.hpp"
#include "fairgraph/synth.hpp"

namespace fairgraph {

// Where the experiment's graph comes from: a directory written by the graph
// builder, or the synthetic generator.
struct DatasetConfig {
  bool is_synth = false;
  std::string graph_dir;
  SynthConfig synth;
};

// One experiment = dataset + training recipe + evaluation recipe + a master
// seed that every random stream derives from.
struct ExperimentConfig {
  DatasetConfig dataset;
  TrainConfig train;
  EvalConfig eval;
  std::uint64_t seed = 1;
  std::string output_dir = ".";
};

// Parses a JSON config. Unknown keys are errors (typos must not silently
// fall back to defaults); missing keys take the documented defaults. The
// master seed is copied into the train/eval/synth sub-configs, and the
// evaluation noise law defaults to the training augmentation values unless
// overridden. `origin` names the source in error messages.
ExperimentConfig parse_experiment_config(const std::string& json_text,
                                         const std::string& origin);
ExperimentConfig load_experiment_config(const std::string& path);

// Full resolved form; parsing it back yields an identical config.
std::string experiment_config_to_json(const ExperimentConfig& cfg);

}  // namespace fairgraph
