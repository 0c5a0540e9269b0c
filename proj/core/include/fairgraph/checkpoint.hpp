#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairgraph/adam.hpp"
#include "fairgraph/model.hpp"

namespace fairgraph {

// Versioned JSON snapshot of a model: architecture, every parameter, the
// batchnorm running statistics and the input scaler, plus the optimizer
// moments when one is supplied (so training can resume exactly).
void save_checkpoint(const std::string& path, NiftyModel& model,
                     const Adam* optimizer = nullptr);

struct LoadedCheckpoint {
  NiftyModel model;
  bool has_optimizer = false;
  std::int64_t adam_t = 0;
  std::vector<Matrix> adam_m;  // parameter order, matching model.parameters()
  std::vector<Matrix> adam_v;
};

// Rebuilds the model (and optimizer state when present). Throws IngestError
// on malformed files, unknown versions, or shape mismatches.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace fairgraph
