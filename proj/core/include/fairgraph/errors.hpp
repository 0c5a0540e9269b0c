#pragma once

#include <stdexcept>
#include <string>

namespace fairgraph {

// Caller handed us structurally invalid data: node ids out of range,
// non-binary sensitive column, mismatched shapes, bad fractions.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

// External input could not be read or interpreted: unreadable files,
// malformed CSV cells, missing columns, bad config keys.
class IngestError : public std::runtime_error {
 public:
  explicit IngestError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input is too large for an algorithm with a known resource envelope.
class CapacityError : public std::runtime_error {
 public:
  explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Optimization went off the rails (non-finite loss, exploding weights).
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

// A metric is undefined on the given inputs (single-class set, empty group).
class MetricError : public std::runtime_error {
 public:
  explicit MetricError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fairgraph
