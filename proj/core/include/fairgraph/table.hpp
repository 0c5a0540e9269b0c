#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fairgraph/matrix.hpp"

namespace fairgraph {

// Numeric attribute table produced from a CSV file. The label column is
// pulled out of the matrix; every other column (sensitive included) is a
// matrix column.
struct AttributeTable {
  Matrix attrs;                           // N x M
  std::vector<std::string> column_names;  // size M, post-encoding
  std::size_t sensitive_idx = 0;
  std::vector<std::uint8_t> labels;       // 0 / 1 / kUnlabeled
  std::string sensitive_name;
  std::string label_name;
};

// How to interpret the CSV columns.
//
// Columns whose every cell parses as a number become numeric columns.
// Any other column is categorical and is one-hot encoded into columns named
// "<column>=<value>" with values in lexicographic order. The sensitive and
// label columns are exempt from one-hot encoding: they must map to {0, 1},
// either because the cells are already 0/1 or through the explicit value
// maps below. An empty cell in the label column means "unlabeled"; an empty
// cell anywhere else is an error.
struct TableSchema {
  std::string sensitive;
  std::string label;
  std::map<std::string, int> sensitive_map;  // raw cell -> 0/1
  std::map<std::string, int> label_map;      // raw cell -> 0/1
  std::vector<std::string> drop;             // raw columns discarded up front
};

// Reads an RFC-4180 CSV file (quoted fields, doubled quotes, embedded
// newlines inside quotes, CRLF or LF). Returns one vector of cells per
// record, header included. Throws IngestError with the offending record
// number on malformed input.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

// Loads and encodes a CSV table per the schema. Throws IngestError naming
// the row and column on missing or unmappable cells, missing schema columns,
// or unreadable files.
AttributeTable load_table(const std::string& csv_path, const TableSchema& schema);

}  // namespace fairgraph
