#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fairgraph/graph.hpp"

namespace fairgraph {

// Sidecar information a Graph itself does not carry: column names, the label
// column's name, the seed that produced the masks, and (optionally) the
// construction recipe as a serialized JSON object, echoed through untouched.
struct GraphMeta {
  std::vector<std::string> attr_names;  // size == graph.n_attrs()
  std::string label_name = "label";
  std::uint64_t seed = 0;
  std::string recipe_json;  // empty = none
};

// Writes dir/edges.tsv (one "u<TAB>v" per undirected edge, u < v, sorted),
// dir/attrs.csv (header, one node per row, label column last, unlabeled
// cells empty) and dir/meta.json (schema version, sensitive and label column
// names, seed, explicit mask id lists, recipe echo). Numbers round-trip
// exactly; rewriting the same graph yields byte-identical files.
void save_graph(const Graph& g, const GraphMeta& meta, const std::string& dir);

// Reads a directory written by save_graph. Revalidates everything through
// build_graph. Throws IngestError on missing or malformed files.
std::pair<Graph, GraphMeta> load_graph(const std::string& dir);

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

}  // namespace fairgraph
