#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fairgraph/matrix.hpp"

namespace fairgraph {

// Node labels are 0/1; this sentinel marks a node with no label.
inline constexpr std::uint8_t kUnlabeled = 255;

using Mask = std::vector<std::uint8_t>;
using EdgeList = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

struct Masks {
  Mask train;
  Mask val;
  Mask test;
};

// Undirected attributed graph in CSR form. Both directions of every edge are
// stored, so col_idx.size() == 2 * n_edges. Immutable once built; use
// build_graph to construct and validate one.
class Graph {
 public:
  std::size_t n_nodes() const { return n_nodes_; }
  std::size_t n_edges() const { return n_edges_; }

  const std::vector<std::uint32_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::uint32_t>& col_idx() const { return col_idx_; }

  // Neighbor ids of u, ascending.
  std::span<const std::uint32_t> neighbors(std::uint32_t u) const;

  const Matrix& attrs() const { return attrs_; }
  std::size_t n_attrs() const { return attrs_.cols(); }
  std::size_t sensitive_idx() const { return sensitive_idx_; }
  const std::vector<std::uint8_t>& labels() const { return labels_; }
  const Masks& masks() const { return masks_; }

  std::size_t degree(std::uint32_t u) const {
    return row_ptr_[u + 1] - row_ptr_[u];
  }

  // Row u of the adjacency matrix as a dense 0/1 vector of length n_nodes.
  std::vector<double> incidence_row(std::uint32_t u) const;

  // Attribute row of u followed by its incidence row; length M + N. This is
  // the per-node input vector the stability analysis reasons about.
  std::vector<double> concat_b(std::uint32_t u) const;

 private:
  friend Graph build_graph(const EdgeList&, Matrix, std::size_t,
                           std::vector<std::uint8_t>, Masks);
  Graph() = default;

  std::size_t n_nodes_ = 0;
  std::size_t n_edges_ = 0;
  std::vector<std::uint32_t> row_ptr_;
  std::vector<std::uint32_t> col_idx_;
  Matrix attrs_;
  std::size_t sensitive_idx_ = 0;
  std::vector<std::uint8_t> labels_;
  Masks masks_;
};

// Builds a validated graph from an arbitrary edge list. The list may contain
// self-loops (dropped), duplicates and both orientations (collapsed); the
// result stores each surviving edge in both directions with sorted neighbor
// lists. Throws ValidationError on out-of-range endpoints, a non-binary
// sensitive column, labels outside {0, 1, kUnlabeled}, mask length or overlap
// problems, or a sensitive index out of range.
Graph build_graph(const EdgeList& edges, Matrix attrs, std::size_t sensitive_idx,
                  std::vector<std::uint8_t> labels, Masks masks);

// Order-independent content hash; two graphs with identical structure,
// attributes, labels and masks hash identically. Used by determinism checks.
std::uint64_t graph_fingerprint(const Graph& g);

// Sorted (u, v) pairs with u < v, one per undirected edge.
EdgeList undirected_edges(const Graph& g);

}  // namespace fairgraph
