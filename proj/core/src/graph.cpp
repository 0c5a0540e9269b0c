#include "fairgraph/graph.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "fairgraph/errors.hpp"

namespace fairgraph {

std::span<const std::uint32_t> Graph::neighbors(std::uint32_t u) const {
  if (u >= n_nodes_) {
    throw ValidationError("neighbors: node " + std::to_string(u) +
                          " out of range (n_nodes = " + std::to_string(n_nodes_) + ")");
  }
  return {col_idx_.data() + row_ptr_[u], col_idx_.data() + row_ptr_[u + 1]};
}

std::vector<double> Graph::incidence_row(std::uint32_t u) const {
  std::vector<double> row(n_nodes_, 0.0);
  for (std::uint32_t v : neighbors(u)) row[v] = 1.0;
  return row;
}

std::vector<double> Graph::concat_b(std::uint32_t u) const {
  if (u >= n_nodes_) {
    throw ValidationError("concat_b: node " + std::to_string(u) + " out of range");
  }
  std::vector<double> b;
  b.reserve(attrs_.cols() + n_nodes_);
  const double* arow = attrs_.row(u);
  b.insert(b.end(), arow, arow + attrs_.cols());
  std::vector<double> inc = incidence_row(u);
  b.insert(b.end(), inc.begin(), inc.end());
  return b;
}

namespace {

void validate_masks(const Masks& m, std::size_t n) {
  if (m.train.size() != n || m.val.size() != n || m.test.size() != n) {
    throw ValidationError("build_graph: mask length != n_nodes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    int hits = (m.train[i] ? 1 : 0) + (m.val[i] ? 1 : 0) + (m.test[i] ? 1 : 0);
    if (hits > 1) {
      throw ValidationError("build_graph: node " + std::to_string(i) +
                            " appears in more than one split mask");
    }
  }
}

}  // namespace

Graph build_graph(const EdgeList& edges, Matrix attrs, std::size_t sensitive_idx,
                  std::vector<std::uint8_t> labels, Masks masks) {
  const std::size_t n = attrs.rows();
  if (n == 0) throw ValidationError("build_graph: empty attribute matrix");
  if (sensitive_idx >= attrs.cols()) {
    throw ValidationError("build_graph: sensitive_idx " + std::to_string(sensitive_idx) +
                          " out of range (n_attrs = " + std::to_string(attrs.cols()) + ")");
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = attrs(i, sensitive_idx);
    if (s != 0.0 && s != 1.0) {
      throw ValidationError("build_graph: sensitive column not binary at node " +
                            std::to_string(i) + " (value " + std::to_string(s) + ")");
    }
  }
  if (labels.size() != n) {
    throw ValidationError("build_graph: labels length != n_nodes");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1 && labels[i] != kUnlabeled) {
      throw ValidationError("build_graph: label of node " + std::to_string(i) +
                            " is " + std::to_string(int(labels[i])) +
                            ", expected 0, 1 or unlabeled");
    }
  }
  validate_masks(masks, n);

  // Canonicalize: drop self-loops, fold both orientations onto u < v, dedup.
  EdgeList canon;
  canon.reserve(edges.size());
  for (auto [u, v] : edges) {
    if (u >= n || v >= n) {
      throw ValidationError("build_graph: edge (" + std::to_string(u) + ", " +
                            std::to_string(v) + ") has endpoint out of range");
    }
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    canon.emplace_back(u, v);
  }
  std::sort(canon.begin(), canon.end());
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

  // Count, prefix-sum, fill with per-row cursors.
  Graph g;
  g.n_nodes_ = n;
  g.n_edges_ = canon.size();
  g.row_ptr_.assign(n + 1, 0);
  for (auto [u, v] : canon) {
    ++g.row_ptr_[u + 1];
    ++g.row_ptr_[v + 1];
  }
  for (std::size_t i = 0; i < n; ++i) g.row_ptr_[i + 1] += g.row_ptr_[i];
  g.col_idx_.resize(canon.size() * 2);
  std::vector<std::uint32_t> cursor(g.row_ptr_.begin(), g.row_ptr_.end() - 1);
  for (auto [u, v] : canon) {
    g.col_idx_[cursor[u]++] = v;
    g.col_idx_[cursor[v]++] = u;
  }
  // canon is sorted by (u, v), so rows were appended in ascending order for
  // the u side; the v side arrives ascending too because u runs ascending.
  // Sort anyway to make the invariant independent of that reasoning.
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(g.col_idx_.begin() + g.row_ptr_[i], g.col_idx_.begin() + g.row_ptr_[i + 1]);
  }

  g.attrs_ = std::move(attrs);
  g.sensitive_idx_ = sensitive_idx;
  g.labels_ = std::move(labels);
  g.masks_ = std::move(masks);
  return g;
}

namespace {

std::uint64_t fnv1a_bytes(std::uint64_t h, const void* data, std::size_t len) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::uint64_t graph_fingerprint(const Graph& g) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  std::uint64_t header[4] = {g.n_nodes(), g.n_edges(), g.attrs().cols(),
                             g.sensitive_idx()};
  h = fnv1a_bytes(h, header, sizeof(header));
  h = fnv1a_bytes(h, g.row_ptr().data(), g.row_ptr().size() * sizeof(std::uint32_t));
  h = fnv1a_bytes(h, g.col_idx().data(), g.col_idx().size() * sizeof(std::uint32_t));
  h = fnv1a_bytes(h, g.attrs().data(), g.attrs().size() * sizeof(double));
  h = fnv1a_bytes(h, g.labels().data(), g.labels().size());
  h = fnv1a_bytes(h, g.masks().train.data(), g.masks().train.size());
  h = fnv1a_bytes(h, g.masks().val.data(), g.masks().val.size());
  h = fnv1a_bytes(h, g.masks().test.data(), g.masks().test.size());
  return h;
}

EdgeList undirected_edges(const Graph& g) {
  EdgeList out;
  out.reserve(g.n_edges());
  for (std::uint32_t u = 0; u < g.n_nodes(); ++u) {
    for (std::uint32_t v : g.neighbors(u)) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

}  // namespace fairgraph
