#include "fairgraph/similarity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "fairgraph/errors.hpp"
#include "fairgraph/rng.hpp"

namespace fairgraph {

namespace {

double minkowski(const double* x, const double* y, std::size_t d, double p) {
  if (p == 2.0) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double t = x[j] - y[j];
      s += t * t;
    }
    return std::sqrt(s);
  }
  if (p == 1.0) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += std::fabs(x[j] - y[j]);
    return s;
  }
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) s += std::pow(std::fabs(x[j] - y[j]), p);
  return std::pow(s, 1.0 / p);
}

}  // namespace

double similarity(std::span<const double> x, std::span<const double> y, double p) {
  if (x.size() != y.size()) throw ValidationError("similarity: length mismatch");
  if (!(p > 0.0)) throw ValidationError("similarity: p must be positive");
  return 1.0 / (1.0 + minkowski(x.data(), y.data(), x.size(), p));
}

unsigned resolve_thread_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FAIRGRAPH_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

Graph build_similarity_graph(const AttributeTable& table, const SimilarityConfig& cfg) {
  const std::size_t n = table.attrs.rows();
  if (n < 2) throw ValidationError("build_similarity_graph: need at least 2 rows");
  if (n > cfg.max_nodes) {
    throw CapacityError("build_similarity_graph: " + std::to_string(n) +
                        " rows exceeds max_nodes " + std::to_string(cfg.max_nodes) +
                        "; the pairwise pass is O(N^2)");
  }
  if (!(cfg.minkowski_p > 0.0)) {
    throw ValidationError("build_similarity_graph: minkowski_p must be positive");
  }
  if (!(cfg.threshold_fraction > 0.0) || cfg.threshold_fraction > 1.0) {
    throw ValidationError("build_similarity_graph: threshold_fraction must be in (0, 1]");
  }

  // Columns taking part in the distance.
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < table.column_names.size(); ++c) {
    const std::string& name = table.column_names[c];
    if (std::find(cfg.exclude.begin(), cfg.exclude.end(), name) == cfg.exclude.end()) {
      cols.push_back(c);
    }
  }
  for (const auto& name : cfg.exclude) {
    if (std::find(table.column_names.begin(), table.column_names.end(), name) ==
        table.column_names.end()) {
      throw IngestError("build_similarity_graph: excluded column '" + name +
                        "' does not exist");
    }
  }
  if (cols.empty()) {
    throw ValidationError("build_similarity_graph: every column excluded");
  }

  // Compact copy of the distance columns, optionally z-scored. A constant
  // column has no spread to standardize, so it is zeroed (it contributes
  // nothing to any distance either way).
  const std::size_t d = cols.size();
  Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, j) = table.attrs(i, cols[j]);
  if (cfg.standardize) {
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double t = x(i, j) - mean;
        var += t * t;
      }
      var /= static_cast<double>(n);
      double sd = std::sqrt(var);
      if (sd < 1e-12) {
        for (std::size_t i = 0; i < n; ++i) x(i, j) = 0.0;
      } else {
        for (std::size_t i = 0; i < n; ++i) x(i, j) = (x(i, j) - mean) / sd;
      }
    }
  }

  const double p = cfg.minkowski_p;
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_thread_count(cfg.n_threads), n));

  // Rows are dealt to threads in contiguous blocks. Every pair (i, j), i < j,
  // belongs to the block of its i, so pass results merge back in block order
  // and the outcome is independent of the worker count.
  std::vector<std::pair<std::size_t, std::size_t>> blocks;
  {
    // Balance work: row i owns (n - 1 - i) pairs, so early rows are heavy.
    // Use many small blocks and let threads pull them off a shared counter.
    const std::size_t block_rows = std::max<std::size_t>(1, n / (workers * 8u + 1u));
    for (std::size_t b = 0; b < n; b += block_rows) {
      blocks.emplace_back(b, std::min(n, b + block_rows));
    }
  }

  auto run_blocks = [&](auto&& fn) {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t b = next.fetch_add(1);
          if (b >= blocks.size()) return;
          fn(b);
        }
      });
    }
    for (auto& t : pool) t.join();
  };

  // Pass 1: maximum pairwise similarity.
  std::vector<double> block_max(blocks.size(), 0.0);
  run_blocks([&](std::size_t b) {
    double best = 0.0;
    for (std::size_t i = blocks[b].first; i < blocks[b].second; ++i) {
      const double* xi = x.row(i);
      for (std::size_t j = i + 1; j < n; ++j) {
        double s = 1.0 / (1.0 + minkowski(xi, x.row(j), d, p));
        if (s > best) best = s;
      }
    }
    block_max[b] = best;
  });
  const double max_sim = *std::max_element(block_max.begin(), block_max.end());
  const double threshold = cfg.threshold_fraction * max_sim;

  // Pass 2: collect edges per block, then concatenate in block order.
  std::vector<EdgeList> block_edges(blocks.size());
  run_blocks([&](std::size_t b) {
    EdgeList local;
    for (std::size_t i = blocks[b].first; i < blocks[b].second; ++i) {
      const double* xi = x.row(i);
      for (std::size_t j = i + 1; j < n; ++j) {
        double s = 1.0 / (1.0 + minkowski(xi, x.row(j), d, p));
        if (s >= threshold) {
          local.emplace_back(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
        }
      }
    }
    block_edges[b] = std::move(local);
  });

  EdgeList edges;
  for (auto& be : block_edges) {
    edges.insert(edges.end(), be.begin(), be.end());
  }
  if (edges.size() == n * (n - 1) / 2) {
    std::cerr << "[fairgraph] warning: similarity threshold connects every pair "
                 "(indistinguishable rows?); the graph is complete\n";
  }

  Masks masks = split_masks(table.labels, cfg.split, derive_seed(cfg.seed, "split"));
  return build_graph(edges, table.attrs, table.sensitive_idx, table.labels,
                     std::move(masks));
}

}  // namespace fairgraph
