#include "fairgraph/augment.hpp"

#include <string>

#include "fairgraph/errors.hpp"

namespace fairgraph {

Matrix perturb_attributes(const Matrix& attrs, std::size_t sensitive_idx,
                          double noise_prob, double stddev, Rng& rng) {
  if (sensitive_idx >= attrs.cols()) {
    throw ValidationError("perturb_attributes: sensitive_idx out of range");
  }
  if (noise_prob < 0.0 || noise_prob > 1.0) {
    throw ValidationError("perturb_attributes: noise_prob must be in [0, 1]");
  }
  if (stddev < 0.0) throw ValidationError("perturb_attributes: negative stddev");

  Matrix out = attrs;
  // Both draws happen for every entry whether or not the mask bit fires, so
  // the stream position after row i never depends on earlier outcomes.
  for (std::size_t i = 0; i < attrs.rows(); ++i) {
    for (std::size_t j = 0; j < attrs.cols(); ++j) {
      if (j == sensitive_idx) continue;
      const bool hit = rng.bernoulli(noise_prob);
      const double delta = rng.normal(0.0, stddev);
      if (hit) out(i, j) += delta;
    }
  }
  return out;
}

Matrix flip_sensitive(const Matrix& attrs, std::size_t sensitive_idx) {
  if (sensitive_idx >= attrs.cols()) {
    throw ValidationError("flip_sensitive: sensitive_idx out of range");
  }
  Matrix out = attrs;
  for (std::size_t i = 0; i < attrs.rows(); ++i) {
    const double s = out(i, sensitive_idx);
    if (s != 0.0 && s != 1.0) {
      throw ValidationError("flip_sensitive: row " + std::to_string(i) +
                            " has non-binary sensitive value " + std::to_string(s));
    }
    out(i, sensitive_idx) = 1.0 - s;
  }
  return out;
}

std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> drop_edges(
    const Graph& g, double drop_prob, Rng& rng) {
  if (drop_prob < 0.0 || drop_prob > 1.0) {
    throw ValidationError("drop_edges: drop_prob must be in [0, 1]");
  }
  const std::size_t n = g.n_nodes();
  EdgeList kept;
  kept.reserve(g.n_edges());
  for (auto [u, v] : undirected_edges(g)) {
    if (!rng.bernoulli(drop_prob)) kept.emplace_back(u, v);
  }

  std::vector<std::uint32_t> row_ptr(n + 1, 0);
  for (auto [u, v] : kept) {
    ++row_ptr[u + 1];
    ++row_ptr[v + 1];
  }
  for (std::size_t i = 0; i < n; ++i) row_ptr[i + 1] += row_ptr[i];
  std::vector<std::uint32_t> col_idx(kept.size() * 2);
  std::vector<std::uint32_t> cursor(row_ptr.begin(), row_ptr.end() - 1);
  // kept is ordered by (u, v) ascending, so each row fills in ascending
  // order on both sides, same as the parent graph's layout.
  for (auto [u, v] : kept) {
    col_idx[cursor[u]++] = v;
    col_idx[cursor[v]++] = u;
  }
  return {std::move(row_ptr), std::move(col_idx)};
}

ViewPair make_views(const Graph& g, const Matrix& attrs, const AugmentConfig& cfg,
                    std::uint64_t epoch) {
  if (attrs.rows() != g.n_nodes()) {
    throw ValidationError("make_views: attrs row count != n_nodes");
  }
  ViewPair vp;

  Rng attr_rng(derive_seed(cfg.seed, "augment/attrs", epoch));
  vp.noisy.attrs = perturb_attributes(attrs, g.sensitive_idx(), cfg.attr_noise_prob,
                                      cfg.noise_stddev, attr_rng);
  Rng edge_rng(derive_seed(cfg.seed, "augment/edges", epoch));
  auto [rp, ci] = drop_edges(g, cfg.edge_drop_prob, edge_rng);
  vp.noisy.row_ptr = std::move(rp);
  vp.noisy.col_idx = std::move(ci);
  vp.noisy.kind = ViewKind::noisy;

  // The counterfactual view touches nothing but the sensitive bit.
  vp.counterfactual.attrs = flip_sensitive(attrs, g.sensitive_idx());
  vp.counterfactual.row_ptr = g.row_ptr();
  vp.counterfactual.col_idx = g.col_idx();
  vp.counterfactual.kind = ViewKind::counterfactual;
  return vp;
}

ViewPair make_views(const Graph& g, const AugmentConfig& cfg, std::uint64_t epoch) {
  return make_views(g, g.attrs(), cfg, epoch);
}

}  // namespace fairgraph
