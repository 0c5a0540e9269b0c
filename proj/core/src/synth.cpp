#include "fairgraph/synth.hpp"

#include <algorithm>
#include <cmath>

#include "fairgraph/errors.hpp"
#include "fairgraph/rng.hpp"

namespace fairgraph {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Inverse of normal_cdf on [0.5, 1), by bisection.
double normal_quantile(double p) {
  double lo = 0.0, hi = 40.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Graph synth_dataset(const SynthConfig& cfg) {
  if (cfg.n_nodes < 10) throw ValidationError("synth_dataset: n_nodes must be >= 10");
  if (cfg.n_attrs < 1) throw ValidationError("synth_dataset: n_attrs must be >= 1");
  if (cfg.homophily < 0.0 || cfg.homophily > 1.0) {
    throw ValidationError("synth_dataset: homophily must be in [0, 1]");
  }
  if (cfg.bias < 0.0 || cfg.bias > 1.0) {
    throw ValidationError("synth_dataset: bias must be in [0, 1]");
  }
  if (cfg.cluster_separation < 0.0) {
    throw ValidationError("synth_dataset: cluster_separation must be >= 0");
  }
  if (!(cfg.attr_scale > 0.0)) {
    throw ValidationError("synth_dataset: attr_scale must be > 0");
  }

  const std::size_t n = cfg.n_nodes;
  const std::size_t m = cfg.n_attrs;

  std::vector<std::uint8_t> labels(n);
  {
    Rng rng(derive_seed(cfg.seed, "synth/labels"));
    for (std::size_t i = 0; i < n; ++i) labels[i] = rng.bernoulli(0.5) ? 1 : 0;
  }

  // Class means sit at +/- offset on every attribute; offset is chosen so
  // the mean-vector separation equals cluster_separation in units of the
  // per-attribute noise, regardless of the attribute count. attr_scale then
  // multiplies means and noise together, changing units but not overlap.
  Matrix attrs(n, m + 1);
  {
    Rng rng(derive_seed(cfg.seed, "synth/attrs"));
    const double offset = cfg.attr_scale * cfg.cluster_separation /
                          (2.0 * std::sqrt(static_cast<double>(m)));
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = labels[i] ? offset : -offset;
      for (std::size_t j = 0; j < m; ++j) attrs(i, j) = rng.normal(mu, cfg.attr_scale);
    }
  }

  // The sensitive bit thresholds a noisy readout of the class-signal
  // direction of the attributes, so it adds no label information beyond what
  // the attributes already carry. The readout slope kappa is calibrated so
  // P(s == y) = (1 + bias) / 2 exactly; when the attribute signal is too
  // weak to support the requested correlation the remainder comes from the
  // label directly (eta > 0). bias = 1 degenerates to s = y.
  std::vector<std::uint8_t> sens(n);
  {
    const double half = cfg.cluster_separation / 2.0;
    const double a = normal_quantile((1.0 + cfg.bias) / 2.0);
    const double a_cap = 0.9 * half;
    double kappa = 0.0, eta = 0.0;
    if (cfg.bias < 1.0 && a > 0.0) {
      const double ar = std::min(a, a_cap);
      if (ar > 0.0) kappa = ar / std::sqrt(half * half - ar * ar);
      if (a > a_cap) eta = std::sqrt(kappa * kappa + 1.0) * a - kappa * half;
    }
    Rng rng(derive_seed(cfg.seed, "synth/sensitive"));
    // Normalizing by attr_scale * sqrt(m) gives g | y ~ N(+/- sep/2, 1) in
    // the same units as the readout noise, whatever the attribute units.
    const double g_norm = 1.0 / (cfg.attr_scale * std::sqrt(static_cast<double>(m)));
    for (std::size_t i = 0; i < n; ++i) {
      if (cfg.bias >= 1.0) {
        sens[i] = labels[i];
        continue;
      }
      double g = 0.0;
      for (std::size_t j = 0; j < m; ++j) g += attrs(i, j);
      g *= g_norm;
      const double sign = labels[i] ? 1.0 : -1.0;
      const double latent = kappa * g + eta * sign + rng.normal(0.0, 1.0);
      sens[i] = latent > 0.0 ? 1 : 0;
    }
    for (std::size_t i = 0; i < n; ++i) attrs(i, m) = static_cast<double>(sens[i]);
  }

  EdgeList edges;
  {
    Rng rng(derive_seed(cfg.seed, "synth/edges"));
    // E[degree] = p_in * (n/2) + p_in * (1 - homophily) * (n/2) for balanced
    // groups, so p_in = 2 * degree / (n * (2 - homophily)).
    const double p_in = std::min(
        1.0, 2.0 * cfg.expected_degree /
                 (static_cast<double>(n) * (2.0 - cfg.homophily)));
    const double p_cross = p_in * (1.0 - cfg.homophily);
    for (std::uint32_t u = 0; u + 1 < n; ++u) {
      for (std::uint32_t v = u + 1; v < n; ++v) {
        const double p = (sens[u] == sens[v]) ? p_in : p_cross;
        if (rng.bernoulli(p)) edges.emplace_back(u, v);
      }
    }
  }

  Masks masks = split_masks(labels, cfg.split, derive_seed(cfg.seed, "synth/split"));
  return build_graph(edges, std::move(attrs), m, std::move(labels), std::move(masks));
}

Graph synth_dataset(std::size_t n_nodes, std::size_t n_attrs, double homophily,
                    double bias, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_nodes = n_nodes;
  cfg.n_attrs = n_attrs;
  cfg.homophily = homophily;
  cfg.bias = bias;
  cfg.seed = seed;
  return synth_dataset(cfg);
}

}  // namespace fairgraph
