#include "fairgraph/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "fairgraph/errors.hpp"
#include "fairgraph/rng.hpp"

namespace fairgraph {

namespace {

void check_lengths(std::size_t a, std::size_t mask, const char* name) {
  if (a != mask) {
    throw MetricError(std::string(name) + ": input length " + std::to_string(a) +
                      " does not match mask length " + std::to_string(mask));
  }
}

void check_binary_label(std::uint8_t v, std::size_t i, const char* name) {
  if (v != 0 && v != 1) {
    throw MetricError(std::string(name) + ": node " + std::to_string(i) +
                      " is masked in but its label is not 0/1");
  }
}

}  // namespace

double auroc(const std::vector<double>& scores,
             const std::vector<std::uint8_t>& labels, const Mask& mask) {
  check_lengths(scores.size(), mask.size(), "auroc");
  check_lengths(labels.size(), mask.size(), "auroc");

  std::vector<std::size_t> idx;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    check_binary_label(labels[i], i, "auroc");
    idx.push_back(i);
    if (labels[i]) {
      ++n_pos;
    } else {
      ++n_neg;
    }
  }
  if (n_pos == 0 || n_neg == 0) {
    throw MetricError("auroc: need both classes in the mask, got " +
                      std::to_string(n_pos) + " positives and " +
                      std::to_string(n_neg) + " negatives");
  }

  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Midranks: a run of equal scores shares the average of its 1-based rank
  // range, which makes each tied positive-negative pair count 1/2.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double midrank = static_cast<double>(i + 1 + j) / 2.0;  // (lo + hi) / 2
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]]) pos_rank_sum += midrank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

double f1_score(const std::vector<std::uint8_t>& preds,
                const std::vector<std::uint8_t>& labels, const Mask& mask) {
  check_lengths(preds.size(), mask.size(), "f1");
  check_lengths(labels.size(), mask.size(), "f1");
  std::size_t tp = 0, fp = 0, fn = 0, seen = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    check_binary_label(labels[i], i, "f1");
    ++seen;
    if (preds[i] && labels[i]) ++tp;
    if (preds[i] && !labels[i]) ++fp;
    if (!preds[i] && labels[i]) ++fn;
  }
  if (seen == 0) throw MetricError("f1: empty mask");
  const double prec = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  const double rec = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  if (prec + rec == 0.0) return 0.0;
  return 2.0 * prec * rec / (prec + rec);
}

double statistical_parity(const std::vector<std::uint8_t>& preds,
                          const std::vector<std::uint8_t>& group, const Mask& mask) {
  check_lengths(preds.size(), mask.size(), "statistical_parity");
  check_lengths(group.size(), mask.size(), "statistical_parity");
  std::size_t n[2] = {0, 0};
  std::size_t pos[2] = {0, 0};
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    if (group[i] != 0 && group[i] != 1) {
      throw MetricError("statistical_parity: node " + std::to_string(i) +
                        " has a non-binary group value");
    }
    ++n[group[i]];
    if (preds[i]) ++pos[group[i]];
  }
  if (n[0] == 0 || n[1] == 0) {
    throw MetricError("statistical_parity: group sizes in mask are " +
                      std::to_string(n[0]) + " and " + std::to_string(n[1]) +
                      "; both must be nonempty");
  }
  const double r0 = static_cast<double>(pos[0]) / static_cast<double>(n[0]);
  const double r1 = static_cast<double>(pos[1]) / static_cast<double>(n[1]);
  return std::abs(r0 - r1);
}

double equal_opportunity(const std::vector<std::uint8_t>& preds,
                         const std::vector<std::uint8_t>& labels,
                         const std::vector<std::uint8_t>& group, const Mask& mask) {
  check_lengths(preds.size(), mask.size(), "equal_opportunity");
  check_lengths(labels.size(), mask.size(), "equal_opportunity");
  check_lengths(group.size(), mask.size(), "equal_opportunity");
  std::size_t n[2] = {0, 0};
  std::size_t tp[2] = {0, 0};
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    check_binary_label(labels[i], i, "equal_opportunity");
    if (group[i] != 0 && group[i] != 1) {
      throw MetricError("equal_opportunity: node " + std::to_string(i) +
                        " has a non-binary group value");
    }
    if (!labels[i]) continue;
    ++n[group[i]];
    if (preds[i]) ++tp[group[i]];
  }
  if (n[0] == 0 || n[1] == 0) {
    throw MetricError("equal_opportunity: positive-labeled nodes per group are " +
                      std::to_string(n[0]) + " and " + std::to_string(n[1]) +
                      "; both must be nonempty");
  }
  const double t0 = static_cast<double>(tp[0]) / static_cast<double>(n[0]);
  const double t1 = static_cast<double>(tp[1]) / static_cast<double>(n[1]);
  return std::abs(t0 - t1);
}

std::vector<std::uint8_t> sensitive_groups(const Graph& g) {
  std::vector<std::uint8_t> out(g.n_nodes());
  const std::size_t s = g.sensitive_idx();
  for (std::size_t i = 0; i < g.n_nodes(); ++i) {
    const double v = g.attrs()(i, s);
    out[i] = v == 1.0 ? 1 : 0;
  }
  return out;
}

namespace {

std::size_t test_count(const Graph& g, const char* name) {
  std::size_t n = 0;
  for (auto b : g.masks().test) {
    if (b) ++n;
  }
  if (n == 0) throw MetricError(std::string(name) + ": empty test mask");
  return n;
}

double changed_fraction(const Prediction& a, const Prediction& b, const Mask& mask,
                        std::size_t n_test) {
  std::size_t changed = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] && a.labels[i] != b.labels[i]) ++changed;
  }
  return static_cast<double>(changed) / static_cast<double>(n_test);
}

}  // namespace

double unfairness(NiftyModel& m, const Graph& g) {
  const std::size_t n_test = test_count(g, "unfairness");
  Prediction base = predict(m, g);
  Prediction flipped = predict(m, g, flip_sensitive(g.attrs(), g.sensitive_idx()));
  return 100.0 * changed_fraction(base, flipped, g.masks().test, n_test);
}

double unfairness_per_node(NiftyModel& m, const Graph& g) {
  constexpr std::size_t kMaxNodes = 2000;
  if (g.n_nodes() > kMaxNodes) {
    throw MetricError("unfairness_per_node: graph has " + std::to_string(g.n_nodes()) +
                      " nodes; the exact mode is capped at " +
                      std::to_string(kMaxNodes));
  }
  const std::size_t n_test = test_count(g, "unfairness_per_node");
  Prediction base = predict(m, g);
  const std::size_t s = g.sensitive_idx();
  std::size_t changed = 0;
  for (std::size_t u = 0; u < g.n_nodes(); ++u) {
    if (!g.masks().test[u]) continue;
    Matrix attrs = g.attrs();
    attrs(u, s) = 1.0 - attrs(u, s);
    Prediction flipped = predict(m, g, attrs);
    if (flipped.labels[u] != base.labels[u]) ++changed;
  }
  return 100.0 * static_cast<double>(changed) / static_cast<double>(n_test);
}

double instability(NiftyModel& m, const Graph& g, const AugmentConfig& noise,
                   int n_trials, std::uint64_t seed) {
  if (n_trials < 1) throw MetricError("instability: n_trials must be >= 1");
  const std::size_t n_test = test_count(g, "instability");
  Prediction base = predict(m, g);
  const Matrix scaled = m.scaler().apply(g.attrs());
  double acc = 0.0;
  for (int t = 0; t < n_trials; ++t) {
    Rng rng(derive_seed(seed, "eval/noise", static_cast<std::uint64_t>(t)));
    Matrix noisy = perturb_attributes(scaled, g.sensitive_idx(),
                                      noise.attr_noise_prob, noise.noise_stddev, rng);
    Prediction perturbed = predict_scaled(m, noisy, g.row_ptr(), g.col_idx());
    acc += changed_fraction(base, perturbed, g.masks().test, n_test);
  }
  return 100.0 * acc / static_cast<double>(n_trials);
}

MetricsReport evaluate(NiftyModel& m, const Graph& g, const EvalConfig& cfg) {
  MetricsReport r;
  const Mask& test = g.masks().test;
  const auto groups = sensitive_groups(g);
  Prediction base = predict(m, g);

  r.auroc = auroc(base.probs, g.labels(), test);
  r.f1 = f1_score(base.labels, g.labels(), test);
  r.delta_sp = statistical_parity(base.labels, groups, test);
  r.delta_eo = equal_opportunity(base.labels, g.labels(), groups, test);
  r.unfairness_pct = cfg.per_node_unfairness ? unfairness_per_node(m, g) : unfairness(m, g);
  r.instability_pct = instability(m, g, cfg.noise, cfg.n_trials, cfg.seed);
  r.bound = verify_stability_bound(m, g, cfg.noise, cfg.bound_samples, cfg.seed);

  for (std::size_t i = 0; i < test.size(); ++i) {
    if (!test[i]) continue;
    ++r.counts.n_test;
    if (g.labels()[i] == 1) {
      ++r.counts.n_test_pos;
    } else {
      ++r.counts.n_test_neg;
    }
    if (groups[i]) {
      ++r.counts.group1;
      if (g.labels()[i] == 1) ++r.counts.group1_pos;
    } else {
      ++r.counts.group0;
      if (g.labels()[i] == 1) ++r.counts.group0_pos;
    }
  }
  return r;
}

}  // namespace fairgraph
