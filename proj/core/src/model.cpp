#include "fairgraph/model.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "fairgraph/adam.hpp"
#include "fairgraph/errors.hpp"
#include "fairgraph/rng.hpp"
#include "fairgraph/spectral.hpp"

namespace fairgraph {

Ablation ablation_from_string(const std::string& s) {
  if (s == "full") return Ablation::full;
  if (s == "no-objective" || s == "no_objective") return Ablation::no_objective;
  if (s == "no-architecture" || s == "no_architecture") return Ablation::no_architecture;
  if (s == "baseline") return Ablation::baseline;
  throw ValidationError("unknown ablation '" + s +
                        "' (expected full, no-objective, no-architecture, baseline)");
}

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::no_objective: return "no-objective";
    case Ablation::no_architecture: return "no-architecture";
    case Ablation::baseline: return "baseline";
  }
  return "full";
}

FeatureScaling feature_scaling_from_string(const std::string& s) {
  if (s == "none") return FeatureScaling::none;
  if (s == "minmax") return FeatureScaling::minmax;
  throw ValidationError("unknown feature scaling '" + s + "' (expected none, minmax)");
}

std::string to_string(FeatureScaling s) {
  return s == FeatureScaling::none ? "none" : "minmax";
}

double TrainConfig::effective_lambda() const {
  if (ablation == Ablation::no_objective || ablation == Ablation::baseline) return 0.0;
  return lambda;
}

bool TrainConfig::lipschitz_enabled() const {
  return ablation == Ablation::full || ablation == Ablation::no_objective;
}

void TrainConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ValidationError("TrainConfig: lambda must be in [0, 1]");
  }
  if (epochs < 1) throw ValidationError("TrainConfig: epochs must be >= 1");
  if (!(lr > 0.0)) throw ValidationError("TrainConfig: lr must be positive");
  if (!(weight_decay >= 0.0)) {
    throw ValidationError("TrainConfig: weight_decay must be non-negative");
  }
  if (hidden < 1) throw ValidationError("TrainConfig: hidden must be >= 1");
  if (encoder_layers < 1) {
    throw ValidationError("TrainConfig: encoder_layers must be >= 1");
  }
}

FeatureScaler FeatureScaler::fit(const Matrix& attrs, std::size_t sensitive_idx,
                                 FeatureScaling kind) {
  if (attrs.empty()) throw ValidationError("FeatureScaler: empty attribute matrix");
  if (sensitive_idx >= attrs.cols()) {
    throw ValidationError("FeatureScaler: sensitive index out of range");
  }
  FeatureScaler s;
  s.kind_ = kind;
  s.sensitive_idx_ = sensitive_idx;
  s.col_min_.assign(attrs.cols(), 0.0);
  s.col_max_.assign(attrs.cols(), 0.0);
  if (kind == FeatureScaling::minmax) {
    for (std::size_t j = 0; j < attrs.cols(); ++j) {
      double lo = attrs(0, j), hi = attrs(0, j);
      for (std::size_t i = 1; i < attrs.rows(); ++i) {
        lo = std::min(lo, attrs(i, j));
        hi = std::max(hi, attrs(i, j));
      }
      s.col_min_[j] = lo;
      s.col_max_[j] = hi;
    }
  }
  return s;
}

FeatureScaler FeatureScaler::identity(std::size_t width, std::size_t sensitive_idx) {
  FeatureScaler s;
  s.kind_ = FeatureScaling::none;
  s.sensitive_idx_ = sensitive_idx;
  s.col_min_.assign(width, 0.0);
  s.col_max_.assign(width, 0.0);
  return s;
}

FeatureScaler FeatureScaler::restore(FeatureScaling kind, std::size_t sensitive_idx,
                                     std::vector<double> col_min,
                                     std::vector<double> col_max) {
  if (col_min.size() != col_max.size()) {
    throw ValidationError("FeatureScaler::restore: min/max length mismatch");
  }
  if (sensitive_idx >= col_min.size()) {
    throw ValidationError("FeatureScaler::restore: sensitive index out of range");
  }
  FeatureScaler s;
  s.kind_ = kind;
  s.sensitive_idx_ = sensitive_idx;
  s.col_min_ = std::move(col_min);
  s.col_max_ = std::move(col_max);
  return s;
}

Matrix FeatureScaler::apply(const Matrix& attrs) const {
  if (attrs.cols() != width()) {
    throw ValidationError("FeatureScaler: matrix width " + std::to_string(attrs.cols()) +
                          " does not match fitted width " + std::to_string(width()));
  }
  Matrix out = attrs;
  if (kind_ == FeatureScaling::none) return out;
  for (std::size_t j = 0; j < out.cols(); ++j) {
    if (j == sensitive_idx_) continue;
    const double lo = col_min_[j];
    const double span = col_max_[j] - lo;
    for (std::size_t i = 0; i < out.rows(); ++i) {
      out(i, j) = span > 0.0 ? 2.0 * (out(i, j) - lo) / span - 1.0 : 0.0;
    }
  }
  return out;
}

namespace {

Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix w(rows, cols);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  double* p = w.data();
  for (std::size_t i = 0; i < w.size(); ++i) {
    p[i] = (2.0 * rng.uniform() - 1.0) * limit;
  }
  return w;
}

}  // namespace

NiftyModel::NiftyModel(std::size_t in_dim, const TrainConfig& cfg)
    : in_dim_(in_dim),
      hidden_(cfg.hidden),
      lipschitz_(cfg.lipschitz_enabled()),
      bn_(cfg.hidden),
      scaler_(FeatureScaler::identity(in_dim, 0)) {
  cfg.validate();
  if (in_dim < 1) throw ValidationError("NiftyModel: in_dim must be >= 1");

  // One seeded stream initializes everything, in declaration order, so the
  // weights depend only on (seed, shape configuration).
  Rng rng(derive_seed(cfg.seed, "init"));
  layers_.reserve(cfg.encoder_layers);
  for (std::size_t k = 0; k < cfg.encoder_layers; ++k) {
    const std::size_t in = k == 0 ? in_dim : hidden_;
    EncoderLayer layer;
    layer.w_self = ad::Tensor::param(glorot(in, hidden_, rng));
    layer.w_neigh = ad::Tensor::param(glorot(in, hidden_, rng));
    layer.bias = ad::Tensor::param(Matrix(1, hidden_));
    layers_.push_back(std::move(layer));
  }
  proj_w1_ = ad::Tensor::param(glorot(hidden_, hidden_, rng));
  proj_b1_ = ad::Tensor::param(Matrix(1, hidden_));
  proj_w2_ = ad::Tensor::param(glorot(hidden_, hidden_, rng));
  proj_b2_ = ad::Tensor::param(Matrix(1, hidden_));
  pred_w_ = ad::Tensor::param(glorot(hidden_, hidden_, rng));
  pred_b_ = ad::Tensor::param(Matrix(1, hidden_));
  clf_w_ = ad::Tensor::param(glorot(hidden_, 1, rng));
  clf_b_ = ad::Tensor::param(Matrix(1, 1));
}

ad::Tensor NiftyModel::encode(const ad::Tensor& attrs,
                              std::span<const std::uint32_t> row_ptr,
                              std::span<const std::uint32_t> col_idx) {
  if (attrs.cols() != in_dim_) {
    throw ValidationError("encode: attribute width " + std::to_string(attrs.cols()) +
                          " does not match model input width " +
                          std::to_string(in_dim_));
  }
  ad::Tensor h = attrs;
  for (auto& layer : layers_) {
    ad::Tensor self = ad::matmul(h, layer.w_self);
    ad::Tensor neigh = ad::matmul(ad::neighbor_sum(row_ptr, col_idx, h), layer.w_neigh);
    h = ad::relu(ad::add_rowvec(ad::add(self, neigh), layer.bias));
  }
  return h;
}

ad::Tensor NiftyModel::project(const ad::Tensor& z) {
  ad::Tensor a = ad::add_rowvec(ad::matmul(z, proj_w1_), proj_b1_);
  a = ad::relu(ad::batchnorm(a, bn_));
  return ad::add_rowvec(ad::matmul(a, proj_w2_), proj_b2_);
}

ad::Tensor NiftyModel::predict_head(const ad::Tensor& p) {
  return ad::add_rowvec(ad::matmul(p, pred_w_), pred_b_);
}

ad::Tensor NiftyModel::classify(const ad::Tensor& z) {
  return ad::sigmoid(ad::add_rowvec(ad::matmul(z, clf_w_), clf_b_));
}

std::vector<ad::Tensor> NiftyModel::parameters() {
  std::vector<ad::Tensor> out;
  for (auto& layer : layers_) {
    out.push_back(layer.w_self);
    out.push_back(layer.w_neigh);
    out.push_back(layer.bias);
  }
  out.push_back(proj_w1_);
  out.push_back(proj_b1_);
  out.push_back(bn_.gamma);
  out.push_back(bn_.beta);
  out.push_back(proj_w2_);
  out.push_back(proj_b2_);
  out.push_back(pred_w_);
  out.push_back(pred_b_);
  out.push_back(clf_w_);
  out.push_back(clf_b_);
  return out;
}

std::vector<std::string> NiftyModel::parameter_names() const {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const std::string p = "encoder." + std::to_string(k) + ".";
    out.push_back(p + "w_self");
    out.push_back(p + "w_neigh");
    out.push_back(p + "bias");
  }
  out.insert(out.end(), {"proj.w1", "proj.b1", "proj.bn.gamma", "proj.bn.beta",
                         "proj.w2", "proj.b2", "pred.w", "pred.b", "clf.w", "clf.b"});
  return out;
}

void NiftyModel::set_training(bool training) { bn_.training = training; }

void NiftyModel::normalize_encoder_weights() {
  if (!lipschitz_) {
    throw ValidationError("normalize_encoder_weights: Lipschitz switch is off");
  }
  for (auto& layer : layers_) lipschitz_normalize(layer.w_self.value());
}

double NiftyModel::sigma_product() const {
  double prod = 1.0;
  for (const auto& layer : layers_) {
    prod *= spectral_norm(layer.w_self.value(), 1000, 1e-13);
  }
  return prod;
}

ad::Tensor siamese_loss(NiftyModel& m, const ad::Tensor& z, const ad::Tensor& z_view) {
  if (!z.value().same_shape(z_view.value())) {
    throw ValidationError("siamese_loss: embedding shapes differ");
  }
  ad::Tensor p = m.project(z);
  ad::Tensor p_view = m.project(z_view);
  ad::Tensor d1 = ad::cosine_distance_rows(m.predict_head(p), ad::stop_grad(p_view));
  ad::Tensor d2 = ad::cosine_distance_rows(m.predict_head(p_view), ad::stop_grad(p));
  return ad::scale(ad::add(ad::mean_scalar(d1), ad::mean_scalar(d2)), 0.5);
}

LossParts total_loss(NiftyModel& m, const Graph& g, const Matrix& scaled_attrs,
                     const ViewPair& views, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ValidationError("total_loss: lambda must be in [0, 1]");
  }
  ad::Tensor x = ad::Tensor::constant(scaled_attrs);
  ad::Tensor z = m.encode(x, g.row_ptr(), g.col_idx());
  ad::Tensor l_c = ad::bce(m.classify(z), g.labels(), g.masks().train);

  LossParts parts;
  parts.l_c = l_c.value()(0, 0);
  if (lambda > 0.0) {
    ad::Tensor z_noisy = m.encode(ad::Tensor::constant(views.noisy.attrs),
                                  views.noisy.row_ptr, views.noisy.col_idx);
    ad::Tensor z_cf = m.encode(ad::Tensor::constant(views.counterfactual.attrs),
                               views.counterfactual.row_ptr,
                               views.counterfactual.col_idx);
    ad::Tensor l_s = ad::scale(
        ad::add(siamese_loss(m, z, z_noisy), siamese_loss(m, z, z_cf)), 0.5);
    parts.l_s = l_s.value()(0, 0);
    parts.total = ad::add(ad::scale(l_c, 1.0 - lambda), ad::scale(l_s, lambda));
  } else {
    parts.total = ad::scale(l_c, 1.0 - lambda);
  }
  return parts;
}

TrainResult train(NiftyModel& m, const Graph& g, const TrainConfig& cfg) {
  cfg.validate();
  if (m.in_dim() != g.n_attrs()) {
    throw ValidationError("train: model input width does not match graph attributes");
  }
  bool any_train = false;
  for (auto b : g.masks().train) {
    if (b) any_train = true;
  }
  if (!any_train) throw ValidationError("train: empty train mask");

  m.scaler() = FeatureScaler::fit(g.attrs(), g.sensitive_idx(), cfg.feature_scaling);
  const Matrix scaled = m.scaler().apply(g.attrs());
  const double lambda = cfg.effective_lambda();

  // View randomness is rooted in the master seed; the augment config's own
  // seed field only matters when make_views is driven directly.
  AugmentConfig aug = cfg.augment;
  aug.seed = derive_seed(cfg.seed, "augment");

  AdamConfig acfg;
  acfg.lr = cfg.lr;
  acfg.weight_decay = cfg.weight_decay;
  Adam adam(m.parameters(), acfg);

  m.set_training(true);
  TrainResult result;
  result.history.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (m.lipschitz_enabled()) m.normalize_encoder_weights();
    const double sigma_prod = m.sigma_product();

    ViewPair views;
    if (lambda > 0.0) {
      views = make_views(g, scaled, aug, static_cast<std::uint64_t>(epoch));
    }
    adam.zero_grad();
    LossParts parts = total_loss(m, g, scaled, views, lambda);
    const double total = parts.total.value()(0, 0);
    if (!std::isfinite(total)) {
      throw TrainingError("training diverged at epoch " + std::to_string(epoch) +
                          ": total=" + std::to_string(total) +
                          " classification=" + std::to_string(parts.l_c) +
                          " invariance=" + std::to_string(parts.l_s));
    }
    ad::backward(parts.total);
    adam.step();
    result.history.push_back({epoch, parts.l_c, parts.l_s, total, sigma_prod});
  }
  // The last optimizer step moved the weights off the unit sphere; restore
  // the invariant the published model promises.
  if (m.lipschitz_enabled()) m.normalize_encoder_weights();
  m.set_training(false);
  return result;
}

Prediction predict(NiftyModel& m, const Graph& g) {
  return predict(m, g, g.attrs());
}

Prediction predict(NiftyModel& m, const Graph& g, const Matrix& raw_attrs_override) {
  const Matrix scaled = m.scaler().apply(raw_attrs_override);
  return predict_scaled(m, scaled, g.row_ptr(), g.col_idx());
}

Prediction predict_scaled(NiftyModel& m, const Matrix& scaled_attrs,
                          std::span<const std::uint32_t> row_ptr,
                          std::span<const std::uint32_t> col_idx) {
  ad::NoGrad guard;
  const bool was_training = m.training();
  m.set_training(false);
  ad::Tensor z = m.encode(ad::Tensor::constant(scaled_attrs), row_ptr, col_idx);
  ad::Tensor p = m.classify(z);
  m.set_training(was_training);

  Prediction out;
  out.probs.resize(p.rows());
  out.labels.resize(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) {
    out.probs[i] = p.value()(i, 0);
    out.labels[i] = p.value()(i, 0) >= 0.5 ? 1 : 0;
  }
  return out;
}

namespace {

// Neighbor-sum of x under the graph adjacency, plain matrix form.
Matrix adjacency_sum(const Graph& g, const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  const auto& row_ptr = g.row_ptr();
  const auto& col_idx = g.col_idx();
  for (std::size_t u = 0; u < x.rows(); ++u) {
    double* orow = out.row(u);
    for (std::uint32_t k = row_ptr[u]; k < row_ptr[u + 1]; ++k) {
      const double* xrow = x.row(col_idx[k]);
      for (std::size_t j = 0; j < x.cols(); ++j) orow[j] += xrow[j];
    }
  }
  return out;
}

// Re-encodes a single perturbed row against the original graph's layer
// activations: at every layer the neighbor aggregate comes from the stored
// activations, only the node's own path carries the perturbation. This is
// the exact quantity the norm bound constrains.
std::vector<double> encode_restricted(const NiftyModel& m,
                                      const std::vector<Matrix>& neighbor_aggregates,
                                      std::uint32_t u, std::vector<double> row) {
  const auto& layers = m.encoder();
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const Matrix& w_self = layers[k].w_self.value();
    const Matrix& bias = layers[k].bias.value();
    std::vector<double> next(m.hidden());
    for (std::size_t j = 0; j < m.hidden(); ++j) {
      double s = bias(0, j) + neighbor_aggregates[k](u, j);
      for (std::size_t i = 0; i < row.size(); ++i) s += row[i] * w_self(i, j);
      next[j] = s > 0.0 ? s : 0.0;
    }
    row = std::move(next);
  }
  return row;
}

double row_diff_norm(const std::vector<double>& a, const double* b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

BoundReport verify_stability_bound(NiftyModel& m, const Graph& g,
                                   const AugmentConfig& noise,
                                   std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < 1) {
    throw ValidationError("verify_stability_bound: n_samples must be >= 1");
  }
  const Matrix scaled = m.scaler().apply(g.attrs());

  // Layer-by-layer activations of the unperturbed graph, plus the matching
  // neighbor aggregates already multiplied through w_neigh.
  std::vector<Matrix> activations;
  std::vector<Matrix> neighbor_aggregates;
  activations.push_back(scaled);
  for (const auto& layer : m.encoder()) {
    const Matrix& x = activations.back();
    Matrix agg = matmul(adjacency_sum(g, x), layer.w_neigh.value());
    Matrix h = matmul(x, layer.w_self.value());
    add_inplace(h, agg);
    for (std::size_t i = 0; i < h.rows(); ++i) {
      double* r = h.row(i);
      for (std::size_t j = 0; j < h.cols(); ++j) {
        r[j] += layer.bias.value()(0, j);
        if (r[j] < 0.0) r[j] = 0.0;
      }
    }
    neighbor_aggregates.push_back(std::move(agg));
    activations.push_back(std::move(h));
  }
  const Matrix& z = activations.back();

  BoundReport report;
  report.sigma_product = m.sigma_product();

  std::vector<std::uint32_t> nodes(g.n_nodes());
  std::iota(nodes.begin(), nodes.end(), 0u);
  if (n_samples < g.n_nodes()) {
    Rng pick(derive_seed(seed, "eval/bound"));
    pick.shuffle(nodes);
    nodes.resize(n_samples);
  }
  report.n_samples = nodes.size();

  const std::size_t s_idx = g.sensitive_idx();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::uint32_t u = nodes[i];
    std::vector<double> base(scaled.row(u), scaled.row(u) + scaled.cols());

    // Attribute noise drawn by the training law, restricted to this node.
    Rng rng(derive_seed(seed, "eval/bound/attrs", i));
    std::vector<double> noisy = base;
    double delta_sq = 0.0;
    for (std::size_t j = 0; j < noisy.size(); ++j) {
      if (j == s_idx) continue;
      const bool hit = rng.bernoulli(noise.attr_noise_prob);
      const double d = rng.normal() * noise.noise_stddev;
      if (!hit) continue;
      noisy[j] += d;
      delta_sq += d * d;
    }
    const double delta = std::sqrt(delta_sq);
    auto z_noisy = encode_restricted(m, neighbor_aggregates, u, noisy);
    const double lhs = row_diff_norm(z_noisy, z.row(u));
    if (delta > 0.0) {
      const double ratio = lhs / (report.sigma_product * delta);
      report.max_stability_ratio = std::max(report.max_stability_ratio, ratio);
    }

    // Sensitive flip: the input difference has norm exactly 1.
    std::vector<double> flipped = base;
    flipped[s_idx] = 1.0 - flipped[s_idx];
    auto z_cf = encode_restricted(m, neighbor_aggregates, u, flipped);
    const double ratio_cf = row_diff_norm(z_cf, z.row(u)) / report.sigma_product;
    report.max_counterfactual_ratio = std::max(report.max_counterfactual_ratio, ratio_cf);
  }
  return report;
}

}  // namespace fairgraph
