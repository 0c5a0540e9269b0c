#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairgraph/augment.hpp"
#include "fairgraph/autodiff.hpp"
#include "fairgraph/graph.hpp"
#include "fairgraph/matrix.hpp"

namespace fairgraph {

// Which halves of the method are active. `full` is the real thing; the other
// three switch off the invariance objective, the weight normalization, or
// both, leaving a plain GNN classifier as the baseline.
enum class Ablation { full, no_objective, no_architecture, baseline };

Ablation ablation_from_string(const std::string& s);
std::string to_string(Ablation a);

enum class FeatureScaling { none, minmax };

FeatureScaling feature_scaling_from_string(const std::string& s);
std::string to_string(FeatureScaling s);

struct TrainConfig {
  double lambda = 0.6;  // weight of the invariance term in the total loss
  int epochs = 1000;
  double lr = 1e-3;
  double weight_decay = 1e-5;
  std::size_t hidden = 16;
  std::size_t encoder_layers = 1;
  AugmentConfig augment;
  // Off by default: the bundled loaders and the synthetic generator already
  // emit features in sane units, and rescaling on top of that would distort
  // them. Opt in for raw tables that skipped ingest-side standardization.
  FeatureScaling feature_scaling = FeatureScaling::none;
  Ablation ablation = Ablation::full;
  std::uint64_t seed = 1;

  // lambda after the ablation switch; no_objective and baseline force 0.
  double effective_lambda() const;
  bool lipschitz_enabled() const;
  void validate() const;
};

// Column-wise rescale of the attribute matrix into [-1, 1], fitted on
// training data. The sensitive column passes through untouched so it stays
// a 0/1 indicator, which the counterfactual machinery depends on. Constant
// columns map to 0.
class FeatureScaler {
 public:
  static FeatureScaler fit(const Matrix& attrs, std::size_t sensitive_idx,
                           FeatureScaling kind);
  // Pass-through scaler; what a model has before training fits a real one.
  static FeatureScaler identity(std::size_t width, std::size_t sensitive_idx);
  // Rebuild from checkpoint fields.
  static FeatureScaler restore(FeatureScaling kind, std::size_t sensitive_idx,
                               std::vector<double> col_min,
                               std::vector<double> col_max);

  Matrix apply(const Matrix& attrs) const;

  FeatureScaling kind() const { return kind_; }
  std::size_t width() const { return col_min_.size(); }
  std::size_t sensitive_idx() const { return sensitive_idx_; }
  const std::vector<double>& col_min() const { return col_min_; }
  const std::vector<double>& col_max() const { return col_max_; }

 private:
  FeatureScaler() = default;
  FeatureScaling kind_ = FeatureScaling::none;
  std::size_t sensitive_idx_ = 0;
  std::vector<double> col_min_;
  std::vector<double> col_max_;
};

struct EncoderLayer {
  ad::Tensor w_self;   // multiplies the node's own features
  ad::Tensor w_neigh;  // multiplies the summed neighbor features
  ad::Tensor bias;     // 1 x hidden
};

// Encoder + projection head + predictor + classifier, with the Lipschitz
// switch and the input scaler. Parameters are autodiff tensors updated in
// place by the optimizer; forward passes build a fresh graph each call.
class NiftyModel {
 public:
  NiftyModel(std::size_t in_dim, const TrainConfig& cfg);

  // One message-passing layer per encoder layer:
  //   H <- ReLU(H w_self + (sum of neighbor rows of H) w_neigh + bias).
  // The adjacency spans must stay alive until backward() has run.
  ad::Tensor encode(const ad::Tensor& attrs,
                    std::span<const std::uint32_t> row_ptr,
                    std::span<const std::uint32_t> col_idx);

  // Siamese branch: two affine layers with batchnorm + ReLU between.
  ad::Tensor project(const ad::Tensor& z);
  // Predictor head: single affine layer.
  ad::Tensor predict_head(const ad::Tensor& p);
  // Classifier on the encoder output: N x 1 probabilities.
  ad::Tensor classify(const ad::Tensor& z);

  // Fixed order, matching parameter_names(); the optimizer and checkpoint
  // rely on it.
  std::vector<ad::Tensor> parameters();
  std::vector<std::string> parameter_names() const;

  void set_training(bool training);
  bool training() const { return bn_.training; }

  // Replaces every encoder w_self by w_self / (its spectral norm). Throws
  // ValidationError when the Lipschitz switch is off or a weight is all
  // zero.
  void normalize_encoder_weights();
  // Product of the encoder w_self spectral norms, computed to high accuracy.
  double sigma_product() const;

  std::size_t in_dim() const { return in_dim_; }
  std::size_t hidden() const { return hidden_; }
  std::size_t n_layers() const { return layers_.size(); }
  bool lipschitz_enabled() const { return lipschitz_; }

  std::vector<EncoderLayer>& encoder() { return layers_; }
  const std::vector<EncoderLayer>& encoder() const { return layers_; }
  ad::BatchNormState& proj_bn() { return bn_; }
  const ad::BatchNormState& proj_bn() const { return bn_; }

  FeatureScaler& scaler() { return scaler_; }
  const FeatureScaler& scaler() const { return scaler_; }

 private:
  std::size_t in_dim_;
  std::size_t hidden_;
  bool lipschitz_;
  std::vector<EncoderLayer> layers_;
  ad::Tensor proj_w1_, proj_b1_;
  ad::BatchNormState bn_;
  ad::Tensor proj_w2_, proj_b2_;
  ad::Tensor pred_w_, pred_b_;
  ad::Tensor clf_w_, clf_b_;
  FeatureScaler scaler_;
};

// Symmetric stop-gradient objective between two embedding batches: both are
// projected, and each projection is matched (through the predictor) against
// a frozen copy of the other. Gradients flow only through the predictor
// branches.
ad::Tensor siamese_loss(NiftyModel& m, const ad::Tensor& z, const ad::Tensor& z_view);

struct LossParts {
  ad::Tensor total;
  double l_c = 0.0;  // classification term, before weighting
  double l_s = 0.0;  // invariance term, before weighting; 0 when skipped
};

// (1 - lambda) * BCE(classifier(Z), labels over train mask)
//   + lambda * mean of the two view losses.
// `scaled_attrs` is the model-space attribute matrix; `views` were built
// over it. When lambda is 0 the view encodings are skipped entirely.
LossParts total_loss(NiftyModel& m, const Graph& g, const Matrix& scaled_attrs,
                     const ViewPair& views, double lambda);

struct EpochLog {
  int epoch = 0;
  double l_c = 0.0;
  double l_s = 0.0;
  double total = 0.0;
  double sigma_prod = 0.0;  // product of encoder w_self spectral norms
};

struct TrainResult {
  std::vector<EpochLog> history;
};

// Full training loop: fit the scaler, then per epoch normalize weights (when
// enabled), draw fresh views, build the loss, backprop, and take an Adam
// step. Weights are re-normalized after the last step so the published model
// satisfies the norm-1 invariant. Deterministic for a fixed config. Throws
// TrainingError with the epoch and loss components if the loss leaves the
// finite range.
TrainResult train(NiftyModel& m, const Graph& g, const TrainConfig& cfg);

struct Prediction {
  std::vector<double> probs;
  std::vector<std::uint8_t> labels;  // prob >= 0.5 maps to 1
};

// Evaluation-mode forward over the graph's own attributes, or with a raw
// attribute override in the same space as g.attrs() (the scaler is applied
// inside). No gradient graph is built.
Prediction predict(NiftyModel& m, const Graph& g);
Prediction predict(NiftyModel& m, const Graph& g, const Matrix& raw_attrs_override);
// Same, but the attributes are already in model space and the adjacency is
// supplied directly; evaluation under perturbed structure uses this.
Prediction predict_scaled(NiftyModel& m, const Matrix& scaled_attrs,
                          std::span<const std::uint32_t> row_ptr,
                          std::span<const std::uint32_t> col_idx);

struct BoundReport {
  double sigma_product = 0.0;
  // max over samples of |ENC(noisy u) - ENC(u)| / (sigma_product * |delta b|)
  double max_stability_ratio = 0.0;
  // max over samples of |ENC(flipped u) - ENC(u)| / sigma_product
  double max_counterfactual_ratio = 0.0;
  std::size_t n_samples = 0;
};

// Empirical check of the norm bounds on a trained model. Each sampled node
// is re-encoded against the original graph's layer activations with only its
// own attribute row perturbed (attribute noise for the stability bound,
// sensitive flip for the counterfactual one); edges stay fixed, the regime
// in which the bound is exact. Perturbations follow the training noise law
// in `noise` (edge_drop_prob is ignored).
BoundReport verify_stability_bound(NiftyModel& m, const Graph& g,
                                   const AugmentConfig& noise,
                                   std::size_t n_samples, std::uint64_t seed);

}  // namespace fairgraph
