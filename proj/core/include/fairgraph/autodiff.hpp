#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "fairgraph/graph.hpp"
#include "fairgraph/matrix.hpp"

namespace fairgraph::ad {

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;                 // allocated on first use, same shape as value
  bool requires_grad = false;
  bool grad_live = false;      // grad allocated and zeroed
  bool backward_done = false;  // only meaningful on a node backward() ran on
  std::vector<std::shared_ptr<Node>> parents;
  // Distributes this node's grad into the parents' grads.
  std::function<void(Node&)> pull;

  void ensure_grad();
  void accumulate(const Matrix& g);
};

}  // namespace detail

// Handle to one node of a dynamically built computation graph. Copies are
// cheap and share the node. Reverse-mode gradients flow from a scalar loss
// back to every reachable node with requires_grad set.
class Tensor {
 public:
  Tensor() = default;

  // Leaf with no gradient; the graph treats it as a fixed input.
  static Tensor constant(Matrix value);
  // Trainable leaf; backward() accumulates into its grad.
  static Tensor param(Matrix value);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  // Mutable access for in-place parameter updates between forward passes.
  Matrix& value() { return node_->value; }

  bool requires_grad() const { return node_->requires_grad; }
  // Throws if no gradient buffer is live (call zero_grad or backward first).
  const Matrix& grad() const;
  void zero_grad();

  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }

  detail::Node* node() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;
  friend Tensor make_op(Matrix, std::vector<Tensor>,
                        std::function<void(detail::Node&)>);
};

// Internal factory shared by all ops: when no parent needs gradients the
// result collapses to a constant and the graph is pruned on the spot.
Tensor make_op(Matrix value, std::vector<Tensor> parents,
               std::function<void(detail::Node&)> pull);

// ---- arithmetic ----
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);       // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul_elem(const Tensor& a, const Tensor& b);  // Hadamard
Tensor scale(const Tensor& a, double c);
// Broadcasts a 1 x C row over every row of a (N x C): affine bias terms.
Tensor add_rowvec(const Tensor& a, const Tensor& row);

// ---- nonlinearities ----
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);

// ---- structured ops ----
// Rows rescaled to unit L2 norm; rows shorter than `eps` are divided by eps
// instead, which keeps the map differentiable there.
Tensor row_l2_normalize(const Tensor& a, double eps = 1e-8);

// Sum of each node's neighbor rows: out[u] = sum over v adjacent to u of
// a[v]. The adjacency is fixed data, not a differentiable input; it must be
// symmetric (both arc directions present), which the Graph/View builders
// guarantee.
Tensor neighbor_sum(std::span<const std::uint32_t> row_ptr,
                    std::span<const std::uint32_t> col_idx, const Tensor& a);

// Per-row cosine distance between a and b (both N x C), returned as N x 1:
// 1 - <a_u, b_u> / (|a_u| |b_u| + eps).
Tensor cosine_distance_rows(const Tensor& a, const Tensor& b, double eps = 1e-8);

// Mean over all entries, 1 x 1.
Tensor mean_scalar(const Tensor& a);

// Mean binary cross-entropy of probabilities over the masked rows. `probs`
// is N x 1; probabilities are clamped to [1e-7, 1 - 1e-7] before the logs
// (gradient is zero where the clamp binds). Throws when the mask is empty.
Tensor bce(const Tensor& probs, const std::vector<std::uint8_t>& targets,
           const Mask& mask);

// Identity on values, wall for gradients: the result is a constant leaf.
Tensor stop_grad(const Tensor& a);

// ---- batch normalization ----
// Column-wise batch norm with trainable gamma/beta and running statistics
// for evaluation mode. Training mode normalizes by the biased batch variance
// and folds the batch mean/variance into the running buffers.
struct BatchNormState {
  Tensor gamma;         // 1 x C
  Tensor beta;          // 1 x C
  Matrix running_mean;  // 1 x C
  Matrix running_var;   // 1 x C, unbiased
  double momentum = 0.1;
  double eps = 1e-5;
  bool training = true;

  explicit BatchNormState(std::size_t c);
};

Tensor batchnorm(const Tensor& a, BatchNormState& bn);

// ---- reverse pass ----
// Seeds the 1 x 1 loss with gradient 1 and walks the graph in reverse
// topological order. Deterministic: identical graphs accumulate in identical
// order, bit for bit. Throws ValidationError on non-scalar losses and on a
// second backward() over the same loss node.
void backward(const Tensor& loss);

// Suppresses graph construction while alive: every op result inside the
// scope is a plain constant, even when its inputs are parameters. Wrap
// evaluation-only forward passes in one to skip gradient bookkeeping.
// Nestable; thread-local.
class NoGrad {
 public:
  NoGrad();
  ~NoGrad();
  NoGrad(const NoGrad&) = delete;
  NoGrad& operator=(const NoGrad&) = delete;

 private:
  bool prev_;
};

// ---- derivative-check support ----
// stop_grad treats its input as a constant, so the function a finite
// difference must probe is the one where those constants stay at their
// recorded values. While an SgCapture is alive, every stop_grad call appends
// its input value to the store; while an SgReplay is alive, stop_grad
// returns the stored values in order instead of the freshly computed ones.
class SgCapture {
 public:
  explicit SgCapture(std::vector<Matrix>& store);
  ~SgCapture();
  SgCapture(const SgCapture&) = delete;
  SgCapture& operator=(const SgCapture&) = delete;
};

class SgReplay {
 public:
  explicit SgReplay(const std::vector<Matrix>& store);
  ~SgReplay();
  SgReplay(const SgReplay&) = delete;
  SgReplay& operator=(const SgReplay&) = delete;
};

}  // namespace fairgraph::ad
