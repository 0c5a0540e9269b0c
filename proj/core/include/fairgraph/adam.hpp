#pragma once

#include <cstdint>
#include <vector>

#include "fairgraph/autodiff.hpp"
#include "fairgraph/matrix.hpp"

namespace fairgraph {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;
};

// Adam with decoupled weight decay: each step first shrinks the weights by
// lr * weight_decay, then applies the bias-corrected moment update from the
// current gradients. Holds handles to the parameter tensors and updates
// their values in place.
class Adam {
 public:
  Adam(std::vector<ad::Tensor> params, AdamConfig cfg);

  void step();
  void zero_grad();

  // Checkpoint access.
  std::int64_t t() const { return t_; }
  std::size_t size() const { return params_.size(); }
  const Matrix& m(std::size_t i) const { return m_.at(i); }
  const Matrix& v(std::size_t i) const { return v_.at(i); }
  void restore(std::int64_t t, std::vector<Matrix> m, std::vector<Matrix> v);

 private:
  std::vector<ad::Tensor> params_;
  AdamConfig cfg_;
  std::int64_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace fairgraph
