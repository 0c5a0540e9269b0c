#include "fairgraph/adam.hpp"

#include <cmath>
#include <string>

#include "fairgraph/errors.hpp"

namespace fairgraph {

Adam::Adam(std::vector<ad::Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (params_.empty()) throw ValidationError("Adam: no parameters");
  if (!(cfg_.lr > 0.0)) throw ValidationError("Adam: lr must be positive");
  if (!(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0)) {
    throw ValidationError("Adam: beta1 must be in [0, 1)");
  }
  if (!(cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0)) {
    throw ValidationError("Adam: beta2 must be in [0, 1)");
  }
  if (!(cfg_.eps > 0.0)) throw ValidationError("Adam: eps must be positive");
  if (!(cfg_.weight_decay >= 0.0)) {
    throw ValidationError("Adam: weight_decay must be non-negative");
  }
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    if (!p.defined() || !p.requires_grad()) {
      throw ValidationError("Adam: parameter " + std::to_string(i) +
                            " is not a trainable tensor");
    }
    m_.emplace_back(p.rows(), p.cols());
    v_.emplace_back(p.rows(), p.cols());
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Matrix& w = params_[i].value();
    const Matrix& g = params_[i].grad();
    double* pw = w.data();
    const double* pg = g.data();
    double* pm = m_[i].data();
    double* pv = v_[i].data();
    for (std::size_t k = 0; k < w.size(); ++k) {
      pw[k] -= cfg_.lr * cfg_.weight_decay * pw[k];
      pm[k] = cfg_.beta1 * pm[k] + (1.0 - cfg_.beta1) * pg[k];
      pv[k] = cfg_.beta2 * pv[k] + (1.0 - cfg_.beta2) * pg[k] * pg[k];
      const double mhat = pm[k] / bc1;
      const double vhat = pv[k] / bc2;
      pw[k] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void Adam::restore(std::int64_t t, std::vector<Matrix> m, std::vector<Matrix> v) {
  if (t < 0) throw ValidationError("Adam::restore: negative step count");
  if (m.size() != params_.size() || v.size() != params_.size()) {
    throw ValidationError("Adam::restore: moment count does not match parameters");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!m[i].same_shape(params_[i].value()) || !v[i].same_shape(params_[i].value())) {
      throw ValidationError("Adam::restore: moment " + std::to_string(i) +
                            " has the wrong shape");
    }
  }
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace fairgraph
