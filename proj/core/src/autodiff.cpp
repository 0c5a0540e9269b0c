#include "fairgraph/autodiff.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

#include "fairgraph/errors.hpp"

namespace fairgraph::ad {

namespace detail {

void Node::ensure_grad() {
  if (!grad_live) {
    grad = Matrix(value.rows(), value.cols());
    grad_live = true;
  }
}

void Node::accumulate(const Matrix& g) {
  if (!requires_grad) return;
  ensure_grad();
  add_inplace(grad, g);
}

}  // namespace detail

using detail::Node;

Tensor Tensor::constant(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return Tensor(std::move(n));
}

Tensor Tensor::param(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  return Tensor(std::move(n));
}

const Matrix& Tensor::grad() const {
  if (!node_->grad_live) {
    throw ValidationError(
        "Tensor::grad: no gradient buffer (run zero_grad or backward first)");
  }
  return node_->grad;
}

void Tensor::zero_grad() {
  node_->ensure_grad();
  node_->grad.fill(0.0);
}

namespace {

thread_local bool g_no_grad = false;

}  // namespace

NoGrad::NoGrad() : prev_(g_no_grad) { g_no_grad = true; }
NoGrad::~NoGrad() { g_no_grad = prev_; }

Tensor make_op(Matrix value, std::vector<Tensor> parents,
               std::function<void(Node&)> pull) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  bool needs_grad = false;
  if (!g_no_grad) {
    for (const auto& p : parents) {
      if (p.node()->requires_grad) needs_grad = true;
    }
  }
  // When nothing upstream wants gradients the node degenerates to a
  // constant: no parents retained, no pull. Evaluation-only forward passes
  // therefore build no graph at all.
  if (needs_grad) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node_);
    n->pull = std::move(pull);
  }
  return Tensor(std::move(n));
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.value().same_shape(b.value())) {
    throw ValidationError(std::string(op) + ": shape mismatch (" +
                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                          " vs " + std::to_string(b.rows()) + "x" +
                          std::to_string(b.cols()) + ")");
  }
}

Matrix colsum(const Matrix& g) {
  Matrix out(1, g.cols());
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const double* row = g.row(i);
    for (std::size_t j = 0; j < g.cols(); ++j) out(0, j) += row[j];
  }
  return out;
}

Matrix neighbor_sum_matrix(std::span<const std::uint32_t> row_ptr,
                           std::span<const std::uint32_t> col_idx, const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t u = 0; u + 1 < row_ptr.size(); ++u) {
    double* orow = out.row(u);
    for (std::uint32_t k = row_ptr[u]; k < row_ptr[u + 1]; ++k) {
      const double* xrow = x.row(col_idx[k]);
      for (std::size_t j = 0; j < x.cols(); ++j) orow[j] += xrow[j];
    }
  }
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  Matrix v = fairgraph::matmul(a.value(), b.value());
  return make_op(std::move(v), {a, b}, [a, b](Node& self) {
    if (a.node()->requires_grad) a.node()->accumulate(matmul_nt(self.grad, b.value()));
    if (b.node()->requires_grad) b.node()->accumulate(matmul_tn(a.value(), self.grad));
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Matrix v = a.value();
  add_inplace(v, b.value());
  return make_op(std::move(v), {a, b}, [a, b](Node& self) {
    a.node()->accumulate(self.grad);
    b.node()->accumulate(self.grad);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Matrix v = a.value();
  {
    double* pv = v.data();
    const double* pb = b.value().data();
    for (std::size_t i = 0; i < v.size(); ++i) pv[i] -= pb[i];
  }
  return make_op(std::move(v), {a, b}, [a, b](Node& self) {
    a.node()->accumulate(self.grad);
    if (b.node()->requires_grad) {
      Matrix neg = self.grad;
      double* p = neg.data();
      for (std::size_t i = 0; i < neg.size(); ++i) p[i] = -p[i];
      b.node()->accumulate(neg);
    }
  });
}

Tensor mul_elem(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul_elem");
  Matrix v = a.value();
  {
    double* pv = v.data();
    const double* pb = b.value().data();
    for (std::size_t i = 0; i < v.size(); ++i) pv[i] *= pb[i];
  }
  return make_op(std::move(v), {a, b}, [a, b](Node& self) {
    if (a.node()->requires_grad) {
      Matrix ga = self.grad;
      double* p = ga.data();
      const double* pb = b.value().data();
      for (std::size_t i = 0; i < ga.size(); ++i) p[i] *= pb[i];
      a.node()->accumulate(ga);
    }
    if (b.node()->requires_grad) {
      Matrix gb = self.grad;
      double* p = gb.data();
      const double* pa = a.value().data();
      for (std::size_t i = 0; i < gb.size(); ++i) p[i] *= pa[i];
      b.node()->accumulate(gb);
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  Matrix v = a.value();
  {
    double* p = v.data();
    for (std::size_t i = 0; i < v.size(); ++i) p[i] *= c;
  }
  return make_op(std::move(v), {a}, [a, c](Node& self) {
    Matrix g = self.grad;
    double* p = g.data();
    for (std::size_t i = 0; i < g.size(); ++i) p[i] *= c;
    a.node()->accumulate(g);
  });
}

Tensor add_rowvec(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ValidationError("add_rowvec: row must be 1 x cols(a)");
  }
  Matrix v = a.value();
  for (std::size_t i = 0; i < v.rows(); ++i) {
    double* pr = v.row(i);
    const double* pb = row.value().row(0);
    for (std::size_t j = 0; j < v.cols(); ++j) pr[j] += pb[j];
  }
  return make_op(std::move(v), {a, row}, [a, row](Node& self) {
    a.node()->accumulate(self.grad);
    if (row.node()->requires_grad) row.node()->accumulate(colsum(self.grad));
  });
}

Tensor relu(const Tensor& a) {
  Matrix v = a.value();
  {
    double* p = v.data();
    for (std::size_t i = 0; i < v.size(); ++i) p[i] = p[i] > 0.0 ? p[i] : 0.0;
  }
  return make_op(std::move(v), {a}, [a](Node& self) {
    Matrix g = self.grad;
    double* p = g.data();
    const double* px = a.value().data();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (px[i] <= 0.0) p[i] = 0.0;
    }
    a.node()->accumulate(g);
  });
}

Tensor sigmoid(const Tensor& a) {
  Matrix v = a.value();
  {
    double* p = v.data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      double x = p[i];
      // Evaluate from the non-overflowing side.
      if (x >= 0.0) {
        p[i] = 1.0 / (1.0 + std::exp(-x));
      } else {
        double e = std::exp(x);
        p[i] = e / (1.0 + e);
      }
    }
  }
  return make_op(std::move(v), {a}, [a](Node& self) {
    Matrix g = self.grad;
    double* p = g.data();
    const double* py = self.value.data();
    for (std::size_t i = 0; i < g.size(); ++i) p[i] *= py[i] * (1.0 - py[i]);
    a.node()->accumulate(g);
  });
}

Tensor row_l2_normalize(const Tensor& a, double eps) {
  Matrix v = a.value();
  for (std::size_t i = 0; i < v.rows(); ++i) {
    double n = row_l2_norm(a.value(), i);
    double denom = n > eps ? n : eps;
    double* pr = v.row(i);
    for (std::size_t j = 0; j < v.cols(); ++j) pr[j] /= denom;
  }
  return make_op(std::move(v), {a}, [a, eps](Node& self) {
    Matrix g(self.grad.rows(), self.grad.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
      const double* gr = self.grad.row(i);
      const double* yr = self.value.row(i);
      double* out = g.row(i);
      double n = row_l2_norm(a.value(), i);
      if (n > eps) {
        double dot = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) dot += gr[j] * yr[j];
        for (std::size_t j = 0; j < g.cols(); ++j) out[j] = (gr[j] - yr[j] * dot) / n;
      } else {
        for (std::size_t j = 0; j < g.cols(); ++j) out[j] = gr[j] / eps;
      }
    }
    a.node()->accumulate(g);
  });
}

Tensor neighbor_sum(std::span<const std::uint32_t> row_ptr,
                    std::span<const std::uint32_t> col_idx, const Tensor& a) {
  if (row_ptr.size() != a.rows() + 1) {
    throw ValidationError("neighbor_sum: row_ptr size must be rows + 1");
  }
  Matrix v = neighbor_sum_matrix(row_ptr, col_idx, a.value());
  return make_op(std::move(v), {a}, [a, row_ptr, col_idx](Node& self) {
    // The adjacency is symmetric, so the adjoint is the same aggregation.
    a.node()->accumulate(neighbor_sum_matrix(row_ptr, col_idx, self.grad));
  });
}

Tensor cosine_distance_rows(const Tensor& a, const Tensor& b, double eps) {
  check_same_shape(a, b, "cosine_distance_rows");
  const std::size_t n = a.rows();
  const std::size_t c = a.cols();
  Matrix v(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ar = a.value().row(i);
    const double* br = b.value().row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < c; ++j) dot += ar[j] * br[j];
    double na = row_l2_norm(a.value(), i);
    double nb = row_l2_norm(b.value(), i);
    v(i, 0) = 1.0 - dot / (na * nb + eps);
  }
  return make_op(std::move(v), {a, b}, [a, b, eps](Node& self) {
    const std::size_t n = a.rows();
    const std::size_t c = a.cols();
    Matrix ga(n, c), gb(n, c);
    for (std::size_t i = 0; i < n; ++i) {
      const double gd = self.grad(i, 0);
      if (gd == 0.0) continue;
      const double* ar = a.value().row(i);
      const double* br = b.value().row(i);
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += ar[j] * br[j];
      double na = row_l2_norm(a.value(), i);
      double nb = row_l2_norm(b.value(), i);
      double q = na * nb + eps;
      // d = 1 - dot/q. d(dot)/da = b, dq/da = nb * a / na.
      double ca = (na > 1e-300) ? dot * nb / (na * q * q) : 0.0;
      double cb = (nb > 1e-300) ? dot * na / (nb * q * q) : 0.0;
      double* gar = ga.row(i);
      double* gbr = gb.row(i);
      for (std::size_t j = 0; j < c; ++j) {
        gar[j] = gd * (-br[j] / q + ca * ar[j]);
        gbr[j] = gd * (-ar[j] / q + cb * br[j]);
      }
    }
    a.node()->accumulate(ga);
    b.node()->accumulate(gb);
  });
}

Tensor mean_scalar(const Tensor& a) {
  if (a.value().empty()) throw ValidationError("mean_scalar: empty tensor");
  double s = 0.0;
  const double* p = a.value().data();
  for (std::size_t i = 0; i < a.value().size(); ++i) s += p[i];
  Matrix v(1, 1);
  v(0, 0) = s / static_cast<double>(a.value().size());
  return make_op(std::move(v), {a}, [a](Node& self) {
    const double g = self.grad(0, 0) / static_cast<double>(a.value().size());
    Matrix ga(a.rows(), a.cols(), g);
    a.node()->accumulate(ga);
  });
}

Tensor bce(const Tensor& probs, const std::vector<std::uint8_t>& targets,
           const Mask& mask) {
  constexpr double kLo = 1e-7;
  constexpr double kHi = 1.0 - 1e-7;
  if (probs.cols() != 1) throw ValidationError("bce: probs must be N x 1");
  if (targets.size() != probs.rows() || mask.size() != probs.rows()) {
    throw ValidationError("bce: targets/mask length must match probs rows");
  }
  std::size_t cnt = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    if (targets[i] != 0 && targets[i] != 1) {
      throw ValidationError("bce: node " + std::to_string(i) +
                            " is masked in but has no 0/1 label");
    }
    ++cnt;
    double p = probs.value()(i, 0);
    double pc = p < kLo ? kLo : (p > kHi ? kHi : p);
    sum -= targets[i] ? std::log(pc) : std::log(1.0 - pc);
  }
  if (cnt == 0) throw ValidationError("bce: empty mask");
  Matrix v(1, 1);
  v(0, 0) = sum / static_cast<double>(cnt);
  // Copy what the lambda needs; callers may mutate their vectors afterwards.
  auto tgt = targets;
  auto msk = mask;
  return make_op(std::move(v), {probs}, [probs, tgt, msk, cnt](Node& self) {
    const double g = self.grad(0, 0) / static_cast<double>(cnt);
    Matrix gp(probs.rows(), 1);
    for (std::size_t i = 0; i < msk.size(); ++i) {
      if (!msk[i]) continue;
      double p = probs.value()(i, 0);
      // The clamp is flat outside [kLo, kHi]; no gradient there.
      if (p < kLo || p > kHi) continue;
      double y = static_cast<double>(tgt[i]);
      gp(i, 0) = g * (p - y) / (p * (1.0 - p));
    }
    probs.node()->accumulate(gp);
  });
}

namespace {

thread_local std::vector<Matrix>* g_sg_capture = nullptr;
thread_local const std::vector<Matrix>* g_sg_replay = nullptr;
thread_local std::size_t g_sg_cursor = 0;

}  // namespace

SgCapture::SgCapture(std::vector<Matrix>& store) {
  if (g_sg_capture || g_sg_replay) {
    throw ValidationError("SgCapture: another stop-grad tape is active");
  }
  store.clear();
  g_sg_capture = &store;
}
SgCapture::~SgCapture() { g_sg_capture = nullptr; }

SgReplay::SgReplay(const std::vector<Matrix>& store) {
  if (g_sg_capture || g_sg_replay) {
    throw ValidationError("SgReplay: another stop-grad tape is active");
  }
  g_sg_replay = &store;
  g_sg_cursor = 0;
}
SgReplay::~SgReplay() { g_sg_replay = nullptr; }

Tensor stop_grad(const Tensor& a) {
  if (g_sg_replay) {
    if (g_sg_cursor >= g_sg_replay->size()) {
      throw ValidationError("SgReplay: more stop_grad calls than recorded values");
    }
    const Matrix& recorded = (*g_sg_replay)[g_sg_cursor++];
    if (!recorded.same_shape(a.value())) {
      throw ValidationError("SgReplay: recorded shape does not match");
    }
    return Tensor::constant(recorded);
  }
  Matrix v = a.value();
  if (g_sg_capture) g_sg_capture->push_back(v);
  return Tensor::constant(std::move(v));
}

BatchNormState::BatchNormState(std::size_t c)
    : gamma(Tensor::param(Matrix(1, c, 1.0))),
      beta(Tensor::param(Matrix(1, c, 0.0))),
      running_mean(1, c, 0.0),
      running_var(1, c, 1.0) {}

Tensor batchnorm(const Tensor& a, BatchNormState& bn) {
  const std::size_t n = a.rows();
  const std::size_t c = a.cols();
  if (bn.gamma.cols() != c) {
    throw ValidationError("batchnorm: state width " + std::to_string(bn.gamma.cols()) +
                          " != input width " + std::to_string(c));
  }

  if (!bn.training) {
    Matrix xh(n, c);
    Matrix v(n, c);
    for (std::size_t j = 0; j < c; ++j) {
      const double se = std::sqrt(bn.running_var(0, j) + bn.eps);
      const double mu = bn.running_mean(0, j);
      const double ga = bn.gamma.value()(0, j);
      const double be = bn.beta.value()(0, j);
      for (std::size_t i = 0; i < n; ++i) {
        xh(i, j) = (a.value()(i, j) - mu) / se;
        v(i, j) = ga * xh(i, j) + be;
      }
    }
    Matrix se_row(1, c);
    for (std::size_t j = 0; j < c; ++j) se_row(0, j) = std::sqrt(bn.running_var(0, j) + bn.eps);
    Tensor gamma = bn.gamma;
    Tensor beta = bn.beta;
    return make_op(std::move(v), {a, gamma, beta},
                   [a, gamma, beta, xh, se_row](Node& self) {
                     const std::size_t n = self.grad.rows();
                     const std::size_t c = self.grad.cols();
                     if (gamma.node()->requires_grad) {
                       Matrix dg(1, c), db(1, c);
                       for (std::size_t i = 0; i < n; ++i)
                         for (std::size_t j = 0; j < c; ++j) {
                           dg(0, j) += self.grad(i, j) * xh(i, j);
                           db(0, j) += self.grad(i, j);
                         }
                       gamma.node()->accumulate(dg);
                       beta.node()->accumulate(db);
                     }
                     if (a.node()->requires_grad) {
                       Matrix gx(n, c);
                       for (std::size_t j = 0; j < c; ++j) {
                         const double k = gamma.value()(0, j) / se_row(0, j);
                         for (std::size_t i = 0; i < n; ++i) gx(i, j) = self.grad(i, j) * k;
                       }
                       a.node()->accumulate(gx);
                     }
                   });
  }

  if (n < 2) {
    throw ValidationError("batchnorm: training mode needs at least 2 rows");
  }

  Matrix mu(1, c), var(1, c);
  for (std::size_t j = 0; j < c; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += a.value()(i, j);
    m /= static_cast<double>(n);
    double vv = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double t = a.value()(i, j) - m;
      vv += t * t;
    }
    vv /= static_cast<double>(n);  // biased, used for normalization
    mu(0, j) = m;
    var(0, j) = vv;
  }

  Matrix s(1, c), xh(n, c), v(n, c);
  for (std::size_t j = 0; j < c; ++j) {
    s(0, j) = std::sqrt(var(0, j) + bn.eps);
    const double ga = bn.gamma.value()(0, j);
    const double be = bn.beta.value()(0, j);
    for (std::size_t i = 0; i < n; ++i) {
      xh(i, j) = (a.value()(i, j) - mu(0, j)) / s(0, j);
      v(i, j) = ga * xh(i, j) + be;
    }
  }

  // Fold batch statistics into the running buffers (unbiased variance).
  const double unbias = static_cast<double>(n) / static_cast<double>(n - 1);
  for (std::size_t j = 0; j < c; ++j) {
    bn.running_mean(0, j) =
        (1.0 - bn.momentum) * bn.running_mean(0, j) + bn.momentum * mu(0, j);
    bn.running_var(0, j) =
        (1.0 - bn.momentum) * bn.running_var(0, j) + bn.momentum * var(0, j) * unbias;
  }

  Tensor gamma = bn.gamma;
  Tensor beta = bn.beta;
  return make_op(std::move(v), {a, gamma, beta}, [a, gamma, beta, xh, s](Node& self) {
    const std::size_t n = self.grad.rows();
    const std::size_t c = self.grad.cols();
    if (gamma.node()->requires_grad) {
      Matrix dg(1, c), db(1, c);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) {
          dg(0, j) += self.grad(i, j) * xh(i, j);
          db(0, j) += self.grad(i, j);
        }
      gamma.node()->accumulate(dg);
      beta.node()->accumulate(db);
    }
    if (a.node()->requires_grad) {
      // Standard batch-norm backward, gradients flowing through the batch
      // mean and variance as well.
      Matrix gx(n, c);
      const double invn = 1.0 / static_cast<double>(n);
      for (std::size_t j = 0; j < c; ++j) {
        const double ga = gamma.value()(0, j);
        double sum_dxh = 0.0;
        double sum_dxh_xh = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double dxh = self.grad(i, j) * ga;
          sum_dxh += dxh;
          sum_dxh_xh += dxh * xh(i, j);
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double dxh = self.grad(i, j) * ga;
          gx(i, j) = (dxh - invn * sum_dxh - xh(i, j) * invn * sum_dxh_xh) / s(0, j);
        }
      }
      a.node()->accumulate(gx);
    }
  });
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.rows() != 1 || loss.cols() != 1) {
    throw ValidationError("backward: loss must be a defined 1x1 tensor");
  }
  Node* root = loss.node();
  if (root->backward_done) {
    throw ValidationError("backward: already run on this loss; rebuild the graph first");
  }
  root->backward_done = true;
  if (!root->requires_grad) {
    // Loss does not depend on any parameter; nothing to do.
    return;
  }

  // Iterative DFS, postorder. Reversed postorder is a topological order of
  // the dependency DAG, so each node's gradient is complete before its pull
  // runs. Traversal order is fixed by graph construction order, which keeps
  // accumulation bitwise reproducible.
  std::vector<Node*> postorder;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({root, 0});
  visited.insert(root);
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      Node* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      postorder.push_back(f.node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad(0, 0) = 1.0;
  for (auto it = postorder.rbegin(); it != postorder.rend(); ++it) {
    Node* node = *it;
    if (node->pull) {
      node->ensure_grad();  // a reachable node may still have a zero grad
      node->pull(*node);
    }
  }
}

}  // namespace fairgraph::ad
