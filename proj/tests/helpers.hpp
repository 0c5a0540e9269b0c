// Shared test utilities: scratch directories, a finite-difference gradient
// checker, and an exact small-matrix SVD oracle that power iteration is
// measured against.
#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "fairgraph/autodiff.hpp"
#include "fairgraph/matrix.hpp"

namespace testutil {

// Fresh scratch directory under the system temp root, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("fairgraph_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t n_checked = 0;
};

// Central finite differences against the analytic gradient for every entry
// of every parameter. `loss_fn` must rebuild the loss from the current
// parameter values on each call. Stop-gradient inputs are frozen at the
// values recorded during the analytic pass, so the probed function is the
// one backward() actually differentiates. Entries whose analytic gradient
// is at most `min_grad` in magnitude are skipped (relative error is
// meaningless around zero).
inline GradCheckResult fd_gradcheck(std::vector<fairgraph::ad::Tensor> params,
                                    const std::function<fairgraph::ad::Tensor()>& loss_fn,
                                    double h = 1e-5, double min_grad = 1e-6) {
  namespace ad = fairgraph::ad;
  std::vector<fairgraph::Matrix> tape;
  std::vector<fairgraph::Matrix> analytic;
  {
    ad::SgCapture capture(tape);
    for (auto& p : params) p.zero_grad();
    ad::Tensor loss = loss_fn();
    ad::backward(loss);
    for (auto& p : params) analytic.push_back(p.grad());
  }
  auto eval = [&]() {
    ad::NoGrad ng;
    ad::SgReplay replay(tape);
    return loss_fn().value()(0, 0);
  };
  GradCheckResult res;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    fairgraph::Matrix& w = params[pi].value();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double g = analytic[pi].data()[k];
      if (std::abs(g) <= min_grad) continue;
      const double saved = w.data()[k];
      w.data()[k] = saved + h;
      const double fp = eval();
      w.data()[k] = saved - h;
      const double fm = eval();
      w.data()[k] = saved;
      const double fd = (fp - fm) / (2.0 * h);
      const double rel = std::abs(fd - g) / std::max(std::abs(g), std::abs(fd));
      if (rel > res.max_rel_err) res.max_rel_err = rel;
      ++res.n_checked;
    }
  }
  return res;
}

// Largest singular value by one-sided Jacobi rotations. Quadratically
// convergent and exact to rounding on the small matrices tests use, with no
// dependence on the power-iteration code under test.
inline double svd_max_singular(const fairgraph::Matrix& a_in) {
  using fairgraph::Matrix;
  Matrix a = a_in.rows() >= a_in.cols() ? a_in : fairgraph::transpose(a_in);
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          app += a(i, p) * a(i, p);
          aqq += a(i, q) * a(i, q);
          apq += a(i, p) * a(i, q);
        }
        if (apq == 0.0 || std::abs(apq) <= 1e-15 * std::sqrt(app * aqq)) continue;
        rotated = true;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t =
            (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
      }
    }
    if (!rotated) break;
  }
  double best = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < m; ++i) col += a(i, j) * a(i, j);
    if (col > best) best = col;
  }
  return std::sqrt(best);
}

}  // namespace testutil
