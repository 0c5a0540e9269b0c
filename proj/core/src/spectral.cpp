#include "fairgraph/spectral.hpp"

#include <cmath>
#include <vector>

#include "fairgraph/errors.hpp"
#include "fairgraph/rng.hpp"

namespace fairgraph {

namespace {

double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// y = W x
void mul(const Matrix& w, const std::vector<double>& x, std::vector<double>& y) {
  y.assign(w.rows(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double* row = w.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) s += row[j] * x[j];
    y[i] = s;
  }
}

// y = W^T x
void mul_t(const Matrix& w, const std::vector<double>& x, std::vector<double>& y) {
  y.assign(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double* row = w.row(i);
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < w.cols(); ++j) y[j] += row[j] * xi;
  }
}

}  // namespace

double spectral_norm(const Matrix& w, int max_iters, double tol) {
  if (w.empty()) throw ValidationError("spectral_norm: empty matrix");
  if (max_iters < 1) throw ValidationError("spectral_norm: max_iters must be >= 1");
  if (!(tol > 0.0)) throw ValidationError("spectral_norm: tol must be positive");

  bool all_zero = true;
  for (std::size_t i = 0; i < w.size() && all_zero; ++i) {
    if (w.data()[i] != 0.0) all_zero = false;
  }
  if (all_zero) return 0.0;

  // Iterate on the shorter side so each step touches the smaller Gram
  // matrix. Either way the dominant singular value is the same.
  const bool tall = w.rows() >= w.cols();
  const std::size_t dim = tall ? w.cols() : w.rows();

  Rng rng(derive_seed(0, "spectral-start"));
  std::vector<double> v(dim);
  for (double& x : v) x = rng.normal();
  {
    double n = vec_norm(v);
    for (double& x : v) x /= n;
  }

  std::vector<double> y, z;
  double sigma = 0.0;
  double prev = -1.0;
  for (int iter = 0; iter < max_iters; ++iter) {
    if (tall) {
      mul(w, v, y);    // y = W v
      sigma = vec_norm(y);
      if (sigma == 0.0) break;  // start direction fell in the null space
      mul_t(w, y, z);  // z = W^T W v
    } else {
      mul_t(w, v, y);  // y = W^T v
      sigma = vec_norm(y);
      if (sigma == 0.0) break;
      mul(w, y, z);    // z = W W^T v
    }
    double nz = vec_norm(z);
    if (nz == 0.0) break;
    for (std::size_t j = 0; j < dim; ++j) v[j] = z[j] / nz;
    if (prev >= 0.0 && std::abs(sigma - prev) <= tol * sigma) break;
    prev = sigma;
  }
  return sigma;
}

void lipschitz_normalize(Matrix& w) {
  double sigma = spectral_norm(w, 1000, 1e-13);
  if (sigma == 0.0) {
    throw ValidationError("lipschitz_normalize: all-zero matrix");
  }
  double* p = w.data();
  for (std::size_t i = 0; i < w.size(); ++i) p[i] /= sigma;
}

}  // namespace fairgraph
