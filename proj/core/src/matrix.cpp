#include "fairgraph/matrix.hpp"

#include <cmath>

#include "fairgraph/errors.hpp"

namespace fairgraph {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(rows.size(), rows.size() ? rows.begin()->size() : 0);
  std::size_t r = 0;
  for (const auto& row : rows) {
    if (row.size() != m.cols()) {
      throw ValidationError("Matrix::from_rows: ragged initializer");
    }
    std::size_t c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ValidationError("matmul: inner dimensions differ (" +
                          std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()) + ")");
  }
  Matrix c(a.rows(), b.cols());
  // i-k-j order: both inner accesses stride contiguously.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* crow = c.row(i);
    const double* arow = a.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      double av = arow[k];
      if (av == 0.0) continue;
      const double* brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ValidationError("matmul_tn: row counts differ");
  }
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    const double* brow = b.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      double av = arow[k];
      if (av == 0.0) continue;
      double* crow = c.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ValidationError("matmul_nt: column counts differ");
  }
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
      c(i, j) = s;
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

void add_inplace(Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ValidationError("add_inplace: shape mismatch");
  double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
}

double frobenius_norm(const Matrix& a) {
  double s = 0.0;
  const double* p = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) s += p[i] * p[i];
  return std::sqrt(s);
}

double row_l2_norm(const Matrix& a, std::size_t r) {
  double s = 0.0;
  const double* p = a.row(r);
  for (std::size_t j = 0; j < a.cols(); ++j) s += p[j] * p[j];
  return std::sqrt(s);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ValidationError("max_abs_diff: shape mismatch");
  double m = 0.0;
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = std::fabs(pa[i] - pb[i]);
    if (d > m) m = d;
  }
  return m;
}

}  // namespace fairgraph
