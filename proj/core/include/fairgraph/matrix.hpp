#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace fairgraph {

// Dense row-major matrix of doubles. This is the only numeric container the
// library uses; everything (attribute tables, embeddings, weights, gradients)
// is one of these.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  void fill(double v) { data_.assign(data_.size(), v); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// c = a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// c = a^T * b (no materialized transpose)
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// c = a * b^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

void add_inplace(Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);
double row_l2_norm(const Matrix& a, std::size_t r);
// max |a - b| over all entries; shapes must match.
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace fairgraph
