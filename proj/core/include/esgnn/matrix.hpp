// Dense row-major double matrix plus a CSR sparse companion. These are the
// only numeric containers in the project; all kernels are written against
// them. Deliberately minimal: what the models and oracles need, nothing more.
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "esgnn/error.hpp"

namespace esgnn {

class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, 0.0) {
    if (rows < 0 || cols < 0) throw ContractError("Matrix: negative dimension");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return a_.size(); }
  bool empty() const { return a_.empty(); }

  double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

  double* row(int i) { return a_.data() + static_cast<size_t>(i) * cols_; }
  const double* row(int i) const { return a_.data() + static_cast<size_t>(i) * cols_; }

  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  void fill(double v) { std::fill(a_.begin(), a_.end(), v); }
  void zero() { fill(0.0); }

  // this += alpha * x
  void axpy(double alpha, const Matrix& x) {
    if (!same_shape(x)) throw ContractError("Matrix::axpy: shape mismatch");
    for (size_t i = 0; i < a_.size(); ++i) a_[i] += alpha * x.a_[i];
  }

  bool all_finite() const;
  double max_abs() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> a_;
};

// C (+)= A * B
void matmul_into(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);
// C (+)= A^T * B
void matmul_tn_into(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);
// C (+)= A * B^T
void matmul_nt_into(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate);

Matrix matmul(const Matrix& a, const Matrix& b);

// Compressed sparse row view of a feature matrix. Used to keep the input
// projection cheap on high-dimensional near-binary features (e.g. bag of
// words); values are kept as doubles so it stays exact.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  static SparseMatrix from_dense(const Matrix& m, double drop_below_abs = 0.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t nnz() const { return values_.size(); }
  double density() const {
    size_t cells = static_cast<size_t>(rows_) * cols_;
    return cells == 0 ? 0.0 : static_cast<double>(nnz()) / static_cast<double>(cells);
  }

  const std::vector<int64_t>& indptr() const { return indptr_; }
  const std::vector<int32_t>& indices() const { return indices_; }
  const std::vector<double>& values() const { return values_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<int64_t> indptr_;
  std::vector<int32_t> indices_;
  std::vector<double> values_;
};

// C (+)= S * B
void spmm_into(const SparseMatrix& s, const Matrix& b, Matrix& c, bool accumulate);
// C (+)= S^T * B
void spmm_tn_into(const SparseMatrix& s, const Matrix& b, Matrix& c, bool accumulate);

}  // namespace esgnn
