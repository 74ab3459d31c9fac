#include "esgnn/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace esgnn {

bool Matrix::all_finite() const {
  for (double v : a_)
    if (!std::isfinite(v)) return false;
  return true;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : a_) m = std::max(m, std::fabs(v));
  return m;
}

void matmul_into(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.cols() != b.rows()) throw ContractError("matmul: inner dimension mismatch");
  if (c.rows() != a.rows() || c.cols() != b.cols()) throw ContractError("matmul: output shape mismatch");
  const int m = a.rows(), k = a.cols(), n = b.cols();
  for (int i = 0; i < m; ++i) {
    double* crow = c.row(i);
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    const double* arow = a.row(i);
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b.row(p);
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_tn_into(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.rows() != b.rows()) throw ContractError("matmul_tn: inner dimension mismatch");
  if (c.rows() != a.cols() || c.cols() != b.cols()) throw ContractError("matmul_tn: output shape mismatch");
  if (!accumulate) c.zero();
  const int k = a.rows(), m = a.cols(), n = b.cols();
  for (int p = 0; p < k; ++p) {
    const double* arow = a.row(p);
    const double* brow = b.row(p);
    for (int i = 0; i < m; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* crow = c.row(i);
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt_into(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate) {
  if (a.cols() != b.cols()) throw ContractError("matmul_nt: inner dimension mismatch");
  if (c.rows() != a.rows() || c.cols() != b.rows()) throw ContractError("matmul_nt: output shape mismatch");
  const int m = a.rows(), k = a.cols(), n = b.rows();
  for (int i = 0; i < m; ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int j = 0; j < n; ++j) {
      const double* brow = b.row(j);
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
      if (accumulate)
        crow[j] += s;
      else
        crow[j] = s;
    }
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  matmul_into(a, b, c, false);
  return c;
}

SparseMatrix SparseMatrix::from_dense(const Matrix& m, double drop_below_abs) {
  SparseMatrix s;
  s.rows_ = m.rows();
  s.cols_ = m.cols();
  s.indptr_.assign(static_cast<size_t>(m.rows()) + 1, 0);
  for (int i = 0; i < m.rows(); ++i) {
    const double* r = m.row(i);
    for (int j = 0; j < m.cols(); ++j) {
      if (std::fabs(r[j]) > drop_below_abs) {
        s.indices_.push_back(j);
        s.values_.push_back(r[j]);
      }
    }
    s.indptr_[i + 1] = static_cast<int64_t>(s.values_.size());
  }
  return s;
}

void spmm_into(const SparseMatrix& s, const Matrix& b, Matrix& c, bool accumulate) {
  if (s.cols() != b.rows()) throw ContractError("spmm: inner dimension mismatch");
  if (c.rows() != s.rows() || c.cols() != b.cols()) throw ContractError("spmm: output shape mismatch");
  if (!accumulate) c.zero();
  const int n = b.cols();
  const auto& indptr = s.indptr();
  const auto& indices = s.indices();
  const auto& values = s.values();
  for (int i = 0; i < s.rows(); ++i) {
    double* crow = c.row(i);
    for (int64_t p = indptr[i]; p < indptr[i + 1]; ++p) {
      const double v = values[p];
      const double* brow = b.row(indices[p]);
      for (int j = 0; j < n; ++j) crow[j] += v * brow[j];
    }
  }
}

void spmm_tn_into(const SparseMatrix& s, const Matrix& b, Matrix& c, bool accumulate) {
  if (s.rows() != b.rows()) throw ContractError("spmm_tn: inner dimension mismatch");
  if (c.rows() != s.cols() || c.cols() != b.cols()) throw ContractError("spmm_tn: output shape mismatch");
  if (!accumulate) c.zero();
  const int n = b.cols();
  const auto& indptr = s.indptr();
  const auto& indices = s.indices();
  const auto& values = s.values();
  for (int i = 0; i < s.rows(); ++i) {
    const double* brow = b.row(i);
    for (int64_t p = indptr[i]; p < indptr[i + 1]; ++p) {
      const double v = values[p];
      double* crow = c.row(indices[p]);
      for (int j = 0; j < n; ++j) crow[j] += v * brow[j];
    }
  }
}

}  // namespace esgnn
