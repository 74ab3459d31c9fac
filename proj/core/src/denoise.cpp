#include "esgnn/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace esgnn {

namespace {

constexpr int kMaxOracleNodes = 4096;

void check_problem(int n, const std::vector<Edge>& edges, const std::vector<double>& w) {
  if (edges.size() != w.size()) throw ContractError("denoise: weight count does not match edge count");
  for (const Edge& e : edges)
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) throw ContractError("denoise: edge out of range");
}

std::vector<double> degrees(int n, const std::vector<Edge>& edges, const std::vector<double>& w) {
  std::vector<double> deg(n, 0.0);
  for (size_t e = 0; e < edges.size(); ++e) {
    deg[edges[e].u] += w[e];
    if (edges[e].u != edges[e].v) deg[edges[e].v] += w[e];
  }
  return deg;
}

// LU with partial pivoting, solving in place for all columns of b.
Matrix solve_dense(Matrix a, Matrix b) {
  const int n = a.rows();
  if (a.cols() != n || b.rows() != n) throw ContractError("solve_dense: shape mismatch");
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::fabs(a(k, k));
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(a(i, k)) > best) {
        best = std::fabs(a(i, k));
        piv = i;
      }
    if (best == 0.0) throw NumericError("solve_dense: singular matrix");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      for (int j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(piv, j));
    }
    for (int i = k + 1; i < n; ++i) {
      const double factor = a(i, k) / a(k, k);
      a(i, k) = 0.0;
      if (factor == 0.0) continue;
      for (int j = k + 1; j < n; ++j) a(i, j) -= factor * a(k, j);
      for (int j = 0; j < b.cols(); ++j) b(i, j) -= factor * b(k, j);
    }
  }
  for (int k = n - 1; k >= 0; --k) {
    for (int j = 0; j < b.cols(); ++j) {
      double s = b(k, j);
      for (int m = k + 1; m < n; ++m) s -= a(k, m) * b(m, j);
      b(k, j) = s / a(k, k);
    }
  }
  return b;
}

}  // namespace

Matrix dense_sym_norm_adjacency(int n, const std::vector<Edge>& edges, const std::vector<double>& w,
                                double deg_floor) {
  check_problem(n, edges, w);
  const std::vector<double> deg = degrees(n, edges, w);
  std::vector<double> inv_sqrt(n);
  for (int i = 0; i < n; ++i) inv_sqrt[i] = 1.0 / std::sqrt(std::max(deg[i], deg_floor));
  Matrix adj(n, n);
  for (size_t e = 0; e < edges.size(); ++e) {
    const auto [u, v] = edges[e];
    const double coef = w[e] * inv_sqrt[u] * inv_sqrt[v];
    adj(u, v) += coef;
    if (u != v) adj(v, u) += coef;
  }
  return adj;
}

Matrix dense_laplacian(int n, const std::vector<Edge>& edges, const std::vector<double>& w,
                       LaplacianKind kind, double deg_floor) {
  check_problem(n, edges, w);
  Matrix lap(n, n);
  if (kind == LaplacianKind::kCombinatorial) {
    const std::vector<double> deg = degrees(n, edges, w);
    for (int i = 0; i < n; ++i) lap(i, i) = deg[i];
    for (size_t e = 0; e < edges.size(); ++e) {
      const auto [u, v] = edges[e];
      if (u == v) {
        lap(u, u) -= w[e];  // self loop contributes nothing to D - A
        continue;
      }
      lap(u, v) -= w[e];
      lap(v, u) -= w[e];
    }
  } else {
    Matrix adj = dense_sym_norm_adjacency(n, edges, w, deg_floor);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) lap(i, j) = (i == j ? 1.0 : 0.0) - adj(i, j);
  }
  return lap;
}

double objective_value(const DenoiseProblem& problem, const Matrix& z) {
  if (!problem.x.same_shape(z)) throw ContractError("objective_value: Z shape mismatch");
  const int n = problem.x.rows();
  check_problem(n, problem.edges, problem.w);
  double fidelity = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < z.cols(); ++j) {
      const double d = z(i, j) - problem.x(i, j);
      fidelity += d * d;
    }
  double smooth = 0.0;
  if (problem.kind == LaplacianKind::kCombinatorial) {
    // Per-undirected-edge sum, each edge counted once.
    for (size_t e = 0; e < problem.edges.size(); ++e) {
      const auto [u, v] = problem.edges[e];
      double d2 = 0.0;
      for (int j = 0; j < z.cols(); ++j) {
        const double d = z(u, j) - z(v, j);
        d2 += d * d;
      }
      smooth += problem.w[e] * d2;
    }
  } else {
    Matrix lap = dense_laplacian(n, problem.edges, problem.w, problem.kind);
    Matrix lz(n, z.cols());
    matmul_into(lap, z, lz, false);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < z.cols(); ++j) smooth += z(i, j) * lz(i, j);
  }
  return fidelity + problem.xi * smooth;
}

double disentangled_objective(const Matrix& z_r, const Matrix& z_ir, const Matrix& x_r,
                              const Matrix& x_ir, const std::vector<Edge>& edges,
                              const std::vector<double>& a_r, const std::vector<double>& a_ir,
                              double xi) {
  if (!z_r.same_shape(x_r) || !z_ir.same_shape(x_ir)) throw ContractError("disentangled_objective: shape mismatch");
  if (a_r.size() != edges.size() || a_ir.size() != edges.size())
    throw ContractError("disentangled_objective: coefficient count mismatch");
  for (size_t e = 0; e < edges.size(); ++e)
    if (std::fabs(a_r[e] + a_ir[e] - 1.0) > 1e-12)
      throw ContractError("disentangled_objective: a_r + a_ir must equal 1 per edge");
  double acc = 0.0;
  for (int i = 0; i < z_r.rows(); ++i)
    for (int j = 0; j < z_r.cols(); ++j) {
      const double dr = z_r(i, j) - x_r(i, j);
      const double di = z_ir(i, j) - x_ir(i, j);
      acc += dr * dr + di * di;
    }
  for (size_t e = 0; e < edges.size(); ++e) {
    const auto [u, v] = edges[e];
    double sr = 0.0, si = 0.0;
    for (int j = 0; j < z_r.cols(); ++j) {
      const double dr = z_r(u, j) - z_r(v, j);
      sr += dr * dr;
    }
    for (int j = 0; j < z_ir.cols(); ++j) {
      const double di = z_ir(u, j) - z_ir(v, j);
      si += di * di;
    }
    acc += xi * (a_r[e] * sr + a_ir[e] * si);
  }
  return acc;
}

Matrix closed_form_denoise(const DenoiseProblem& problem) {
  const int n = problem.x.rows();
  if (n > kMaxOracleNodes)
    throw CapabilityError("closed_form_denoise: dense oracle limited to " +
                          std::to_string(kMaxOracleNodes) + " nodes");
  if (problem.xi < 0) throw ContractError("closed_form_denoise: xi must be nonnegative");
  Matrix system = dense_laplacian(n, problem.edges, problem.w, problem.kind);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) system(i, j) = (i == j ? 1.0 : 0.0) + problem.xi * system(i, j);
  return solve_dense(std::move(system), problem.x);
}

double lemma1_check(const Matrix& z0, const Matrix& zk, const std::vector<Edge>& edges,
                    const std::vector<double>& a_r, double eps_r) {
  if (eps_r <= 0 || eps_r > 1) throw ContractError("lemma1_check: eps must lie in (0,1]");
  if (!z0.same_shape(zk)) throw ContractError("lemma1_check: shape mismatch");
  const int n = z0.rows();
  Matrix adj = dense_sym_norm_adjacency(n, edges, a_r, 1e-12);

  // Path A: the aggregation layer.
  Matrix agg(n, z0.cols());
  matmul_into(adj, zk, agg, false);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < z0.cols(); ++j) agg(i, j) = eps_r * z0(i, j) + (1.0 - eps_r) * agg(i, j);

  // Path B: one gradient-descent step on ||Z - Z0||^2 + xi tr(Z^T L Z) with
  // the normalized laplacian L = I - Ahat, xi = 1/eps - 1, beta = 1/(2+2xi).
  const double xi = 1.0 / eps_r - 1.0;
  const double beta = 1.0 / (2.0 + 2.0 * xi);
  Matrix lap_z(n, z0.cols());
  matmul_into(adj, zk, lap_z, false);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < z0.cols(); ++j) lap_z(i, j) = zk(i, j) - lap_z(i, j);  // L Zk
  double max_dev = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < z0.cols(); ++j) {
      const double grad = 2.0 * (zk(i, j) - z0(i, j)) + 2.0 * xi * lap_z(i, j);
      const double stepped = zk(i, j) - beta * grad;
      max_dev = std::max(max_dev, std::fabs(stepped - agg(i, j)));
    }
  return max_dev;
}

FixedPointResult fixed_point_denoise(const Matrix& z0, const std::vector<Edge>& edges,
                                     const std::vector<double>& w, double eps, int max_iters,
                                     double tol) {
  if (eps <= 0 || eps >= 1) throw ContractError("fixed_point_denoise: eps must lie in (0,1)");
  const int n = z0.rows();
  Matrix adj = dense_sym_norm_adjacency(n, edges, w, 1e-12);
  FixedPointResult res;
  res.z = z0;
  Matrix next(n, z0.cols());
  for (int it = 1; it <= max_iters; ++it) {
    matmul_into(adj, res.z, next, false);
    double change = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < z0.cols(); ++j) {
        const double v = eps * z0(i, j) + (1.0 - eps) * next(i, j);
        change = std::max(change, std::fabs(v - res.z(i, j)));
        next(i, j) = v;
      }
    std::swap(res.z, next);
    res.iters = it;
    if (change < tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace esgnn
