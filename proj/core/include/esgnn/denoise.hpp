// Graph signal denoising oracles: the quadratic objective, its closed-form
// minimizer, the one-step-gradient-descent equivalence check for the
// aggregation layer, and the fixed-point iteration of that layer. All are
// dense, desk-scale reference routes kept independent of the tape engine.
#pragma once

#include <vector>

#include "esgnn/graph.hpp"
#include "esgnn/matrix.hpp"

namespace esgnn {

enum class LaplacianKind { kCombinatorial, kSymNormalized };

struct DenoiseProblem {
  Matrix x;                  // n x d input signal
  std::vector<Edge> edges;   // undirected, one record per edge
  std::vector<double> w;     // per-edge weights, same order
  double xi = 0.0;
  LaplacianKind kind = LaplacianKind::kCombinatorial;
};

// Shared normalization rule with the tape engine: degrees below deg_floor
// are clamped before the inverse square root.
Matrix dense_sym_norm_adjacency(int n, const std::vector<Edge>& edges, const std::vector<double>& w,
                                double deg_floor = 1e-12);
Matrix dense_laplacian(int n, const std::vector<Edge>& edges, const std::vector<double>& w,
                       LaplacianKind kind, double deg_floor = 1e-12);

// ||Z - X||_F^2 + xi * tr(Z^T L Z). The combinatorial trace equals the
// per-undirected-edge sum  sum_e w_e ||Z_u - Z_v||^2.
double objective_value(const DenoiseProblem& problem, const Matrix& z);

// Four-term disentangled objective over a shared edge set with per-edge
// coefficient pairs (a_r, a_ir); requires a_r + a_ir = 1 per edge.
double disentangled_objective(const Matrix& z_r, const Matrix& z_ir, const Matrix& x_r,
                              const Matrix& x_ir, const std::vector<Edge>& edges,
                              const std::vector<double>& a_r, const std::vector<double>& a_ir,
                              double xi);

// Solves (I + xi L) Z = X by dense LU with partial pivoting.
Matrix closed_form_denoise(const DenoiseProblem& problem);

// Max elementwise |difference| between one aggregation step
// eps*Z0 + (1-eps)*Ahat*Zk and one explicit gradient-descent step on the
// channel objective with xi = 1/eps - 1 and stepsize 1/(2+2xi).
double lemma1_check(const Matrix& z0, const Matrix& zk, const std::vector<Edge>& edges,
                    const std::vector<double>& a_r, double eps_r);

struct FixedPointResult {
  Matrix z;
  int iters = 0;
  bool converged = false;
};

// Iterates z <- eps*z0 + (1-eps)*Ahat*z until max change < tol.
FixedPointResult fixed_point_denoise(const Matrix& z0, const std::vector<Edge>& edges,
                                     const std::vector<double>& w, double eps, int max_iters,
                                     double tol);

}  // namespace esgnn
