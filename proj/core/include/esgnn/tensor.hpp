// Reverse-mode differentiation over dense matrices, plus the edge-weighted
// symmetric-normalized aggregation primitive the models are built from.
//
// A Tape owns all intermediate values of one forward pass; Value is a cheap
// handle into it. Ops append nodes in topological order, so backward() is a
// single reverse sweep. Leaves that do not require gradients (input
// features, constant edge weights) skip their gradient accumulation paths.
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "esgnn/graph.hpp"
#include "esgnn/matrix.hpp"
#include "esgnn/rng.hpp"

namespace esgnn {

struct Value {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Value leaf(Matrix m, bool requires_grad = true);
  Value constant(Matrix m) { return leaf(std::move(m), false); }

  const Matrix& val(Value v) const { return nodes_[check(v)].value; }
  const Matrix& grad(Value v) const { return nodes_[check(v)].grad; }
  bool requires_grad(Value v) const { return nodes_[check(v)].needs_grad; }

  // --- core ops -----------------------------------------------------------
  Value matmul(Value a, Value b);
  // S is a constant left factor (typically the input feature matrix).
  Value sparse_matmul(const SparseMatrix& s, Value b);
  Value add(Value a, Value b);
  // alpha * x + beta, elementwise
  Value scale_shift(Value x, double alpha, double beta);
  // a + alpha * b
  Value add_scaled(Value a, Value b, double alpha);
  Value add_bias(Value z, Value bias);  // bias is 1 x cols
  Value relu(Value x);
  Value tanh_act(Value x);
  Value concat_cols(const std::vector<Value>& xs);
  // Inverted dropout: kept entries scaled by 1/(1-p). Identity when not
  // training or p == 0.
  Value dropout(Value x, double p, bool training, Rng& rng);
  Value row_gather(Value x, const std::vector<int32_t>& ids);
  Value softmax_rows(Value x);
  // Mean over `ids` of -log(max(p_label, 1e-12)) with p = softmax(logits).
  Value cross_entropy(Value logits, const Labels& labels, const std::vector<int32_t>& ids);
  // Per-edge L2 distance between rows: out_e = ||Z_u - Z_v||_2, shape E x 1.
  Value l2_rowdiff(Value z, const std::vector<Edge>& edges);
  // Per-edge dot product of rows: out_e = y_u . y_v, shape E x 1.
  Value rows_dot_edges(Value y, const std::vector<Edge>& edges);
  Value mul_elem(Value a, Value b);
  Value sum_all(Value x);  // 1x1
  // sum_e w_e * x_e with constant weights (stop-gradient coefficients).
  Value weighted_sum(Value x, const std::vector<double>& w);
  // Rows in `ids` replaced by the corresponding rows of `rows` (constant);
  // gradient flows only through untouched rows.
  Value replace_rows_const(Value x, const std::vector<int32_t>& ids, const Matrix& rows);

  // Residual edge scores: alpha_e = (tanh(p_u + q_v) + tanh(p_v + q_u)) / 2
  // where p_i = Zr_i . g1 + Zir_i . g2, q_i = Zr_i . g3 + Zir_i . g4 and g
  // is the 1 x 2d scoring vector split into four equal chunks. Shape E x 1.
  Value edge_scores(Value z_r, Value z_ir, Value g, const std::vector<Edge>& edges);

  // out_i = sum_{j in N(i)} w_ij * Z_j / sqrt(d_i d_j), d_i = max(sum_j w_ij,
  // deg_floor). Edges are undirected and applied symmetrically; self-loop
  // entries (u == v) contribute once. Differentiable in Z and w.
  Value edge_weighted_aggregate(Value z, const std::vector<Edge>& edges, Value w,
                                double deg_floor = 1e-12);

  void backward(Value loss);

  int degree_clamp_count() const { return degree_clamps_; }
  size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    const char* op = "leaf";
    std::function<void()> backprop;  // empty for leaves
  };

  int32_t check(Value v) const {
    if (!v.valid() || v.id >= static_cast<int32_t>(nodes_.size()))
      throw ContractError("Tape: dangling value handle");
    return v.id;
  }
  Value push(Matrix value, bool needs_grad, const char* op, std::function<void()> backprop);
  Matrix& grad_mut(Value v) { return nodes_[check(v)].grad; }

  std::vector<Node> nodes_;
  int degree_clamps_ = 0;
};

// --- Adam ------------------------------------------------------------------

struct AdamState {
  std::vector<Matrix> m, v;  // aligned with the parameter list
  int64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction; weight decay is coupled L2 (added to
// the gradient), applied per-parameter.
void adam_step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
               AdamState& state, double lr, const std::vector<double>& weight_decay);

// --- gradient checking -------------------------------------------------------

// Builds a scalar loss from leaves bound to `params` on a fresh tape.
using LossBuilder = std::function<Value(Tape&, const std::vector<Value>&)>;

struct GradCheckReport {
  double max_rel_err = 0.0;
  int worst_param = -1;
  int worst_index = -1;
};

// Compares tape gradients against central finite differences
// (f(x+h)-f(x-h))/2h, relative error with denominator max(|a|,|b|,1e-8).
GradCheckReport grad_check(const LossBuilder& build, const std::vector<Matrix>& params, double h);

}  // namespace esgnn
