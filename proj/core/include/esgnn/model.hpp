// The edge-splitting GNN: two projection channels, K rounds of residual
// edge scoring followed by per-channel low-pass aggregation on the split
// edge weights, a task head fed by the relevant channel (or both, for the
// dual-head variant), and the irrelevant-consistency regularizer.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "esgnn/dataset.hpp"
#include "esgnn/tensor.hpp"

namespace esgnn {

struct EsGnnConfig {
  int layers = 2;       // K
  int hidden = 64;      // d (split as d/2 per channel); must be even
  double eps_r = 0.5;   // residual scaling, (0,1]
  double eps_ir = 0.5;
  double lambda_icr = 0.0;
  double dropout = 0.5;
  bool dual_head = false;   // head consumes [Z_R | Z_IR]
  bool no_es = false;       // alpha fixed to 0 (uniform split, no g params)
  bool no_icr = false;      // lambda treated as 0 at loss time
  bool icr_weight_grad = false;  // gradient through the agreement weight

  int channel_dim() const { return hidden / 2; }
  int head_dim() const { return dual_head ? hidden : hidden / 2; }
  void validate() const;
};

struct EsGnnParams {
  Matrix w_r, w_ir;       // f x d/2
  Matrix b_r, b_ir;       // 1 x d/2
  std::vector<Matrix> g;  // per layer, 1 x 2d; empty when no_es
  Matrix w_f;             // head_dim x C
  Matrix b_f;             // 1 x C

  static EsGnnParams init(int num_features, int num_classes, const EsGnnConfig& cfg, Rng& rng);
  // `fn(name, matrix, is_weight)`; iteration order is the checkpoint order.
  void visit(const std::function<void(const std::string&, Matrix&, bool)>& fn);
  void visit(const std::function<void(const std::string&, const Matrix&, bool)>& fn) const;
};

// Per-edge coefficients of one layer, a_r + a_ir = 1 per edge.
struct EdgeSplit {
  std::vector<double> a_r, a_ir;
};

// Feature input with an optional CSR fast path for sparse matrices.
class Features {
 public:
  explicit Features(const Matrix& dense, double sparsify_below_density = 0.15);
  Value project(Tape& tape, Value weight) const;  // X * W
  int cols() const { return dense_->cols(); }
  bool sparse() const { return use_sparse_; }

 private:
  const Matrix* dense_;
  SparseMatrix csr_;
  bool use_sparse_ = false;
};

struct EsGnnForward {
  Value logits;  // n x C
  Value probs;   // softmax rows
  Value z_r, z_ir;
  std::vector<std::pair<Value, Value>> splits;  // per layer (a_r, a_ir), E x 1
};

// Channel projection Z_s = ReLU(X W_s + b_s), dropout applied in training.
// Weight/bias leaves must already live on the tape.
std::pair<Value, Value> project_channels(Tape& tape, const EsGnnConfig& cfg, const Features& x,
                                         std::pair<Value, Value> weight_leaves,
                                         std::pair<Value, Value> bias_leaves, bool training,
                                         Rng& rng);

// Full forward pass per the layered algorithm; leaves for all parameters are
// created on the tape and reported through `bound` for gradient extraction.
struct BoundParams {
  Value w_r, w_ir, b_r, b_ir, w_f, b_f;
  std::vector<Value> g;
};
EsGnnForward esgnn_forward(Tape& tape, const EsGnnParams& params, const EsGnnConfig& cfg,
                           const Graph& graph, const Features& x, bool training, Rng& rng,
                           BoundParams* bound = nullptr);

// Irrelevant-consistency penalty: sum over undirected edges of
// (1 - y~_u . y~_v) * ||Z_IR[u] - Z_IR[v]||, where y~ is the one-hot label
// on training nodes and the predicted distribution elsewhere. The agreement
// weight is a stop-gradient coefficient unless cfg.icr_weight_grad.
Value icr_loss(Tape& tape, Value z_ir, Value probs, const Labels& labels,
               const std::vector<int32_t>& train_ids, const std::vector<Edge>& edges,
               const EsGnnConfig& cfg);

// L = L_pred + lambda * L_ICR (lambda forced to 0 for the no_icr variant).
Value esgnn_total_loss(Tape& tape, const EsGnnForward& fwd, const Labels& labels,
                       const std::vector<int32_t>& train_ids, const std::vector<Edge>& edges,
                       const EsGnnConfig& cfg, Value* out_l_pred = nullptr,
                       Value* out_l_icr = nullptr);

// Eval-mode per-layer splits as plain vectors (a_ir computed as 1 - a_r, so
// the pair sums to 1 exactly).
std::vector<EdgeSplit> extract_edge_splits(const Tape& tape, const EsGnnForward& fwd);

}  // namespace esgnn
