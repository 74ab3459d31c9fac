// Reference models sharing the tape engine: a two-layer MLP, SGC (linear
// model over k-step propagated features), and a GCN of configurable depth.
// GCN and SGC use the self-loop-augmented symmetric normalization.
#pragma once

#include "esgnn/model.hpp"

namespace esgnn {

struct MlpParams {
  Matrix w0, b0, w1, b1;
  static MlpParams init(int num_features, int hidden, int num_classes, Rng& rng);
  void visit(const std::function<void(const std::string&, Matrix&, bool)>& fn);
};

struct MlpBound {
  Value w0, b0, w1, b1;
};
Value mlp_forward(Tape& tape, const MlpParams& params, const Features& x, double dropout,
                  bool training, Rng& rng, MlpBound* bound = nullptr);

// Self-loop-augmented edge list (original undirected edges plus one (i,i)
// entry per node); used with unit weights by GCN and SGC.
std::vector<Edge> self_loop_augmented(const Graph& g);

struct SgcParams {
  Matrix w;  // f x C, linear model over propagated features
  static SgcParams init(int num_features, int num_classes, Rng& rng);
  void visit(const std::function<void(const std::string&, Matrix&, bool)>& fn);
};

// Cached Ahat^k X: recomputed only when (graph, source, k) changes; repeated
// calls with the same inputs return the identical matrix.
class SgcPropagation {
 public:
  const Matrix& propagate(const Graph& g, const Matrix& x, int k);

 private:
  const Graph* graph_ = nullptr;
  const Matrix* source_ = nullptr;
  int k_ = -1;
  Matrix cached_;
};

Value sgc_forward(Tape& tape, const SgcParams& params, const Matrix& propagated,
                  Value* bound_w = nullptr);

// depth layers, f -> hidden -> ... -> C, ReLU + dropout between layers.
struct GcnParams {
  std::vector<Matrix> w, b;
  static GcnParams init(int num_features, int hidden, int num_classes, int depth, Rng& rng);
  void visit(const std::function<void(const std::string&, Matrix&, bool)>& fn);
};

struct GcnBound {
  std::vector<Value> w, b;
};
// Logits of the stacked propagation layers; softmax applied by the caller.
Value gcn_forward(Tape& tape, const GcnParams& params, const Graph& graph, const Features& x,
                  double dropout, bool training, Rng& rng, GcnBound* bound = nullptr);

}  // namespace esgnn
