#include "esgnn/baselines.hpp"

namespace esgnn {

MlpParams MlpParams::init(int num_features, int hidden, int num_classes, Rng& rng) {
  MlpParams p;
  p.w0 = glorot_uniform(num_features, hidden, rng);
  p.b0 = Matrix(1, hidden);
  p.w1 = glorot_uniform(hidden, num_classes, rng);
  p.b1 = Matrix(1, num_classes);
  return p;
}

void MlpParams::visit(const std::function<void(const std::string&, Matrix&, bool)>& fn) {
  fn("w0", w0, true);
  fn("b0", b0, false);
  fn("w1", w1, true);
  fn("b1", b1, false);
}

Value mlp_forward(Tape& tape, const MlpParams& params, const Features& x, double dropout,
                  bool training, Rng& rng, MlpBound* bound) {
  MlpBound leaves{tape.leaf(params.w0), tape.leaf(params.b0), tape.leaf(params.w1),
                  tape.leaf(params.b1)};
  Value h = tape.relu(tape.add_bias(x.project(tape, leaves.w0), leaves.b0));
  h = tape.dropout(h, dropout, training, rng);
  Value logits = tape.add_bias(tape.matmul(h, leaves.w1), leaves.b1);
  if (bound) *bound = leaves;
  return logits;
}

std::vector<Edge> self_loop_augmented(const Graph& g) {
  std::vector<Edge> edges = g.edges();
  edges.reserve(edges.size() + g.num_nodes());
  for (int32_t i = 0; i < g.num_nodes(); ++i) edges.push_back({i, i});
  return edges;
}

SgcParams SgcParams::init(int num_features, int num_classes, Rng& rng) {
  SgcParams p;
  p.w = glorot_uniform(num_features, num_classes, rng);
  return p;
}

void SgcParams::visit(const std::function<void(const std::string&, Matrix&, bool)>& fn) {
  fn("w", w, true);
}

const Matrix& SgcPropagation::propagate(const Graph& g, const Matrix& x, int k) {
  if (k < 1) throw ContractError("SgcPropagation: k must be >= 1");
  if (graph_ == &g && source_ == &x && k_ == k) return cached_;
  const std::vector<Edge> edges = self_loop_augmented(g);
  Matrix ones(static_cast<int>(edges.size()), 1);
  ones.fill(1.0);
  // No-gradient pass through the shared aggregation kernel.
  Matrix current = x;
  for (int step = 0; step < k; ++step) {
    Tape tape;
    Value out = tape.edge_weighted_aggregate(tape.constant(std::move(current)), edges,
                                             tape.constant(ones));
    current = tape.val(out);
  }
  graph_ = &g;
  source_ = &x;
  k_ = k;
  cached_ = std::move(current);
  return cached_;
}

Value sgc_forward(Tape& tape, const SgcParams& params, const Matrix& propagated, Value* bound_w) {
  Value w = tape.leaf(params.w);
  if (bound_w) *bound_w = w;
  return tape.matmul(tape.constant(propagated), w);
}

GcnParams GcnParams::init(int num_features, int hidden, int num_classes, int depth, Rng& rng) {
  if (depth < 1) throw ContractError("GcnParams: depth must be >= 1");
  GcnParams p;
  int in = num_features;
  for (int layer = 0; layer < depth; ++layer) {
    const int out = layer + 1 == depth ? num_classes : hidden;
    p.w.push_back(glorot_uniform(in, out, rng));
    p.b.push_back(Matrix(1, out));
    in = out;
  }
  return p;
}

void GcnParams::visit(const std::function<void(const std::string&, Matrix&, bool)>& fn) {
  for (size_t i = 0; i < w.size(); ++i) {
    fn("w" + std::to_string(i), w[i], true);
    fn("b" + std::to_string(i), b[i], false);
  }
}

Value gcn_forward(Tape& tape, const GcnParams& params, const Graph& graph, const Features& x,
                  double dropout, bool training, Rng& rng, GcnBound* bound) {
  const std::vector<Edge> edges = self_loop_augmented(graph);
  Matrix ones(static_cast<int>(edges.size()), 1);
  ones.fill(1.0);
  Value unit_w = tape.constant(std::move(ones));

  GcnBound leaves;
  for (size_t i = 0; i < params.w.size(); ++i) {
    leaves.w.push_back(tape.leaf(params.w[i]));
    leaves.b.push_back(tape.leaf(params.b[i]));
  }
  Value h{-1};
  for (size_t layer = 0; layer < params.w.size(); ++layer) {
    Value pre = layer == 0 ? x.project(tape, leaves.w[layer])
                           : tape.matmul(h, leaves.w[layer]);
    Value agg = tape.edge_weighted_aggregate(pre, edges, unit_w);
    h = tape.add_bias(agg, leaves.b[layer]);
    if (layer + 1 < params.w.size()) {
      h = tape.relu(h);
      h = tape.dropout(h, dropout, training, rng);
    }
  }
  if (bound) *bound = leaves;
  return h;
}

}  // namespace esgnn
