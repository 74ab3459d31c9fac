#include "esgnn/model.hpp"

#include <cmath>

namespace esgnn {

void EsGnnConfig::validate() const {
  if (layers < 1) throw ContractError("EsGnnConfig: layers must be >= 1");
  if (hidden < 2 || hidden % 2 != 0) throw ContractError("EsGnnConfig: hidden width must be even and >= 2");
  if (eps_r <= 0 || eps_r > 1 || eps_ir <= 0 || eps_ir > 1)
    throw ContractError("EsGnnConfig: eps must lie in (0,1]");
  if (lambda_icr < 0) throw ContractError("EsGnnConfig: lambda_icr must be nonnegative");
  if (dropout < 0 || dropout >= 1) throw ContractError("EsGnnConfig: dropout must lie in [0,1)");
}

EsGnnParams EsGnnParams::init(int num_features, int num_classes, const EsGnnConfig& cfg, Rng& rng) {
  cfg.validate();
  EsGnnParams p;
  const int half = cfg.channel_dim();
  p.w_r = glorot_uniform(num_features, half, rng);
  p.w_ir = glorot_uniform(num_features, half, rng);
  p.b_r = Matrix(1, half);
  p.b_ir = Matrix(1, half);
  if (!cfg.no_es)
    for (int k = 0; k < cfg.layers; ++k) p.g.push_back(glorot_uniform(1, 2 * cfg.hidden, rng));
  p.w_f = glorot_uniform(cfg.head_dim(), num_classes, rng);
  p.b_f = Matrix(1, num_classes);
  return p;
}

void EsGnnParams::visit(const std::function<void(const std::string&, Matrix&, bool)>& fn) {
  fn("w_r", w_r, true);
  fn("w_ir", w_ir, true);
  fn("b_r", b_r, false);
  fn("b_ir", b_ir, false);
  for (size_t k = 0; k < g.size(); ++k) fn("g" + std::to_string(k), g[k], true);
  fn("w_f", w_f, true);
  fn("b_f", b_f, false);
}

void EsGnnParams::visit(const std::function<void(const std::string&, const Matrix&, bool)>& fn) const {
  const_cast<EsGnnParams*>(this)->visit(
      [&fn](const std::string& name, Matrix& m, bool w) { fn(name, m, w); });
}

Features::Features(const Matrix& dense, double sparsify_below_density) : dense_(&dense) {
  SparseMatrix csr = SparseMatrix::from_dense(dense);
  if (csr.density() <= sparsify_below_density) {
    csr_ = std::move(csr);
    use_sparse_ = true;
  }
}

Value Features::project(Tape& tape, Value weight) const {
  if (use_sparse_) return tape.sparse_matmul(csr_, weight);
  return tape.matmul(tape.constant(*dense_), weight);
}

std::pair<Value, Value> project_channels(Tape& tape, const EsGnnConfig& cfg, const Features& x,
                                         std::pair<Value, Value> weight_leaves,
                                         std::pair<Value, Value> bias_leaves, bool training,
                                         Rng& rng) {
  Value z_r = tape.relu(tape.add_bias(x.project(tape, weight_leaves.first), bias_leaves.first));
  Value z_ir = tape.relu(tape.add_bias(x.project(tape, weight_leaves.second), bias_leaves.second));
  z_r = tape.dropout(z_r, cfg.dropout, training, rng);
  z_ir = tape.dropout(z_ir, cfg.dropout, training, rng);
  return {z_r, z_ir};
}

EsGnnForward esgnn_forward(Tape& tape, const EsGnnParams& params, const EsGnnConfig& cfg,
                           const Graph& graph, const Features& x, bool training, Rng& rng,
                           BoundParams* bound) {
  cfg.validate();
  if (x.cols() != params.w_r.rows()) throw ContractError("esgnn_forward: feature width mismatch");
  const std::vector<Edge>& edges = graph.edges();

  BoundParams leaves;
  leaves.w_r = tape.leaf(params.w_r);
  leaves.w_ir = tape.leaf(params.w_ir);
  leaves.b_r = tape.leaf(params.b_r);
  leaves.b_ir = tape.leaf(params.b_ir);
  for (const Matrix& g : params.g) leaves.g.push_back(tape.leaf(g));
  leaves.w_f = tape.leaf(params.w_f);
  leaves.b_f = tape.leaf(params.b_f);

  auto [z0_r, z0_ir] = project_channels(tape, cfg, x, {leaves.w_r, leaves.w_ir},
                                        {leaves.b_r, leaves.b_ir}, training, rng);

  EsGnnForward fwd;
  Value z_r = z0_r, z_ir = z0_ir;
  for (int k = 0; k < cfg.layers; ++k) {
    Value a_r, a_ir;
    if (cfg.no_es) {
      Matrix half(static_cast<int>(edges.size()), 1);
      half.fill(0.5);
      a_r = tape.constant(half);
      a_ir = tape.constant(std::move(half));
    } else {
      Value alpha = tape.edge_scores(z_r, z_ir, leaves.g[k], edges);
      alpha = tape.dropout(alpha, cfg.dropout, training, rng);
      a_r = tape.scale_shift(alpha, 0.5, 0.5);
      a_ir = tape.scale_shift(a_r, -1.0, 1.0);  // exact 1 - a_r
    }
    fwd.splits.push_back({a_r, a_ir});
    Value agg_r = tape.edge_weighted_aggregate(z_r, edges, a_r);
    Value agg_ir = tape.edge_weighted_aggregate(z_ir, edges, a_ir);
    z_r = tape.add_scaled(tape.scale_shift(z0_r, cfg.eps_r, 0.0), agg_r, 1.0 - cfg.eps_r);
    z_ir = tape.add_scaled(tape.scale_shift(z0_ir, cfg.eps_ir, 0.0), agg_ir, 1.0 - cfg.eps_ir);
  }
  fwd.z_r = z_r;
  fwd.z_ir = z_ir;

  Value head_in = cfg.dual_head ? tape.concat_cols({z_r, z_ir}) : z_r;
  fwd.logits = tape.add_bias(tape.matmul(head_in, leaves.w_f), leaves.b_f);
  fwd.probs = tape.softmax_rows(fwd.logits);
  if (bound) *bound = leaves;
  return fwd;
}

Value icr_loss(Tape& tape, Value z_ir, Value probs, const Labels& labels,
               const std::vector<int32_t>& train_ids, const std::vector<Edge>& edges,
               const EsGnnConfig& cfg) {
  Value dist = tape.l2_rowdiff(z_ir, edges);
  if (!cfg.icr_weight_grad) {
    // Agreement weights computed from current predictions, no gradient.
    const Matrix& p = tape.val(probs);
    Matrix tilde = p;
    for (int32_t i : train_ids) {
      double* row = tilde.row(i);
      std::fill(row, row + tilde.cols(), 0.0);
      row[labels.y[i]] = 1.0;
    }
    std::vector<double> w(edges.size());
    for (size_t e = 0; e < edges.size(); ++e) {
      const double* a = tilde.row(edges[e].u);
      const double* b = tilde.row(edges[e].v);
      double dot = 0.0;
      for (int j = 0; j < tilde.cols(); ++j) dot += a[j] * b[j];
      w[e] = 1.0 - dot;
    }
    return tape.weighted_sum(dist, w);
  }
  // Differentiable agreement path; one-hot substitution still blocks the
  // gradient through training rows.
  Matrix onehot(static_cast<int>(train_ids.size()), labels.num_classes);
  for (size_t i = 0; i < train_ids.size(); ++i) onehot(static_cast<int>(i), labels.y[train_ids[i]]) = 1.0;
  Value tilde = tape.replace_rows_const(probs, train_ids, onehot);
  Value agree = tape.rows_dot_edges(tilde, edges);
  Value disagree = tape.scale_shift(agree, -1.0, 1.0);
  return tape.sum_all(tape.mul_elem(disagree, dist));
}

Value esgnn_total_loss(Tape& tape, const EsGnnForward& fwd, const Labels& labels,
                       const std::vector<int32_t>& train_ids, const std::vector<Edge>& edges,
                       const EsGnnConfig& cfg, Value* out_l_pred, Value* out_l_icr) {
  if (train_ids.empty()) throw ContractError("esgnn_total_loss: empty training set");
  Value l_pred = tape.cross_entropy(fwd.logits, labels, train_ids);
  if (out_l_pred) *out_l_pred = l_pred;
  const double lambda = cfg.no_icr ? 0.0 : cfg.lambda_icr;
  Value l_icr = icr_loss(tape, fwd.z_ir, fwd.probs, labels, train_ids, edges, cfg);
  if (out_l_icr) *out_l_icr = l_icr;
  if (lambda == 0.0) return l_pred;
  return tape.add_scaled(l_pred, l_icr, lambda);
}

std::vector<EdgeSplit> extract_edge_splits(const Tape& tape, const EsGnnForward& fwd) {
  std::vector<EdgeSplit> out;
  for (const auto& [a_r, a_ir] : fwd.splits) {
    EdgeSplit split;
    const Matrix& r = tape.val(a_r);
    const Matrix& ir = tape.val(a_ir);
    split.a_r.resize(r.rows());
    split.a_ir.resize(r.rows());
    for (int e = 0; e < r.rows(); ++e) {
      split.a_r[e] = r(e, 0);
      split.a_ir[e] = ir(e, 0);
    }
    out.push_back(std::move(split));
  }
  return out;
}

}  // namespace esgnn
