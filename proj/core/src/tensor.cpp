#include "esgnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace esgnn {

namespace {

void check_finite(const Matrix& m, const char* op) {
  if (!m.all_finite()) throw NumericError(std::string("non-finite output in op '") + op + "'");
}

constexpr double kLogClamp = 1e-12;
constexpr double kNormTiny = 1e-12;

}  // namespace

Value Tape::push(Matrix value, bool needs_grad, const char* op, std::function<void()> backprop) {
  check_finite(value, op);
  Node node;
  node.grad = Matrix(value.rows(), value.cols());
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  node.op = op;
  node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return Value{static_cast<int32_t>(nodes_.size()) - 1};
}

Value Tape::leaf(Matrix m, bool requires_grad) { return push(std::move(m), requires_grad, "leaf", {}); }

Value Tape::matmul(Value a, Value b) {
  const Matrix& av = val(a);
  const Matrix& bv = val(b);
  Matrix out(av.rows(), bv.cols());
  matmul_into(av, bv, out, false);
  const bool ng = requires_grad(a) || requires_grad(b);
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), ng, "matmul", [this, a, b, id] {
    const Matrix& g = grad(id);
    if (requires_grad(a)) matmul_nt_into(g, val(b), grad_mut(a), true);
    if (requires_grad(b)) matmul_tn_into(val(a), g, grad_mut(b), true);
  });
}

Value Tape::sparse_matmul(const SparseMatrix& s, Value b) {
  const Matrix& bv = val(b);
  Matrix out(s.rows(), bv.cols());
  spmm_into(s, bv, out, false);
  Value id{static_cast<int32_t>(nodes_.size())};
  // The sparse factor is constant by contract; only B receives gradient.
  return push(std::move(out), requires_grad(b), "sparse_matmul", [this, &s, b, id] {
    if (requires_grad(b)) spmm_tn_into(s, grad(id), grad_mut(b), true);
  });
}

Value Tape::add(Value a, Value b) {
  const Matrix& av = val(a);
  const Matrix& bv = val(b);
  if (!av.same_shape(bv)) throw ContractError("add: shape mismatch");
  Matrix out = av;
  out.axpy(1.0, bv);
  const bool ng = requires_grad(a) || requires_grad(b);
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), ng, "add", [this, a, b, id] {
    if (requires_grad(a)) grad_mut(a).axpy(1.0, grad(id));
    if (requires_grad(b)) grad_mut(b).axpy(1.0, grad(id));
  });
}

Value Tape::scale_shift(Value x, double alpha, double beta) {
  Matrix out = val(x);
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) = alpha * out(i, j) + beta;
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(x), "scale_shift", [this, x, alpha, id] {
    if (requires_grad(x)) grad_mut(x).axpy(alpha, grad(id));
  });
}

Value Tape::add_scaled(Value a, Value b, double alpha) {
  const Matrix& av = val(a);
  const Matrix& bv = val(b);
  if (!av.same_shape(bv)) throw ContractError("add_scaled: shape mismatch");
  Matrix out = av;
  out.axpy(alpha, bv);
  const bool ng = requires_grad(a) || requires_grad(b);
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), ng, "add_scaled", [this, a, b, alpha, id] {
    if (requires_grad(a)) grad_mut(a).axpy(1.0, grad(id));
    if (requires_grad(b)) grad_mut(b).axpy(alpha, grad(id));
  });
}

Value Tape::add_bias(Value z, Value bias) {
  const Matrix& zv = val(z);
  const Matrix& bv = val(bias);
  if (bv.rows() != 1 || bv.cols() != zv.cols()) throw ContractError("add_bias: bias must be 1 x cols");
  Matrix out = zv;
  for (int i = 0; i < out.rows(); ++i) {
    double* r = out.row(i);
    for (int j = 0; j < out.cols(); ++j) r[j] += bv(0, j);
  }
  const bool ng = requires_grad(z) || requires_grad(bias);
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), ng, "add_bias", [this, z, bias, id] {
    const Matrix& g = grad(id);
    if (requires_grad(z)) grad_mut(z).axpy(1.0, g);
    if (requires_grad(bias)) {
      Matrix& gb = grad_mut(bias);
      for (int i = 0; i < g.rows(); ++i) {
        const double* r = g.row(i);
        for (int j = 0; j < g.cols(); ++j) gb(0, j) += r[j];
      }
    }
  });
}

Value Tape::relu(Value x) {
  Matrix out = val(x);
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) = out(i, j) > 0 ? out(i, j) : 0.0;
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(x), "relu", [this, x, id] {
    if (!requires_grad(x)) return;
    const Matrix& g = grad(id);
    const Matrix& xv = val(x);
    Matrix& gx = grad_mut(x);
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j)
        if (xv(i, j) > 0) gx(i, j) += g(i, j);
  });
}

Value Tape::tanh_act(Value x) {
  Matrix out = val(x);
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) = std::tanh(out(i, j));
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(x), "tanh", [this, x, id] {
    if (!requires_grad(x)) return;
    const Matrix& g = grad(id);
    const Matrix& y = val(id);
    Matrix& gx = grad_mut(x);
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) gx(i, j) += g(i, j) * (1.0 - y(i, j) * y(i, j));
  });
}

Value Tape::concat_cols(const std::vector<Value>& xs) {
  if (xs.empty()) throw ContractError("concat_cols: empty input");
  const int rows = val(xs[0]).rows();
  int cols = 0;
  bool ng = false;
  for (Value x : xs) {
    if (val(x).rows() != rows) throw ContractError("concat_cols: row mismatch");
    cols += val(x).cols();
    ng = ng || requires_grad(x);
  }
  Matrix out(rows, cols);
  int off = 0;
  for (Value x : xs) {
    const Matrix& xv = val(x);
    for (int i = 0; i < rows; ++i) std::memcpy(out.row(i) + off, xv.row(i), xv.cols() * sizeof(double));
    off += xv.cols();
  }
  Value id{static_cast<int32_t>(nodes_.size())};
  std::vector<Value> parts = xs;
  return push(std::move(out), ng, "concat_cols", [this, parts, id] {
    const Matrix& g = grad(id);
    int off2 = 0;
    for (Value x : parts) {
      const int w = val(x).cols();
      if (requires_grad(x)) {
        Matrix& gx = grad_mut(x);
        for (int i = 0; i < g.rows(); ++i) {
          const double* gr = g.row(i) + off2;
          double* xr = gx.row(i);
          for (int j = 0; j < w; ++j) xr[j] += gr[j];
        }
      }
      off2 += w;
    }
  });
}

Value Tape::dropout(Value x, double p, bool training, Rng& rng) {
  if (!training || p == 0.0) return x;  // identity path
  if (p < 0 || p >= 1) throw ContractError("dropout: p outside [0,1)");
  const Matrix& xv = val(x);
  const double scale = 1.0 / (1.0 - p);
  std::vector<char> keep(xv.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix out = xv;
  size_t idx = 0;
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j, ++idx) {
      keep[idx] = u(rng) >= p;
      out(i, j) = keep[idx] ? out(i, j) * scale : 0.0;
    }
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(x), "dropout",
              [this, x, id, keep = std::move(keep), scale] {
                if (!requires_grad(x)) return;
                const Matrix& g = grad(id);
                Matrix& gx = grad_mut(x);
                size_t k = 0;
                for (int i = 0; i < g.rows(); ++i)
                  for (int j = 0; j < g.cols(); ++j, ++k)
                    if (keep[k]) gx(i, j) += g(i, j) * scale;
              });
}

Value Tape::row_gather(Value x, const std::vector<int32_t>& ids) {
  const Matrix& xv = val(x);
  Matrix out(static_cast<int>(ids.size()), xv.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= xv.rows()) throw ContractError("row_gather: id out of range");
    std::memcpy(out.row(static_cast<int>(i)), xv.row(ids[i]), xv.cols() * sizeof(double));
  }
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(x), "row_gather", [this, x, id, ids] {
    if (!requires_grad(x)) return;
    const Matrix& g = grad(id);
    Matrix& gx = grad_mut(x);
    for (size_t i = 0; i < ids.size(); ++i) {
      const double* gr = g.row(static_cast<int>(i));
      double* xr = gx.row(ids[i]);
      for (int j = 0; j < g.cols(); ++j) xr[j] += gr[j];
    }
  });
}

Value Tape::softmax_rows(Value x) {
  Matrix out = val(x);
  for (int i = 0; i < out.rows(); ++i) {
    double* r = out.row(i);
    double mx = r[0];
    for (int j = 1; j < out.cols(); ++j) mx = std::max(mx, r[j]);
    double sum = 0.0;
    for (int j = 0; j < out.cols(); ++j) {
      r[j] = std::exp(r[j] - mx);
      sum += r[j];
    }
    for (int j = 0; j < out.cols(); ++j) r[j] /= sum;
  }
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(x), "softmax_rows", [this, x, id] {
    if (!requires_grad(x)) return;
    const Matrix& g = grad(id);
    const Matrix& y = val(id);
    Matrix& gx = grad_mut(x);
    for (int i = 0; i < g.rows(); ++i) {
      double dot = 0.0;
      for (int j = 0; j < g.cols(); ++j) dot += g(i, j) * y(i, j);
      for (int j = 0; j < g.cols(); ++j) gx(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

Value Tape::cross_entropy(Value logits, const Labels& labels, const std::vector<int32_t>& ids) {
  if (ids.empty()) throw ContractError("cross_entropy: empty node set");
  const Matrix& lv = val(logits);
  if (lv.cols() != labels.num_classes) throw ContractError("cross_entropy: class-count mismatch");
  // Softmax rows for the selected nodes only; saved for the backward pass.
  Matrix probs(static_cast<int>(ids.size()), lv.cols());
  double loss = 0.0;
  for (size_t r = 0; r < ids.size(); ++r) {
    const int32_t i = ids[r];
    if (i < 0 || i >= lv.rows()) throw ContractError("cross_entropy: node id out of range");
    const double* row = lv.row(i);
    double mx = row[0];
    for (int j = 1; j < lv.cols(); ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    double* pr = probs.row(static_cast<int>(r));
    for (int j = 0; j < lv.cols(); ++j) {
      pr[j] = std::exp(row[j] - mx);
      sum += pr[j];
    }
    for (int j = 0; j < lv.cols(); ++j) pr[j] /= sum;
    loss -= std::log(std::max(pr[labels.y[i]], kLogClamp));
  }
  Matrix out(1, 1);
  out(0, 0) = loss / static_cast<double>(ids.size());
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(logits), "cross_entropy",
              [this, logits, id, ids, probs = std::move(probs), y = labels.y] {
                if (!requires_grad(logits)) return;
                const double g = grad(id)(0, 0) / static_cast<double>(ids.size());
                Matrix& gx = grad_mut(logits);
                for (size_t r = 0; r < ids.size(); ++r) {
                  const int32_t i = ids[r];
                  const double* pr = probs.row(static_cast<int>(r));
                  if (pr[y[i]] <= kLogClamp) continue;  // clamped: locally constant
                  double* gr = gx.row(i);
                  for (int j = 0; j < gx.cols(); ++j) gr[j] += g * pr[j];
                  gr[y[i]] -= g;
                }
              });
}

Value Tape::l2_rowdiff(Value z, const std::vector<Edge>& edges) {
  const Matrix& zv = val(z);
  Matrix out(static_cast<int>(edges.size()), 1);
  for (size_t e = 0; e < edges.size(); ++e) {
    const double* a = zv.row(edges[e].u);
    const double* b = zv.row(edges[e].v);
    double s = 0.0;
    for (int j = 0; j < zv.cols(); ++j) {
      const double d = a[j] - b[j];
      s += d * d;
    }
    out(static_cast<int>(e), 0) = std::sqrt(s);
  }
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(z), "l2_rowdiff", [this, z, id, edges] {
    if (!requires_grad(z)) return;
    const Matrix& g = grad(id);
    const Matrix& zv2 = val(z);
    Matrix& gz = grad_mut(z);
    for (size_t e = 0; e < edges.size(); ++e) {
      const double dist = val(id)(static_cast<int>(e), 0);
      if (dist <= kNormTiny) continue;  // subgradient 0 at coincident rows
      const double coef = g(static_cast<int>(e), 0) / dist;
      const double* a = zv2.row(edges[e].u);
      const double* b = zv2.row(edges[e].v);
      double* ga = gz.row(edges[e].u);
      double* gb = gz.row(edges[e].v);
      for (int j = 0; j < zv2.cols(); ++j) {
        const double d = coef * (a[j] - b[j]);
        ga[j] += d;
        gb[j] -= d;
      }
    }
  });
}

Value Tape::rows_dot_edges(Value y, const std::vector<Edge>& edges) {
  const Matrix& yv = val(y);
  Matrix out(static_cast<int>(edges.size()), 1);
  for (size_t e = 0; e < edges.size(); ++e) {
    const double* a = yv.row(edges[e].u);
    const double* b = yv.row(edges[e].v);
    double s = 0.0;
    for (int j = 0; j < yv.cols(); ++j) s += a[j] * b[j];
    out(static_cast<int>(e), 0) = s;
  }
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(y), "rows_dot_edges", [this, y, id, edges] {
    if (!requires_grad(y)) return;
    const Matrix& g = grad(id);
    const Matrix& yv2 = val(y);
    Matrix& gy = grad_mut(y);
    for (size_t e = 0; e < edges.size(); ++e) {
      const double ge = g(static_cast<int>(e), 0);
      const double* a = yv2.row(edges[e].u);
      const double* b = yv2.row(edges[e].v);
      double* ga = gy.row(edges[e].u);
      double* gb = gy.row(edges[e].v);
      for (int j = 0; j < yv2.cols(); ++j) {
        ga[j] += ge * b[j];
        gb[j] += ge * a[j];
      }
    }
  });
}

Value Tape::mul_elem(Value a, Value b) {
  const Matrix& av = val(a);
  const Matrix& bv = val(b);
  if (!av.same_shape(bv)) throw ContractError("mul_elem: shape mismatch");
  Matrix out = av;
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) out(i, j) *= bv(i, j);
  const bool ng = requires_grad(a) || requires_grad(b);
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), ng, "mul_elem", [this, a, b, id] {
    const Matrix& g = grad(id);
    if (requires_grad(a)) {
      Matrix& ga = grad_mut(a);
      const Matrix& bv2 = val(b);
      for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) ga(i, j) += g(i, j) * bv2(i, j);
    }
    if (requires_grad(b)) {
      Matrix& gb = grad_mut(b);
      const Matrix& av2 = val(a);
      for (int i = 0; i < g.rows(); ++i)
        for (int j = 0; j < g.cols(); ++j) gb(i, j) += g(i, j) * av2(i, j);
    }
  });
}

Value Tape::sum_all(Value x) {
  const Matrix& xv = val(x);
  Matrix out(1, 1);
  double s = 0.0;
  for (int i = 0; i < xv.rows(); ++i)
    for (int j = 0; j < xv.cols(); ++j) s += xv(i, j);
  out(0, 0) = s;
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(x), "sum_all", [this, x, id] {
    if (!requires_grad(x)) return;
    const double g = grad(id)(0, 0);
    Matrix& gx = grad_mut(x);
    for (int i = 0; i < gx.rows(); ++i)
      for (int j = 0; j < gx.cols(); ++j) gx(i, j) += g;
  });
}

Value Tape::weighted_sum(Value x, const std::vector<double>& w) {
  const Matrix& xv = val(x);
  if (xv.cols() != 1 || static_cast<size_t>(xv.rows()) != w.size())
    throw ContractError("weighted_sum: expects column vector matching weights");
  Matrix out(1, 1);
  double s = 0.0;
  for (int i = 0; i < xv.rows(); ++i) s += w[i] * xv(i, 0);
  out(0, 0) = s;
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(x), "weighted_sum", [this, x, id, w] {
    if (!requires_grad(x)) return;
    const double g = grad(id)(0, 0);
    Matrix& gx = grad_mut(x);
    for (int i = 0; i < gx.rows(); ++i) gx(i, 0) += g * w[i];
  });
}

Value Tape::replace_rows_const(Value x, const std::vector<int32_t>& ids, const Matrix& rows) {
  const Matrix& xv = val(x);
  if (rows.cols() != xv.cols() || rows.rows() != static_cast<int>(ids.size()))
    throw ContractError("replace_rows_const: shape mismatch");
  Matrix out = xv;
  for (size_t i = 0; i < ids.size(); ++i)
    std::memcpy(out.row(ids[i]), rows.row(static_cast<int>(i)), xv.cols() * sizeof(double));
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), requires_grad(x), "replace_rows_const", [this, x, id, ids] {
    if (!requires_grad(x)) return;
    const Matrix& g = grad(id);
    Matrix& gx = grad_mut(x);
    std::vector<char> replaced(gx.rows(), 0);
    for (int32_t i : ids) replaced[i] = 1;
    for (int i = 0; i < g.rows(); ++i) {
      if (replaced[i]) continue;
      const double* gr = g.row(i);
      double* xr = gx.row(i);
      for (int j = 0; j < g.cols(); ++j) xr[j] += gr[j];
    }
  });
}

Value Tape::edge_scores(Value z_r, Value z_ir, Value g, const std::vector<Edge>& edges) {
  const Matrix& zr = val(z_r);
  const Matrix& zir = val(z_ir);
  const Matrix& gv = val(g);
  const int half = zr.cols();
  if (zir.cols() != half || zr.rows() != zir.rows()) throw ContractError("edge_scores: channel shape mismatch");
  if (gv.rows() != 1 || gv.cols() != 4 * half) throw ContractError("edge_scores: scoring vector must be 1 x 2d");
  const int n = zr.rows();
  const double* g1 = gv.row(0);
  const double* g2 = g1 + half;
  const double* g3 = g2 + half;
  const double* g4 = g3 + half;

  std::vector<double> p(n, 0.0), q(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double* r = zr.row(i);
    const double* ir = zir.row(i);
    double pi = 0.0, qi = 0.0;
    for (int j = 0; j < half; ++j) {
      pi += r[j] * g1[j] + ir[j] * g2[j];
      qi += r[j] * g3[j] + ir[j] * g4[j];
    }
    p[i] = pi;
    q[i] = qi;
  }
  const int m = static_cast<int>(edges.size());
  Matrix out(m, 1);
  std::vector<double> s1(m), s2(m);
  for (int e = 0; e < m; ++e) {
    const auto [u, v] = edges[e];
    s1[e] = std::tanh(p[u] + q[v]);
    s2[e] = std::tanh(p[v] + q[u]);
    out(e, 0) = 0.5 * (s1[e] + s2[e]);
  }
  const bool ng = requires_grad(z_r) || requires_grad(z_ir) || requires_grad(g);
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), ng, "edge_scores",
              [this, z_r, z_ir, g, id, edges, s1 = std::move(s1), s2 = std::move(s2), half, n] {
                const Matrix& gout = grad(id);
                std::vector<double> gp(n, 0.0), gq(n, 0.0);
                for (size_t e = 0; e < edges.size(); ++e) {
                  const auto [u, v] = edges[e];
                  const double ge = gout(static_cast<int>(e), 0);
                  const double c1 = 0.5 * ge * (1.0 - s1[e] * s1[e]);
                  const double c2 = 0.5 * ge * (1.0 - s2[e] * s2[e]);
                  gp[u] += c1;
                  gq[v] += c1;
                  gp[v] += c2;
                  gq[u] += c2;
                }
                const Matrix& zr = val(z_r);
                const Matrix& zir = val(z_ir);
                const Matrix& gv = val(g);
                const double* g1 = gv.row(0);
                const double* g2 = g1 + half;
                const double* g3 = g2 + half;
                const double* g4 = g3 + half;
                if (requires_grad(z_r)) {
                  Matrix& gz = grad_mut(z_r);
                  for (int i = 0; i < n; ++i) {
                    double* row = gz.row(i);
                    for (int j = 0; j < half; ++j) row[j] += gp[i] * g1[j] + gq[i] * g3[j];
                  }
                }
                if (requires_grad(z_ir)) {
                  Matrix& gz = grad_mut(z_ir);
                  for (int i = 0; i < n; ++i) {
                    double* row = gz.row(i);
                    for (int j = 0; j < half; ++j) row[j] += gp[i] * g2[j] + gq[i] * g4[j];
                  }
                }
                if (requires_grad(g)) {
                  Matrix& gg = grad_mut(g);
                  double* d1 = gg.row(0);
                  double* d2 = d1 + half;
                  double* d3 = d2 + half;
                  double* d4 = d3 + half;
                  for (int i = 0; i < n; ++i) {
                    const double* r = zr.row(i);
                    const double* ir = zir.row(i);
                    for (int j = 0; j < half; ++j) {
                      d1[j] += gp[i] * r[j];
                      d2[j] += gp[i] * ir[j];
                      d3[j] += gq[i] * r[j];
                      d4[j] += gq[i] * ir[j];
                    }
                  }
                }
              });
}

Value Tape::edge_weighted_aggregate(Value z, const std::vector<Edge>& edges, Value w, double deg_floor) {
  const Matrix& zv = val(z);
  const Matrix& wv = val(w);
  if (wv.cols() != 1 || wv.rows() != static_cast<int>(edges.size()))
    throw ContractError("edge_weighted_aggregate: weights must be E x 1");
  const int n = zv.rows();
  const int d = zv.cols();

  std::vector<double> deg(n, 0.0);
  for (size_t e = 0; e < edges.size(); ++e) {
    const auto [u, v] = edges[e];
    if (u < 0 || v < 0 || u >= n || v >= n) throw ContractError("edge_weighted_aggregate: edge out of range");
    const double we = wv(static_cast<int>(e), 0);
    deg[u] += we;
    if (u != v) deg[v] += we;
  }
  std::vector<double> inv_sqrt(n);
  std::vector<char> clamped(n);
  for (int i = 0; i < n; ++i) {
    clamped[i] = deg[i] < deg_floor;
    inv_sqrt[i] = 1.0 / std::sqrt(clamped[i] ? deg_floor : deg[i]);
    if (clamped[i]) ++degree_clamps_;
  }

  Matrix out(n, d);
  for (size_t e = 0; e < edges.size(); ++e) {
    const auto [u, v] = edges[e];
    const double coef = wv(static_cast<int>(e), 0) * inv_sqrt[u] * inv_sqrt[v];
    if (coef == 0.0) continue;
    double* ou = out.row(u);
    const double* zvr = zv.row(v);
    for (int j = 0; j < d; ++j) ou[j] += coef * zvr[j];
    if (u != v) {
      double* ov = out.row(v);
      const double* zur = zv.row(u);
      for (int j = 0; j < d; ++j) ov[j] += coef * zur[j];
    }
  }

  const bool ng = requires_grad(z) || requires_grad(w);
  Value id{static_cast<int32_t>(nodes_.size())};
  return push(std::move(out), ng, "edge_weighted_aggregate",
              [this, z, w, id, edges, inv_sqrt = std::move(inv_sqrt), clamped = std::move(clamped), n, d] {
                const Matrix& g = grad(id);
                const Matrix& zv2 = val(z);
                const Matrix& wv2 = val(w);
                if (requires_grad(z)) {
                  // The normalized adjacency is symmetric, so the transpose
                  // product has the same per-edge structure.
                  Matrix& gz = grad_mut(z);
                  for (size_t e = 0; e < edges.size(); ++e) {
                    const auto [u, v] = edges[e];
                    const double coef = wv2(static_cast<int>(e), 0) * inv_sqrt[u] * inv_sqrt[v];
                    if (coef == 0.0) continue;
                    const double* gu = g.row(u);
                    double* zvr = gz.row(v);
                    for (int j = 0; j < d; ++j) zvr[j] += coef * gu[j];
                    if (u != v) {
                      const double* gv = g.row(v);
                      double* zur = gz.row(u);
                      for (int j = 0; j < d; ++j) zur[j] += coef * gv[j];
                    }
                  }
                }
                if (requires_grad(w)) {
                  Matrix& gw = grad_mut(w);
                  // dot_e = dL/d(T_e) where T_e is the e-th normalized term.
                  std::vector<double> dot(edges.size());
                  std::vector<double> ddeg(n, 0.0);  // dL/d(deg_i), pre-clamp
                  for (size_t e = 0; e < edges.size(); ++e) {
                    const auto [u, v] = edges[e];
                    const double* gu = g.row(u);
                    const double* gv = g.row(v);
                    const double* zu = zv2.row(u);
                    const double* zvr = zv2.row(v);
                    double s = 0.0;
                    if (u == v) {
                      for (int j = 0; j < d; ++j) s += gu[j] * zu[j];
                      dot[e] = s;
                      const double su = inv_sqrt[u];
                      ddeg[u] += -dot[e] * wv2(static_cast<int>(e), 0) * su * su * su * su;
                    } else {
                      for (int j = 0; j < d; ++j) s += gu[j] * zvr[j] + gv[j] * zu[j];
                      dot[e] = s;
                      const double su = inv_sqrt[u], sv = inv_sqrt[v];
                      const double common = dot[e] * wv2(static_cast<int>(e), 0);
                      ddeg[u] += -0.5 * common * su * su * su * sv;
                      ddeg[v] += -0.5 * common * sv * sv * sv * su;
                    }
                  }
                  for (size_t e = 0; e < edges.size(); ++e) {
                    const auto [u, v] = edges[e];
                    double acc = dot[e] * inv_sqrt[u] * inv_sqrt[v];
                    if (!clamped[u]) acc += ddeg[u];
                    if (u != v && !clamped[v]) acc += ddeg[v];
                    gw(static_cast<int>(e), 0) += acc;
                  }
                }
              });
}

void Tape::backward(Value loss) {
  const int32_t lid = check(loss);
  const Matrix& lv = nodes_[lid].value;
  if (lv.rows() != 1 || lv.cols() != 1) throw ContractError("backward: loss must be scalar");
  nodes_[lid].grad(0, 0) = 1.0;
  for (int32_t i = lid; i >= 0; --i) {
    if (nodes_[i].needs_grad && nodes_[i].backprop) nodes_[i].backprop();
  }
}

void adam_step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads,
               AdamState& state, double lr, const std::vector<double>& weight_decay) {
  if (lr <= 0) throw ContractError("adam_step: lr must be positive");
  if (params.size() != grads.size() || params.size() != weight_decay.size())
    throw ContractError("adam_step: list size mismatch");
  if (state.m.empty()) {
    for (const Matrix* p : params) {
      state.m.emplace_back(p->rows(), p->cols());
      state.v.emplace_back(p->rows(), p->cols());
    }
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    const Matrix& g = *grads[k];
    if (!p.same_shape(g) || !p.same_shape(state.m[k])) throw ContractError("adam_step: shape mismatch");
    Matrix& m = state.m[k];
    Matrix& v = state.v[k];
    const double wd = weight_decay[k];
    for (int i = 0; i < p.rows(); ++i)
      for (int j = 0; j < p.cols(); ++j) {
        const double gij = g(i, j) + wd * p(i, j);
        m(i, j) = state.beta1 * m(i, j) + (1.0 - state.beta1) * gij;
        v(i, j) = state.beta2 * v(i, j) + (1.0 - state.beta2) * gij * gij;
        const double mhat = m(i, j) / bc1;
        const double vhat = v(i, j) / bc2;
        p(i, j) -= lr * mhat / (std::sqrt(vhat) + state.eps);
      }
  }
}

GradCheckReport grad_check(const LossBuilder& build, const std::vector<Matrix>& params, double h) {
  if (h <= 0) throw ContractError("grad_check: h must be positive");
  // Analytic pass.
  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Value> leaves;
    leaves.reserve(params.size());
    for (const Matrix& p : params) leaves.push_back(tape.leaf(p, true));
    Value loss = build(tape, leaves);
    tape.backward(loss);
    for (Value v : leaves) analytic.push_back(tape.grad(v));
  }
  GradCheckReport report;
  std::vector<Matrix> work = params;
  for (size_t k = 0; k < params.size(); ++k) {
    for (int i = 0; i < params[k].rows(); ++i)
      for (int j = 0; j < params[k].cols(); ++j) {
        const double orig = work[k](i, j);
        auto run = [&](double x) {
          work[k](i, j) = x;
          Tape tape;
          std::vector<Value> leaves;
          for (const Matrix& p : work) leaves.push_back(tape.leaf(p, false));
          Value loss = build(tape, leaves);
          const Matrix& lv = tape.val(loss);
          if (lv.rows() != 1 || lv.cols() != 1) throw ContractError("grad_check: loss must be scalar");
          return lv(0, 0);
        };
        const double fp = run(orig + h);
        const double fm = run(orig - h);
        work[k](i, j) = orig;
        const double numeric = (fp - fm) / (2.0 * h);
        const double a = analytic[k](i, j);
        const double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), 1e-8});
        if (rel > report.max_rel_err) {
          report.max_rel_err = rel;
          report.worst_param = static_cast<int>(k);
          report.worst_index = i * params[k].cols() + j;
        }
      }
  }
  return report;
}

}  // namespace esgnn
