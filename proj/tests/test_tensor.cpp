// Tensor-engine tests. The gradient oracle throughout is central finite
// differences; the aggregation oracle is an independent dense reconstruction
// of D^{-1/2} A D^{-1/2} Z.
#include <doctest.h>

#include <cmath>

#include "esgnn/tensor.hpp"

using namespace esgnn;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = uniform_real(rng, lo, hi);
  return m;
}

// Dense-route oracle: build the full normalized adjacency and multiply.
Matrix dense_sym_agg(int n, const std::vector<Edge>& edges, const std::vector<double>& w,
                     const Matrix& z, double deg_floor = 1e-12) {
  Matrix adj(n, n);
  std::vector<double> deg(n, 0.0);
  for (size_t e = 0; e < edges.size(); ++e) {
    const auto [u, v] = edges[e];
    if (u == v) {
      adj(u, u) += w[e];
      deg[u] += w[e];
    } else {
      adj(u, v) += w[e];
      adj(v, u) += w[e];
      deg[u] += w[e];
      deg[v] += w[e];
    }
  }
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[i] = 1.0 / std::sqrt(std::max(deg[i], deg_floor));
  Matrix out(n, z.cols());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < z.cols(); ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += s[i] * adj(i, k) * s[k] * z(k, j);
      out(i, j) = acc;
    }
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(a.same_shape(b));
  double m = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m = std::max(m, std::fabs(a(i, j) - b(i, j)));
  return m;
}

std::vector<Edge> random_graph_edges(int n, double p, Rng& rng) {
  std::vector<Edge> edges;
  for (int32_t u = 0; u < n; ++u)
    for (int32_t v = u + 1; v < n; ++v)
      if (uniform_real(rng, 0, 1) < p) edges.push_back({u, v});
  return edges;
}

}  // namespace

TEST_CASE("relu forward and backward") {
  Tape tape;
  Matrix x(1, 2);
  x(0, 0) = -1;
  x(0, 1) = 2;
  Value xv = tape.leaf(x);
  Value y = tape.relu(xv);
  CHECK(tape.val(y)(0, 0) == 0.0);
  CHECK(tape.val(y)(0, 1) == 2.0);
  Value loss = tape.sum_all(y);
  tape.backward(loss);
  CHECK(tape.grad(xv)(0, 0) == 0.0);
  CHECK(tape.grad(xv)(0, 1) == 1.0);
}

TEST_CASE("cross entropy of uniform logits is ln C") {
  Tape tape;
  Matrix logits(4, 3);  // all zeros -> uniform softmax
  Labels labels{{0, 1, 2, 0}, 3};
  Value lv = tape.leaf(logits);
  Value ce = tape.cross_entropy(lv, labels, {0, 1, 2, 3});
  CHECK(tape.val(ce)(0, 0) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("cross entropy ignores rows outside the node set") {
  Rng rng = make_rng(2);
  Matrix logits = random_matrix(6, 3, rng);
  Labels a{{0, 1, 2, 0, 1, 2}, 3};
  Labels b = a;
  b.y[4] = 0;
  b.y[5] = 1;  // corrupt labels outside the set
  Tape t1, t2;
  Value l1 = t1.leaf(logits), l2 = t2.leaf(logits);
  CHECK(t1.val(t1.cross_entropy(l1, a, {0, 1, 2}))(0, 0) ==
        t2.val(t2.cross_entropy(l2, b, {0, 1, 2}))(0, 0));
}

TEST_CASE("dropout p=0 and eval mode are identity paths") {
  Rng rng = make_rng(5);
  Matrix x = random_matrix(3, 4, rng);
  Tape tape;
  Value xv = tape.leaf(x);
  Value d0 = tape.dropout(xv, 0.0, true, rng);
  Value deval = tape.dropout(xv, 0.7, false, rng);
  CHECK(d0.id == xv.id);
  CHECK(deval.id == xv.id);
}

TEST_CASE("dropout scales kept entries by 1/(1-p)") {
  Rng rng = make_rng(5);
  Matrix x(200, 1);
  x.fill(1.0);
  Tape tape;
  Value xv = tape.leaf(x);
  Value d = tape.dropout(xv, 0.5, true, rng);
  int kept = 0;
  for (int i = 0; i < 200; ++i) {
    const double v = tape.val(d)(i, 0);
    CHECK((v == 0.0 || v == 2.0));
    kept += v != 0.0;
  }
  CHECK(kept > 60);
  CHECK(kept < 140);
}

TEST_CASE("backward: sum of leaf gives all-ones gradient; unreachable leaf stays zero") {
  Rng rng = make_rng(1);
  Tape tape;
  Value z = tape.leaf(random_matrix(3, 3, rng));
  Value unused = tape.leaf(random_matrix(2, 2, rng));
  Value loss = tape.sum_all(z);
  tape.backward(loss);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(tape.grad(z)(i, j) == 1.0);
  CHECK(tape.grad(unused).max_abs() == 0.0);
}

TEST_CASE("backward: grad of sum((XW)^2) matches 2 X^T (XW)") {
  Rng rng = make_rng(3);
  Matrix x = random_matrix(5, 4, rng);
  Matrix wm = random_matrix(4, 3, rng);
  Tape tape;
  Value xv = tape.constant(x);
  Value wv = tape.leaf(wm);
  Value prod = tape.matmul(xv, wv);
  Value sq = tape.mul_elem(prod, prod);
  Value loss = tape.sum_all(sq);
  tape.backward(loss);
  Matrix expect(4, 3);
  Matrix xw = matmul(x, wm);
  matmul_tn_into(x, xw, expect, false);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) CHECK(tape.grad(wv)(i, j) == doctest::Approx(2.0 * expect(i, j)).epsilon(1e-12));
}

TEST_CASE("backward rejects non-scalar loss") {
  Rng rng = make_rng(1);
  Tape tape;
  Value z = tape.leaf(random_matrix(2, 2, rng));
  CHECK_THROWS_AS(tape.backward(z), ContractError);
}

TEST_CASE("shape mismatch raises contract error") {
  Rng rng = make_rng(1);
  Tape tape;
  Value a = tape.leaf(random_matrix(2, 3, rng));
  Value b = tape.leaf(random_matrix(2, 3, rng));
  CHECK_THROWS_AS(tape.matmul(a, b), ContractError);
  CHECK_THROWS_AS(tape.add_bias(a, b), ContractError);
}

TEST_CASE("non-finite forward output raises numeric error naming the op") {
  Tape tape;
  Matrix big(1, 1);
  big(0, 0) = 1e308;
  Value x = tape.leaf(big);
  Value y = tape.scale_shift(x, 0.5, 0.0);
  CHECK(tape.val(y)(0, 0) == 5e307);
  CHECK_THROWS_AS((void)tape.scale_shift(x, 4.0, 0.0), NumericError);
}

TEST_CASE("edge_weighted_aggregate: two-node swap") {
  Tape tape;
  Matrix z(2, 2);
  z(0, 0) = 1;
  z(1, 1) = 1;
  Matrix w(1, 1);
  w(0, 0) = 1;
  Value zv = tape.leaf(z);
  Value wv = tape.leaf(w);
  Value out = tape.edge_weighted_aggregate(zv, {{0, 1}}, wv);
  CHECK(tape.val(out)(0, 1) == doctest::Approx(1.0));
  CHECK(tape.val(out)(1, 0) == doctest::Approx(1.0));
  CHECK(tape.val(out)(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("edge_weighted_aggregate: isolated node row is zero") {
  Tape tape;
  Rng rng = make_rng(4);
  Matrix z = random_matrix(3, 2, rng);
  Matrix w(1, 1);
  w(0, 0) = 0.8;
  Value out = tape.edge_weighted_aggregate(tape.leaf(z), {{0, 1}}, tape.leaf(w));
  CHECK(tape.val(out)(2, 0) == 0.0);
  CHECK(tape.val(out)(2, 1) == 0.0);
  CHECK(tape.degree_clamp_count() == 1);
}

TEST_CASE("edge_weighted_aggregate matches dense oracle on random graphs") {
  Rng rng = make_rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 6;
    auto edges = random_graph_edges(n, 0.6, rng);
    if (edges.empty()) edges.push_back({0, 1});
    std::vector<double> w;
    Matrix wm(static_cast<int>(edges.size()), 1);
    for (size_t e = 0; e < edges.size(); ++e) {
      w.push_back(uniform_real(rng, 0.2, 1.5));
      wm(static_cast<int>(e), 0) = w[e];
    }
    Matrix z = random_matrix(n, 3, rng);
    Tape tape;
    Value out = tape.edge_weighted_aggregate(tape.leaf(z), edges, tape.leaf(wm));
    CHECK(max_abs_diff(tape.val(out), dense_sym_agg(n, edges, w, z)) <= 1e-12);
  }
}

TEST_CASE("edge_weighted_aggregate with unit weights equals plain normalized adjacency product") {
  Rng rng = make_rng(21);
  const int n = 8;
  auto edges = random_graph_edges(n, 0.5, rng);
  if (edges.empty()) edges.push_back({0, 1});
  Matrix z = random_matrix(n, 4, rng);
  Matrix ones(static_cast<int>(edges.size()), 1);
  ones.fill(1.0);
  Tape tape;
  Value out = tape.edge_weighted_aggregate(tape.leaf(z), edges, tape.constant(ones));
  CHECK(max_abs_diff(tape.val(out), dense_sym_agg(n, edges, std::vector<double>(edges.size(), 1.0), z)) <=
        1e-12);
}

TEST_CASE("edge_weighted_aggregate handles self-loop entries once") {
  // Single node with one self loop of weight w: degree w, output row = z.
  Tape tape;
  Matrix z(1, 2);
  z(0, 0) = 3;
  z(0, 1) = -1;
  Matrix w(1, 1);
  w(0, 0) = 0.7;
  Value out = tape.edge_weighted_aggregate(tape.leaf(z), {{0, 0}}, tape.leaf(w));
  CHECK(tape.val(out)(0, 0) == doctest::Approx(3.0));
  CHECK(tape.val(out)(0, 1) == doctest::Approx(-1.0));
}

TEST_CASE("grad_check: quadratic form") {
  Matrix x(2, 1);
  x(0, 0) = 1;
  x(1, 0) = 2;
  auto build = [](Tape& t, const std::vector<Value>& ps) {
    Value sq = t.mul_elem(ps[0], ps[0]);
    return t.sum_all(sq);
  };
  auto report = grad_check(build, {x}, 1e-5);
  CHECK(report.max_rel_err < 1e-8);
}

TEST_CASE("grad_check: every differentiable op composite") {
  Rng rng = make_rng(33);
  const int n = 7, d = 4;
  auto edges = random_graph_edges(n, 0.5, rng);
  if (edges.size() < 3) edges = {{0, 1}, {1, 2}, {2, 3}};
  Labels labels{{}, 3};
  for (int i = 0; i < n; ++i) labels.y.push_back(i % 3);
  std::vector<int32_t> train_ids = {0, 1, 2, 3};

  Matrix x = random_matrix(n, 5, rng);
  Matrix w0 = random_matrix(5, d, rng, -0.5, 0.5);
  Matrix b0 = random_matrix(1, d, rng, -0.2, 0.2);
  Matrix g = random_matrix(1, 4 * d, rng, -0.5, 0.5);
  Matrix wh = random_matrix(2 * d, 3, rng, -0.5, 0.5);
  std::vector<double> icr_w(edges.size());
  for (auto& v : icr_w) v = uniform_real(rng, 0, 1);

  auto build = [&](Tape& t, const std::vector<Value>& ps) {
    Value xc = t.constant(x);
    Value z0 = t.add_bias(t.matmul(xc, ps[0]), ps[1]);
    Value zr = t.relu(z0);
    Value zir = t.tanh_act(z0);
    Value alpha = t.edge_scores(zr, zir, ps[2], edges);
    Value a_r = t.scale_shift(alpha, 0.5, 0.5);
    Value a_ir = t.scale_shift(a_r, -1.0, 1.0);
    Value agg_r = t.edge_weighted_aggregate(zr, edges, a_r);
    Value agg_ir = t.edge_weighted_aggregate(zir, edges, a_ir);
    Value cat = t.concat_cols({agg_r, agg_ir});
    Value logits = t.matmul(cat, ps[3]);
    Value ce = t.cross_entropy(logits, labels, train_ids);
    Value probs = t.softmax_rows(logits);
    Value agree = t.rows_dot_edges(probs, edges);
    Value dist = t.l2_rowdiff(agg_ir, edges);
    Value icr_a = t.weighted_sum(dist, icr_w);
    Value icr_b = t.sum_all(t.mul_elem(agree, dist));
    Value gathered = t.row_gather(logits, {1, 3});
    Value extra = t.sum_all(t.mul_elem(gathered, gathered));
    Value acc = t.add_scaled(ce, icr_a, 1e-2);
    acc = t.add_scaled(acc, icr_b, 1e-3);
    return t.add_scaled(acc, extra, 1e-4);
  };
  auto report = grad_check(build, {w0, b0, g, wh}, 1e-5);
  CHECK(report.max_rel_err < 1e-5);
}

TEST_CASE("grad_check: aggregation weights receive exact degree-channel gradient") {
  Rng rng = make_rng(8);
  const int n = 6;
  auto edges = random_graph_edges(n, 0.7, rng);
  edges.push_back({2, 2});  // include a self loop
  Matrix z = random_matrix(n, 3, rng);
  Matrix w(static_cast<int>(edges.size()), 1);
  for (int e = 0; e < w.rows(); ++e) w(e, 0) = uniform_real(rng, 0.4, 1.4);
  Matrix target = random_matrix(n, 3, rng);

  auto build = [&](Tape& t, const std::vector<Value>& ps) {
    Value out = t.edge_weighted_aggregate(ps[0], edges, ps[1]);
    Value diff = t.add_scaled(out, t.constant(target), -1.0);
    return t.sum_all(t.mul_elem(diff, diff));
  };
  auto report = grad_check(build, {z, w}, 1e-5);
  CHECK(report.max_rel_err < 1e-5);
}

TEST_CASE("grad_check: residual scoring subgraph alone") {
  Rng rng = make_rng(55);
  const int n = 6, half = 3;
  auto edges = random_graph_edges(n, 0.6, rng);
  if (edges.empty()) edges = {{0, 1}};
  Matrix zr = random_matrix(n, half, rng);
  Matrix zir = random_matrix(n, half, rng);
  Matrix g = random_matrix(1, 4 * half, rng);
  auto build = [&](Tape& t, const std::vector<Value>& ps) {
    Value alpha = t.edge_scores(ps[0], ps[1], ps[2], edges);
    return t.sum_all(t.mul_elem(alpha, alpha));
  };
  auto report = grad_check(build, {zr, zir, g}, 1e-5);
  CHECK(report.max_rel_err < 1e-6);
}

TEST_CASE("sparse_matmul agrees with dense matmul and backward") {
  Rng rng = make_rng(14);
  Matrix x(6, 10);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 10; ++j) x(i, j) = uniform_real(rng, 0, 1) < 0.2 ? uniform_real(rng, -1, 1) : 0.0;
  SparseMatrix xs = SparseMatrix::from_dense(x);
  Matrix w = random_matrix(10, 3, rng);

  Tape t1, t2;
  Value w1 = t1.leaf(w), w2 = t2.leaf(w);
  Value dense = t1.matmul(t1.constant(x), w1);
  Value sparse = t2.sparse_matmul(xs, w2);
  CHECK(max_abs_diff(t1.val(dense), t2.val(sparse)) <= 1e-14);
  t1.backward(t1.sum_all(t1.mul_elem(dense, dense)));
  t2.backward(t2.sum_all(t2.mul_elem(sparse, sparse)));
  CHECK(max_abs_diff(t1.grad(w1), t2.grad(w2)) <= 1e-13);
}

TEST_CASE("adam first step is approximately -lr * sign(g)") {
  Matrix p(1, 1);
  p(0, 0) = 0.5;
  Matrix g(1, 1);
  g(0, 0) = 0.3;
  AdamState st;
  adam_step({&p}, {&g}, st, 0.01, {0.0});
  // m_hat = g, v_hat = g^2 -> update = -lr * g / (|g| + eps)
  CHECK(p(0, 0) == doctest::Approx(0.5 - 0.01 * 0.3 / (0.3 + 1e-8)).epsilon(1e-9));
}

TEST_CASE("adam zero gradient and zero decay leaves parameters unchanged") {
  Matrix p(2, 2);
  p.fill(1.25);
  Matrix g(2, 2);
  AdamState st;
  adam_step({&p}, {&g}, st, 0.05, {0.0});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(p(i, j) == 1.25);
}

TEST_CASE("adam trajectories are bit-identical across engines") {
  Rng r1 = make_rng(99), r2 = make_rng(99);
  Matrix p1 = random_matrix(3, 3, r1), p2 = random_matrix(3, 3, r2);
  AdamState s1, s2;
  Rng g1 = make_rng(7), g2 = make_rng(7);
  for (int step = 0; step < 20; ++step) {
    Matrix grad1 = random_matrix(3, 3, g1), grad2 = random_matrix(3, 3, g2);
    adam_step({&p1}, {&grad1}, s1, 0.01, {1e-4});
    adam_step({&p2}, {&grad2}, s2, 0.01, {1e-4});
  }
  CHECK(max_abs_diff(p1, p2) == 0.0);
}

TEST_CASE("replace_rows_const blocks gradient through replaced rows") {
  Rng rng = make_rng(31);
  Matrix x = random_matrix(4, 2, rng);
  Matrix rows(1, 2);
  rows(0, 0) = 9;
  rows(0, 1) = 9;
  Tape t;
  Value xv = t.leaf(x);
  Value y = t.replace_rows_const(xv, {2}, rows);
  CHECK(t.val(y)(2, 0) == 9.0);
  t.backward(t.sum_all(y));
  CHECK(t.grad(xv)(2, 0) == 0.0);
  CHECK(t.grad(xv)(0, 0) == 1.0);
}
