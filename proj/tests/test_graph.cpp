#include <doctest.h>

#include <algorithm>
#include <set>

#include "esgnn/graph.hpp"

using namespace esgnn;

namespace {

bool disjoint(const std::vector<int32_t>& a, const std::vector<int32_t>& b) {
  std::set<int32_t> sa(a.begin(), a.end());
  for (int32_t x : b)
    if (sa.count(x)) return false;
  return true;
}

}  // namespace

TEST_CASE("from_edges canonicalizes: self-loops dropped, duplicates merged") {
  Graph g = Graph::from_edges({{0, 1}, {1, 0}, {2, 2}}, 3);
  CHECK(g.num_nodes() == 3);
  CHECK(g.num_edges() == 1);
  CHECK(g.edges()[0] == Edge{0, 1});
}

TEST_CASE("from_edges empty") {
  Graph g = Graph::from_edges({}, 5);
  CHECK(g.num_nodes() == 5);
  CHECK(g.num_edges() == 0);
}

TEST_CASE("triangle degrees") {
  Graph g = Graph::from_edges({{0, 1}, {1, 2}, {0, 2}}, 3);
  CHECK(g.num_edges() == 3);
  for (int i = 0; i < 3; ++i) CHECK(g.degree(i) == 2);
  CHECK(g.has_edge(2, 0));
  CHECK_FALSE(g.has_edge(0, 0));
}

TEST_CASE("from_edges rejects out-of-range ids") {
  CHECK_THROWS_AS(Graph::from_edges({{0, 3}}, 3), MalformedInput);
}

TEST_CASE("csr is consistent with the edge list") {
  Rng rng = make_rng(7);
  std::vector<std::pair<int32_t, int32_t>> raw;
  for (int i = 0; i < 60; ++i) raw.push_back({uniform_int(rng, 0, 11), uniform_int(rng, 0, 11)});
  Graph g = Graph::from_edges(raw, 12);
  int adjacency_entries = 0;
  for (int u = 0; u < 12; ++u) {
    auto nb = g.neighbors(u);
    adjacency_entries += nb.count;
    for (int k = 0; k < nb.count; ++k) {
      const Edge& e = g.edges()[nb.edges_begin[k]];
      CHECK(((e.u == u && e.v == nb.nodes_begin[k]) || (e.v == u && e.u == nb.nodes_begin[k])));
    }
  }
  CHECK(adjacency_entries == 2 * g.num_edges());
}

TEST_CASE("homophily_ratio basics") {
  Graph tri = Graph::from_edges({{0, 1}, {1, 2}, {0, 2}}, 3);
  CHECK(homophily_ratio(tri, {{0, 0, 1}, 2}) == doctest::Approx(1.0 / 3.0));
  CHECK(homophily_ratio(tri, {{1, 1, 1}, 2}) == doctest::Approx(1.0));
  // All-distinct labels -> 0.
  CHECK(homophily_ratio(tri, {{0, 1, 2}, 3}) == doctest::Approx(0.0));
  Graph empty = Graph::from_edges({}, 3);
  CHECK_THROWS_AS(homophily_ratio(empty, {{0, 0, 1}, 2}), UndefinedMetric);
}

TEST_CASE("homophily_ratio invariant under class relabeling") {
  Rng rng = make_rng(3);
  std::vector<std::pair<int32_t, int32_t>> raw;
  for (int i = 0; i < 80; ++i) raw.push_back({uniform_int(rng, 0, 19), uniform_int(rng, 0, 19)});
  Graph g = Graph::from_edges(raw, 20);
  Labels a{{}, 3};
  for (int i = 0; i < 20; ++i) a.y.push_back(uniform_int(rng, 0, 2));
  // permutation 0->2, 1->0, 2->1
  Labels b{{}, 3};
  for (int32_t y : a.y) b.y.push_back((y + 2) % 3);
  CHECK(homophily_ratio(g, a) == doctest::Approx(homophily_ratio(g, b)));
}

TEST_CASE("class_insensitive_homophily hand instance") {
  // 4 nodes, classes {0,0,1,1}. Edges: (0,1) same, (2,3) same, (0,2), (1,3)
  // cross. Each class: incident endpoints 4, same-class 2 -> h_k = 0.5;
  // |C_k|/n = 0.5 -> H_hat = 0.
  Graph g = Graph::from_edges({{0, 1}, {2, 3}, {0, 2}, {1, 3}}, 4);
  Labels labels{{0, 0, 1, 1}, 2};
  CHECK(class_insensitive_homophily(g, labels) == doctest::Approx(0.0));
}

TEST_CASE("class_insensitive_homophily degenerate single class") {
  Graph g = Graph::from_edges({{0, 1}}, 2);
  std::vector<std::string> warnings;
  CHECK(class_insensitive_homophily(g, {{0, 0}, 1}, &warnings) == doctest::Approx(1.0));
  CHECK(warnings.size() == 1);
}

TEST_CASE("class_insensitive_homophily skips classes with no incident edges") {
  // Class 2 exists on an isolated node.
  Graph g = Graph::from_edges({{0, 1}, {1, 2}}, 4);
  Labels labels{{0, 0, 1, 2}, 3};
  std::vector<std::string> warnings;
  const double v = class_insensitive_homophily(g, labels, &warnings);
  CHECK(warnings.size() == 1);
  CHECK(v >= 0.0);
  CHECK(v <= 1.0);
}

TEST_CASE("inject_fake_edges adds exactly round(rate*E) new edges") {
  Rng rng = make_rng(11);
  std::vector<std::pair<int32_t, int32_t>> raw;
  for (int i = 0; i < 100; ++i) raw.push_back({uniform_int(rng, 0, 49), uniform_int(rng, 0, 49)});
  Graph g = Graph::from_edges(raw, 50);
  const int e0 = g.num_edges();
  auto [g2, injected] = inject_fake_edges(g, 0.2, rng);
  CHECK(static_cast<int>(injected.size()) == std::lround(0.2 * e0));
  CHECK(g2.num_edges() == e0 + static_cast<int>(injected.size()));
  for (const Edge& e : g.edges()) CHECK(g2.has_edge(e.u, e.v));
  for (const Edge& e : injected) {
    CHECK_FALSE(g.has_edge(e.u, e.v));
    CHECK(g2.has_edge(e.u, e.v));
  }
}

TEST_CASE("inject_fake_edges rate zero is identity") {
  Rng rng = make_rng(1);
  Graph g = Graph::from_edges({{0, 1}, {1, 2}}, 4);
  auto [g2, injected] = inject_fake_edges(g, 0.0, rng);
  CHECK(injected.empty());
  CHECK(g2.num_edges() == g.num_edges());
}

TEST_CASE("inject_fake_edges infeasible when non-edges exhausted") {
  Rng rng = make_rng(1);
  Graph g = Graph::from_edges({{0, 1}, {1, 2}, {0, 2}}, 3);  // complete K3
  CHECK_THROWS_AS(inject_fake_edges(g, 1.0, rng), InfeasibleError);
}

TEST_CASE("inject_fake_edges dense regime exact sampling") {
  Rng rng = make_rng(5);
  // K5 minus two edges: only 2 non-edges free, ask for both.
  Graph g = Graph::from_edges({{0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 2}, {1, 3}, {2, 4}, {3, 4}}, 5);
  auto [g2, injected] = inject_fake_edges(g, 0.25, rng);
  CHECK(injected.size() == 2);
  CHECK(g2.num_edges() == 10);
}

TEST_CASE("make_split dense 60/20/20") {
  Rng rng = make_rng(17);
  Labels labels{std::vector<int32_t>(1200, 0), 1};
  NodeSplit s = make_split(labels, SplitScheme::kDense, rng);
  CHECK(s.train.size() == 720);
  CHECK(s.val.size() == 240);
  CHECK(s.test.size() == 240);
  CHECK(disjoint(s.train, s.val));
  CHECK(disjoint(s.train, s.test));
  CHECK(disjoint(s.val, s.test));
}

TEST_CASE("make_split sparse counts per class") {
  Rng rng = make_rng(17);
  // 7 classes, 2708 nodes (Cora-like).
  Labels labels{{}, 7};
  for (int i = 0; i < 2708; ++i) labels.y.push_back(i % 7);
  NodeSplit s = make_split(labels, SplitScheme::kSparse, rng);
  CHECK(s.train.size() == 140);
  CHECK(s.val.size() == 500);
  CHECK(s.test.size() == 1000);
  std::vector<int> per_class(7, 0);
  for (int32_t i : s.train) ++per_class[labels.y[i]];
  for (int c = 0; c < 7; ++c) CHECK(per_class[c] == 20);
  CHECK(disjoint(s.train, s.val));
  CHECK(disjoint(s.train, s.test));
  CHECK(disjoint(s.val, s.test));
}

TEST_CASE("make_split sparse infeasible on small graphs") {
  Rng rng = make_rng(17);
  Labels labels{std::vector<int32_t>(100, 0), 1};
  CHECK_THROWS_AS(make_split(labels, SplitScheme::kSparse, rng), InfeasibleError);
}

TEST_CASE("make_split deterministic per seed") {
  Labels labels{{}, 3};
  for (int i = 0; i < 300; ++i) labels.y.push_back(i % 3);
  Rng r1 = make_rng(42), r2 = make_rng(42);
  NodeSplit a = make_split(labels, SplitScheme::kDense, r1);
  NodeSplit b = make_split(labels, SplitScheme::kDense, r2);
  CHECK(a.train == b.train);
  CHECK(a.val == b.val);
  CHECK(a.test == b.test);
}

TEST_CASE("make_rate_split sizes") {
  Rng rng = make_rng(9);
  Labels labels{std::vector<int32_t>(1200, 0), 1};
  NodeSplit s = make_rate_split(labels, 0.2, rng);
  CHECK(s.train.size() == 240);
  CHECK(s.val.size() == 480);
  CHECK(s.test.size() == 480);
}
