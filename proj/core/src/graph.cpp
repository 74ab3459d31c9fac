#include "esgnn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

namespace esgnn {

namespace {

bool edge_less(const Edge& a, const Edge& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; }

uint64_t pair_key(int32_t u, int32_t v, int n) {
  return static_cast<uint64_t>(u) * static_cast<uint64_t>(n) + static_cast<uint64_t>(v);
}

}  // namespace

Graph Graph::from_edges(const std::vector<std::pair<int32_t, int32_t>>& raw, int n) {
  if (n < 0) throw ContractError("Graph: negative node count");
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (const auto& [a, b] : raw) {
    if (a < 0 || b < 0 || a >= n || b >= n)
      throw MalformedInput("Graph: edge endpoint " + std::to_string(a) + "-" + std::to_string(b) +
                           " out of range for n=" + std::to_string(n));
    if (a == b) continue;
    edges.push_back(a < b ? Edge{a, b} : Edge{b, a});
  }
  std::sort(edges.begin(), edges.end(), edge_less);
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return from_canonical(std::move(edges), n);
}

Graph Graph::from_canonical(std::vector<Edge> edges, int n) {
  Graph g;
  g.n_ = n;
  g.edges_ = std::move(edges);
  for (size_t i = 0; i < g.edges_.size(); ++i) {
    const Edge& e = g.edges_[i];
    if (e.u < 0 || e.v >= n || e.u >= e.v) throw ContractError("Graph: non-canonical edge list");
    if (i > 0 && !edge_less(g.edges_[i - 1], e)) throw ContractError("Graph: edge list not sorted/unique");
  }
  g.build_csr();
  return g;
}

void Graph::build_csr() {
  adj_offsets_.assign(n_ + 1, 0);
  for (const Edge& e : edges_) {
    ++adj_offsets_[e.u + 1];
    ++adj_offsets_[e.v + 1];
  }
  for (int i = 0; i < n_; ++i) adj_offsets_[i + 1] += adj_offsets_[i];
  adj_nodes_.resize(edges_.size() * 2);
  adj_edges_.resize(edges_.size() * 2);
  std::vector<int32_t> cursor(adj_offsets_.begin(), adj_offsets_.end() - 1);
  for (size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    adj_nodes_[cursor[e.u]] = e.v;
    adj_edges_[cursor[e.u]++] = static_cast<int32_t>(i);
    adj_nodes_[cursor[e.v]] = e.u;
    adj_edges_[cursor[e.v]++] = static_cast<int32_t>(i);
  }
}

bool Graph::has_edge(int32_t u, int32_t v) const { return edge_id(u, v).has_value(); }

std::optional<int32_t> Graph::edge_id(int32_t u, int32_t v) const {
  if (u == v) return std::nullopt;
  Edge key = u < v ? Edge{u, v} : Edge{v, u};
  auto it = std::lower_bound(edges_.begin(), edges_.end(), key, edge_less);
  if (it != edges_.end() && *it == key) return static_cast<int32_t>(it - edges_.begin());
  return std::nullopt;
}

void Labels::validate(int n) const {
  if (static_cast<int>(y.size()) != n) throw ContractError("Labels: size mismatch");
  if (num_classes > n) throw ContractError("Labels: more classes than nodes");
  for (int32_t c : y)
    if (c < 0 || c >= num_classes) throw ContractError("Labels: class id out of range");
}

double homophily_ratio(const Graph& g, const Labels& labels) {
  if (g.num_edges() == 0) throw UndefinedMetric("homophily_ratio: graph has no edges");
  labels.validate(g.num_nodes());
  int64_t same = 0;
  for (const Edge& e : g.edges())
    if (labels.y[e.u] == labels.y[e.v]) ++same;
  return static_cast<double>(same) / static_cast<double>(g.num_edges());
}

double class_insensitive_homophily(const Graph& g, const Labels& labels,
                                   std::vector<std::string>* warnings) {
  if (g.num_edges() == 0) throw UndefinedMetric("class_insensitive_homophily: graph has no edges");
  labels.validate(g.num_nodes());
  const int n = g.num_nodes();
  const int c = labels.num_classes;
  if (c <= 1) {
    if (warnings) warnings->push_back("class_insensitive_homophily: single-class graph, returning 1 by convention");
    return 1.0;
  }
  std::vector<int64_t> class_size(c, 0);
  for (int32_t y : labels.y) ++class_size[y];
  // Endpoint counts: for each class k, total adjacency entries at class-k
  // nodes and how many of those point at a same-class neighbor.
  std::vector<int64_t> incident(c, 0), same(c, 0);
  for (const Edge& e : g.edges()) {
    const int32_t yu = labels.y[e.u], yv = labels.y[e.v];
    ++incident[yu];
    ++incident[yv];
    if (yu == yv) {
      ++same[yu];
      ++same[yv];
    }
  }
  double acc = 0.0;
  for (int k = 0; k < c; ++k) {
    if (incident[k] == 0) {
      if (warnings)
        warnings->push_back("class_insensitive_homophily: class " + std::to_string(k) +
                            " has no incident edges, skipped");
      continue;
    }
    const double hk = static_cast<double>(same[k]) / static_cast<double>(incident[k]);
    acc += std::max(0.0, hk - static_cast<double>(class_size[k]) / n);
  }
  return acc / (c - 1);
}

std::pair<Graph, std::vector<Edge>> inject_fake_edges(const Graph& g, double rate, Rng& rng) {
  if (rate < 0) throw ContractError("inject_fake_edges: negative rate");
  const int n = g.num_nodes();
  const int64_t want = std::llround(rate * g.num_edges());
  const int64_t total_pairs = static_cast<int64_t>(n) * (n - 1) / 2;
  const int64_t available = total_pairs - g.num_edges();
  if (want > available)
    throw InfeasibleError("inject_fake_edges: requested " + std::to_string(want) + " edges but only " +
                          std::to_string(available) + " non-edges exist");
  std::unordered_set<uint64_t> taken;
  taken.reserve(g.num_edges() + want);
  for (const Edge& e : g.edges()) taken.insert(pair_key(e.u, e.v, n));

  std::vector<Edge> injected;
  injected.reserve(want);
  if (want * 2 > available) {
    // Dense regime: enumerate the free pairs and sample without replacement.
    std::vector<Edge> free_pairs;
    free_pairs.reserve(available);
    for (int32_t u = 0; u < n; ++u)
      for (int32_t v = u + 1; v < n; ++v)
        if (!taken.count(pair_key(u, v, n))) free_pairs.push_back({u, v});
    shuffle(free_pairs, rng);
    injected.assign(free_pairs.begin(), free_pairs.begin() + want);
  } else {
    std::uniform_int_distribution<int32_t> node(0, n - 1);
    while (static_cast<int64_t>(injected.size()) < want) {
      int32_t u = node(rng), v = node(rng);
      if (u == v) continue;
      if (u > v) std::swap(u, v);
      if (!taken.insert(pair_key(u, v, n)).second) continue;
      injected.push_back({u, v});
    }
  }

  std::vector<Edge> merged = g.edges();
  merged.insert(merged.end(), injected.begin(), injected.end());
  std::sort(merged.begin(), merged.end(), edge_less);
  return {Graph::from_canonical(std::move(merged), n), injected};
}

NodeSplit make_rate_split(const Labels& labels, double train_rate, Rng& rng) {
  const int n = static_cast<int>(labels.y.size());
  if (train_rate <= 0 || train_rate >= 1) throw ContractError("make_rate_split: rate outside (0,1)");
  std::vector<int32_t> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  shuffle(order, rng);
  const int n_train = static_cast<int>(std::lround(train_rate * n));
  const int n_val = (n - n_train) / 2;
  if (n_train < 1 || n_val < 1 || n - n_train - n_val < 1)
    throw InfeasibleError("make_rate_split: not enough nodes for a three-way split");
  NodeSplit s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  s.test.assign(order.begin() + n_train + n_val, order.end());
  return s;
}

NodeSplit make_split(const Labels& labels, SplitScheme scheme, Rng& rng) {
  const int n = static_cast<int>(labels.y.size());
  if (scheme == SplitScheme::kDense) return make_rate_split(labels, 0.6, rng);

  const int c = labels.num_classes;
  constexpr int kPerClass = 20, kVal = 500, kTest = 1000;
  if (n < kPerClass * c + kVal + kTest)
    throw InfeasibleError("make_split: sparse scheme needs at least " +
                          std::to_string(kPerClass * c + kVal + kTest) + " nodes, have " + std::to_string(n));
  std::vector<std::vector<int32_t>> by_class(c);
  for (int i = 0; i < n; ++i) by_class[labels.y[i]].push_back(i);
  NodeSplit s;
  std::vector<char> used(n, 0);
  for (int k = 0; k < c; ++k) {
    if (static_cast<int>(by_class[k].size()) < kPerClass)
      throw InfeasibleError("make_split: class " + std::to_string(k) + " has fewer than 20 nodes");
    shuffle(by_class[k], rng);
    for (int i = 0; i < kPerClass; ++i) {
      s.train.push_back(by_class[k][i]);
      used[by_class[k][i]] = 1;
    }
  }
  std::vector<int32_t> rest;
  rest.reserve(n - s.train.size());
  for (int i = 0; i < n; ++i)
    if (!used[i]) rest.push_back(i);
  shuffle(rest, rng);
  s.val.assign(rest.begin(), rest.begin() + kVal);
  s.test.assign(rest.begin() + kVal, rest.begin() + kVal + kTest);
  return s;
}

}  // namespace esgnn
