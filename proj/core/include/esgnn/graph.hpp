// Immutable undirected sparse graph: canonical edge list (u < v, deduped,
// no self-loops) plus a CSR neighbor index. Per-edge quantities elsewhere in
// the library (split coefficients, provenance tags) are indexed by position
// in edges() and shared by both directions.
#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "esgnn/error.hpp"
#include "esgnn/rng.hpp"

namespace esgnn {

struct Edge {
  int32_t u = 0;
  int32_t v = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

class Graph {
 public:
  Graph() = default;

  // Canonicalizes raw pairs: drops self-loops, merges duplicates and
  // reversed duplicates, orders endpoints u < v. Throws MalformedInput on
  // out-of-range ids.
  static Graph from_edges(const std::vector<std::pair<int32_t, int32_t>>& raw, int n);
  // Edges must already be canonical (used by generators that build them so).
  static Graph from_canonical(std::vector<Edge> edges, int n);

  int num_nodes() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }

  int degree(int u) const { return adj_offsets_[u + 1] - adj_offsets_[u]; }
  // Neighbors of u as (node id, edge id) pairs.
  struct NeighborRange {
    const int32_t* nodes_begin;
    const int32_t* edges_begin;
    int count;
  };
  NeighborRange neighbors(int u) const {
    const int32_t off = adj_offsets_[u];
    return {adj_nodes_.data() + off, adj_edges_.data() + off, adj_offsets_[u + 1] - off};
  }

  bool has_edge(int32_t u, int32_t v) const;
  // Position of canonical edge {u,v} in edges(), if present.
  std::optional<int32_t> edge_id(int32_t u, int32_t v) const;

 private:
  void build_csr();

  int n_ = 0;
  std::vector<Edge> edges_;           // sorted lexicographically, u < v
  std::vector<int32_t> adj_offsets_;  // n + 1
  std::vector<int32_t> adj_nodes_;    // 2E
  std::vector<int32_t> adj_edges_;    // 2E, edge id per adjacency entry
};

struct Labels {
  std::vector<int32_t> y;
  int32_t num_classes = 0;

  void validate(int n) const;
};

struct NodeSplit {
  std::vector<int32_t> train, val, test;
};

// Fraction of undirected edges whose endpoints share a label.
double homophily_ratio(const Graph& g, const Labels& labels);

// Class-imbalance-aware homophily: (1/(C-1)) * sum_k max(0, h_k - |C_k|/n),
// where h_k is the same-class fraction of edge endpoints incident to class-k
// nodes. Classes without incident edges are skipped (warning recorded);
// single-class graphs return 1.0 by convention.
double class_insensitive_homophily(const Graph& g, const Labels& labels,
                                   std::vector<std::string>* warnings = nullptr);

// Adds round(rate * E) uniformly random new edges (no duplicates, no
// self-loops). Returns the perturbed graph and the injected edges.
std::pair<Graph, std::vector<Edge>> inject_fake_edges(const Graph& g, double rate, Rng& rng);

enum class SplitScheme { kDense, kSparse };

// Dense: 60/20/20 random partition. Sparse: 20 train nodes per class, then
// 500 validation and 1000 test nodes from the remainder.
NodeSplit make_split(const Labels& labels, SplitScheme scheme, Rng& rng);

// Label-rate split: round(rate*n) train nodes, remainder halved into
// val/test. make_split(kDense) is the rate-0.6 case.
NodeSplit make_rate_split(const Labels& labels, double train_rate, Rng& rng);

}  // namespace esgnn
