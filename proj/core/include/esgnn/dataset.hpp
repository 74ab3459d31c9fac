// Dataset container and on-disk bundle format, plus the plain-text citation
// network loader (content/cites files).
//
// Bundle layout (one directory):
//   meta.json        {"name", "n", "f", "C"}
//   edges.csv        one "u,v" row per undirected edge, no header
//   features.csv     n rows of f comma-separated full-precision floats
//   labels.csv       n rows, one class id each
//   provenance.csv   optional, one tag per edge: relevant|irrelevant|noise
//   splits.json      optional, {"name": [node ids...]}
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "esgnn/graph.hpp"
#include "esgnn/matrix.hpp"

namespace esgnn {

enum class EdgeTag : uint8_t { kRelevant = 0, kIrrelevant = 1, kNoise = 2 };

const char* edge_tag_name(EdgeTag tag);
EdgeTag edge_tag_from_name(const std::string& name);

struct Dataset {
  std::string name;
  Graph graph;
  Matrix features;                 // n x f
  Labels labels;
  std::vector<EdgeTag> provenance; // empty or one tag per edge
  std::map<std::string, std::vector<int32_t>> splits;

  int num_nodes() const { return graph.num_nodes(); }
  int num_features() const { return features.cols(); }
  void validate() const;
};

void save_bundle(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_bundle(const std::filesystem::path& dir);

struct ContentCitesReport {
  int nodes = 0;
  int features = 0;
  int classes = 0;
  int cite_lines = 0;
  int dropped_citations = 0;  // lines whose endpoint lacks a content row
  int undirected_edges = 0;   // after dedup/self-loop removal
};

// LINQS-style plain text ingestion. Content lines are
// `paper_id<TAB>feat_0 .. feat_{f-1}<TAB>label_string`; cites lines are
// `cited<TAB>citing`. String ids map to dense node ids in first-appearance
// order; label strings map to class ids in sorted order.
Dataset load_content_cites(const std::filesystem::path& content_path,
                           const std::filesystem::path& cites_path,
                           ContentCitesReport* report = nullptr);

}  // namespace esgnn
