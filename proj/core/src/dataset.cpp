#include "esgnn/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace esgnn {

using nlohmann::json;

const char* edge_tag_name(EdgeTag tag) {
  switch (tag) {
    case EdgeTag::kRelevant: return "relevant";
    case EdgeTag::kIrrelevant: return "irrelevant";
    case EdgeTag::kNoise: return "noise";
  }
  throw ContractError("edge_tag_name: bad tag");
}

EdgeTag edge_tag_from_name(const std::string& name) {
  if (name == "relevant") return EdgeTag::kRelevant;
  if (name == "irrelevant") return EdgeTag::kIrrelevant;
  if (name == "noise") return EdgeTag::kNoise;
  throw MalformedInput("unknown edge tag '" + name + "'");
}

void Dataset::validate() const {
  labels.validate(graph.num_nodes());
  if (features.rows() != graph.num_nodes()) throw ContractError("Dataset: feature row count mismatch");
  if (!provenance.empty() && provenance.size() != static_cast<size_t>(graph.num_edges()))
    throw ContractError("Dataset: provenance size mismatch");
  for (const auto& [name, ids] : splits)
    for (int32_t i : ids)
      if (i < 0 || i >= graph.num_nodes()) throw ContractError("Dataset: split '" + name + "' id out of range");
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void file_error(const std::filesystem::path& p, int line, const std::string& what) {
  throw MalformedInput(p.string() + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw MalformedInput("cannot open " + p.string());
  return in;
}

}  // namespace

void save_bundle(const Dataset& ds, const std::filesystem::path& dir) {
  ds.validate();
  std::filesystem::create_directories(dir);

  json meta = {{"name", ds.name},
               {"n", ds.graph.num_nodes()},
               {"f", ds.features.cols()},
               {"C", ds.labels.num_classes}};
  std::ofstream(dir / "meta.json") << meta.dump(2) << "\n";

  {
    std::ofstream out(dir / "edges.csv");
    for (const Edge& e : ds.graph.edges()) out << e.u << "," << e.v << "\n";
  }
  {
    std::ofstream out(dir / "features.csv");
    for (int i = 0; i < ds.features.rows(); ++i) {
      const double* row = ds.features.row(i);
      for (int j = 0; j < ds.features.cols(); ++j) {
        if (j) out << ",";
        out << format_double(row[j]);
      }
      out << "\n";
    }
  }
  {
    std::ofstream out(dir / "labels.csv");
    for (int32_t y : ds.labels.y) out << y << "\n";
  }
  if (!ds.provenance.empty()) {
    std::ofstream out(dir / "provenance.csv");
    for (EdgeTag t : ds.provenance) out << edge_tag_name(t) << "\n";
  }
  if (!ds.splits.empty()) {
    json sj = json::object();
    for (const auto& [name, ids] : ds.splits) sj[name] = ids;
    std::ofstream(dir / "splits.json") << sj.dump(2) << "\n";
  }
}

Dataset load_bundle(const std::filesystem::path& dir) {
  Dataset ds;
  json meta;
  {
    std::ifstream in = open_or_throw(dir / "meta.json");
    in >> meta;
  }
  ds.name = meta.at("name").get<std::string>();
  const int n = meta.at("n").get<int>();
  const int f = meta.at("f").get<int>();
  ds.labels.num_classes = meta.at("C").get<int>();

  std::vector<std::pair<int32_t, int32_t>> raw_edges;
  {
    std::ifstream in = open_or_throw(dir / "edges.csv");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      int32_t u, v;
      if (std::sscanf(line.c_str(), "%d,%d", &u, &v) != 2)
        file_error(dir / "edges.csv", lineno, "expected 'u,v'");
      raw_edges.push_back({u, v});
    }
  }
  ds.graph = Graph::from_edges(raw_edges, n);
  if (ds.graph.num_edges() != static_cast<int>(raw_edges.size()))
    throw MalformedInput((dir / "edges.csv").string() + ": edges are not canonical (duplicates or self-loops)");

  ds.features = Matrix(n, f);
  {
    std::ifstream in = open_or_throw(dir / "features.csv");
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (row >= n) file_error(dir / "features.csv", row + 1, "more rows than meta n=" + std::to_string(n));
      const char* p = line.c_str();
      for (int j = 0; j < f; ++j) {
        char* end = nullptr;
        ds.features(row, j) = std::strtod(p, &end);
        if (end == p) file_error(dir / "features.csv", row + 1, "expected " + std::to_string(f) + " values");
        p = end;
        if (*p == ',') ++p;
      }
      ++row;
    }
    if (row != n)
      throw MalformedInput((dir / "features.csv").string() + ": row count " + std::to_string(row) +
                           " does not match meta n=" + std::to_string(n));
  }
  {
    std::ifstream in = open_or_throw(dir / "labels.csv");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ds.labels.y.push_back(static_cast<int32_t>(std::strtol(line.c_str(), nullptr, 10)));
    }
    if (static_cast<int>(ds.labels.y.size()) != n)
      throw MalformedInput((dir / "labels.csv").string() + ": row count " +
                           std::to_string(ds.labels.y.size()) + " does not match meta n=" + std::to_string(n));
  }
  if (std::filesystem::exists(dir / "provenance.csv")) {
    std::ifstream in = open_or_throw(dir / "provenance.csv");
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) ds.provenance.push_back(edge_tag_from_name(line));
    if (ds.provenance.size() != static_cast<size_t>(ds.graph.num_edges()))
      throw MalformedInput((dir / "provenance.csv").string() + ": tag count does not match edge count");
  }
  if (std::filesystem::exists(dir / "splits.json")) {
    json sj;
    std::ifstream in = open_or_throw(dir / "splits.json");
    in >> sj;
    for (auto& [name, ids] : sj.items()) ds.splits[name] = ids.get<std::vector<int32_t>>();
  }
  ds.validate();
  return ds;
}

Dataset load_content_cites(const std::filesystem::path& content_path,
                           const std::filesystem::path& cites_path, ContentCitesReport* report) {
  Dataset ds;
  ds.name = content_path.stem().string();

  std::unordered_map<std::string, int32_t> id_map;
  std::vector<std::vector<double>> feats;
  std::vector<std::string> label_strings;
  {
    std::ifstream in = open_or_throw(content_path);
    std::string line;
    int lineno = 0;
    size_t width = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::vector<std::string> fields;
      std::string tok;
      while (ss >> tok) fields.push_back(tok);
      if (fields.size() < 3) file_error(content_path, lineno, "expected id, features, label");
      if (width == 0) width = fields.size();
      if (fields.size() != width)
        file_error(content_path, lineno,
                   "ragged feature row: " + std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(width));
      const std::string& pid = fields.front();
      if (id_map.count(pid)) file_error(content_path, lineno, "duplicate paper id '" + pid + "'");
      id_map[pid] = static_cast<int32_t>(feats.size());
      std::vector<double> row(width - 2);
      for (size_t j = 1; j + 1 < fields.size(); ++j) {
        char* end = nullptr;
        row[j - 1] = std::strtod(fields[j].c_str(), &end);
        if (end == fields[j].c_str() || *end != '\0')
          file_error(content_path, lineno, "bad feature value '" + fields[j] + "'");
      }
      feats.push_back(std::move(row));
      label_strings.push_back(fields.back());
    }
  }
  const int n = static_cast<int>(feats.size());
  if (n == 0) throw MalformedInput(content_path.string() + ": no content rows");
  const int f = static_cast<int>(feats[0].size());

  // Label strings map to class ids in sorted order.
  std::vector<std::string> classes = label_strings;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  ds.labels.num_classes = static_cast<int32_t>(classes.size());
  ds.labels.y.resize(n);
  for (int i = 0; i < n; ++i)
    ds.labels.y[i] = static_cast<int32_t>(
        std::lower_bound(classes.begin(), classes.end(), label_strings[i]) - classes.begin());

  ds.features = Matrix(n, f);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < f; ++j) ds.features(i, j) = feats[i][j];

  ContentCitesReport rep;
  rep.nodes = n;
  rep.features = f;
  rep.classes = ds.labels.num_classes;

  std::vector<std::pair<int32_t, int32_t>> raw_edges;
  {
    std::ifstream in = open_or_throw(cites_path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string cited, citing;
      if (!(ss >> cited >> citing)) file_error(cites_path, lineno, "expected 'cited citing'");
      ++rep.cite_lines;
      auto a = id_map.find(cited);
      auto b = id_map.find(citing);
      if (a == id_map.end() || b == id_map.end()) {
        ++rep.dropped_citations;
        continue;
      }
      raw_edges.push_back({a->second, b->second});
    }
  }
  ds.graph = Graph::from_edges(raw_edges, n);
  rep.undirected_edges = ds.graph.num_edges();
  if (report) *report = rep;
  ds.validate();
  return ds;
}

}  // namespace esgnn
