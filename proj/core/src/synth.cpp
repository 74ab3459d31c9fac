#include "esgnn/synth.hpp"

#include <cmath>
#include <string>

namespace esgnn {

void SynthConfig::validate() const {
  if (n <= 0 || n % 9 != 0) throw ContractError("SynthConfig: n must be a positive multiple of 9");
  if (num_classes != 3) throw ContractError("SynthConfig: generator is defined for 3 classes");
  if (num_features <= 0) throw ContractError("SynthConfig: features must be positive");
  if (p_e < 0 || p_e > 1 || p_i < 0 || p_i > 1 || q < 0 || q > 1)
    throw ContractError("SynthConfig: probabilities must lie in [0,1]");
  if (kappa < 0 || kappa * p_e > 1 || kappa * p_i > 1)
    throw ContractError("SynthConfig: scaled probabilities exceed 1");
  if (noise_std < 0 || mean_scale < 0) throw ContractError("SynthConfig: negative scale");
}

double expected_homophily(double p_e, double p_i, int n) {
  if (p_e < 0 || p_i < 0) throw ContractError("expected_homophily: negative probability");
  if (p_e == 0.0) return 0.0;
  const double rel = 3.0 * (n - 3);
  return rel / (rel + 2.0 * n * p_i / p_e);
}

double expected_avg_degree(double p_e, double p_i, int n, double kappa) {
  return kappa * ((3.0 * p_e + 4.0 * p_i) / 9.0 * n - p_e);
}

const std::array<SynthParamRow, 11>& synth_param_table() {
  static const std::array<SynthParamRow, 11> rows = {{
      {0.0, 0.02, 0.72, 0.1},
      {0.1, 0.06, 0.81, 0.084},
      {0.2, 0.1, 0.6, 0.1},
      {0.3, 0.2, 0.7, 0.075},
      {0.4, 0.4, 0.9, 0.05},
      {0.5, 0.4, 0.6, 0.062},
      {0.6, 0.6, 0.6, 0.05},
      {0.7, 0.7, 0.45, 0.05},
      {0.8, 0.8, 0.3, 0.05},
      {0.9, 0.9, 0.15, 0.05},
      {1.0, 0.96, 0.045, 0.051},
  }};
  return rows;
}

const SynthParamRow& synth_param_row(double h_target) {
  for (const SynthParamRow& row : synth_param_table())
    if (std::fabs(row.h_target - h_target) < 1e-9) return row;
  throw ContractError("synth_param_row: no tabulated row for H=" + std::to_string(h_target));
}

SynthDataset generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng = make_rng(cfg.seed);
  const int n = cfg.n;
  const int per_class = n / 3;
  const int per_cell = n / 9;

  SynthDataset out;
  out.data.name = "synthetic";
  out.data.labels.num_classes = 3;
  out.data.labels.y.resize(n);
  out.implicit_kind.resize(n);
  // Equal class blocks; within each class, kinds in equal cells of n/9.
  for (int i = 0; i < n; ++i) {
    out.data.labels.y[i] = i / per_class;
    out.implicit_kind[i] = (i % per_class) / per_cell;
  }

  // Features: class mean + kind mean + two independent noise draws.
  std::normal_distribution<double> mean_draw(0.0, cfg.mean_scale);
  Matrix mu_e(3, cfg.num_features), mu_i(3, cfg.num_features);
  for (int c = 0; c < 3; ++c)
    for (int j = 0; j < cfg.num_features; ++j) mu_e(c, j) = mean_draw(rng);
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < cfg.num_features; ++j) mu_i(k, j) = mean_draw(rng);

  std::normal_distribution<double> noise(0.0, cfg.noise_std);
  out.data.features = Matrix(n, cfg.num_features);
  for (int i = 0; i < n; ++i) {
    const int c = out.data.labels.y[i];
    const int k = out.implicit_kind[i];
    double* row = out.data.features.row(i);
    for (int j = 0; j < cfg.num_features; ++j)
      row[j] = (mu_e(c, j) + noise(rng)) + (mu_i(k, j) + noise(rng));
  }

  // Edges: one Bernoulli draw per unordered pair, class rule first.
  const double pe = cfg.kappa * cfg.p_e;
  const double pi = cfg.kappa * cfg.p_i;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Edge> edges;
  std::vector<EdgeTag> tags;
  for (int32_t i = 0; i < n; ++i) {
    const int ci = out.data.labels.y[i], ki = out.implicit_kind[i];
    for (int32_t j = i + 1; j < n; ++j) {
      double p;
      EdgeTag tag;
      if (out.data.labels.y[j] == ci) {
        p = pe;
        tag = EdgeTag::kRelevant;
      } else if (out.implicit_kind[j] == ki) {
        p = pi;
        tag = EdgeTag::kIrrelevant;
      } else {
        p = cfg.q;
        tag = EdgeTag::kNoise;
      }
      if (u(rng) < p) {
        edges.push_back({i, j});
        tags.push_back(tag);
      }
    }
  }
  if (edges.empty())
    throw InfeasibleError("generate_synthetic: zero edges drawn; regenerate with another seed or config");
  out.data.graph = Graph::from_canonical(std::move(edges), n);
  out.data.provenance = std::move(tags);
  return out;
}

}  // namespace esgnn
