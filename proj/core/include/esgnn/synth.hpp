// Homophily-controlled synthetic datasets. Nodes carry an explicit class
// (the prediction target) and an implicit kind; same-class pairs link with
// probability kappa*P_E, same-kind cross-class pairs with kappa*P_I, all
// remaining pairs with q. Features are sums of two Gaussian draws, one
// centered on the class mean and one on the kind mean.
#pragma once

#include <array>
#include <cstdint>

#include "esgnn/dataset.hpp"

namespace esgnn {

struct SynthConfig {
  int n = 1200;
  int num_classes = 3;
  int num_features = 500;
  double p_e = 0.0;
  double p_i = 0.0;
  double q = 1e-5;
  double kappa = 1.0;
  double mean_scale = 1.0;
  double noise_std = 10.0;
  uint64_t seed = 1;

  void validate() const;
};

struct SynthDataset {
  Dataset data;                       // graph, features, labels, provenance
  std::vector<int32_t> implicit_kind; // length n
};

// Closed-form expected homophily 3(n-3) / (3(n-3) + 2n*P_I/P_E); P_E = 0
// returns 0 by limit convention.
double expected_homophily(double p_e, double p_i, int n);

// kappa * T(P_E, P_I) with T = (3 P_E + 4 P_I) / 9 * n - P_E. This is the
// closed-form degree estimate as published; measured average degree is what
// generated graphs actually report (see generate()).
double expected_avg_degree(double p_e, double p_i, int n, double kappa);

struct SynthParamRow {
  double h_target;
  double p_e;
  double p_i;
  double kappa;
};

// The eleven (H, P_E, P_I, kappa) rows used for the homophily sweep.
const std::array<SynthParamRow, 11>& synth_param_table();
// Row lookup by H target (exact match on the tabulated value).
const SynthParamRow& synth_param_row(double h_target);

SynthDataset generate_synthetic(const SynthConfig& cfg);

}  // namespace esgnn
