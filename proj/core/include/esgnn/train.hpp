// Full-batch training loop with Adam, early stopping on validation
// accuracy, deterministic seeding, and a bounded worker pool for fanning
// out independent runs.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "esgnn/baselines.hpp"
#include "esgnn/dataset.hpp"
#include "esgnn/model.hpp"

namespace esgnn {

enum class ModelKind { kEsgnn, kMlp, kSgc, kGcn };

const char* model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

// Variant labels for the ablation study; all map onto EsGnnConfig flags.
enum class EsVariant { kFull, kNoIcr, kNoEs, kDualHead, kDualHeadNoIcr, kDualHeadNoEs };
const char* variant_name(EsVariant v);
EsVariant variant_from_name(const std::string& name);
void apply_variant(EsVariant v, EsGnnConfig& cfg);

struct TrainConfig {
  ModelKind model = ModelKind::kEsgnn;
  EsVariant variant = EsVariant::kFull;
  double lr = 0.05;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  int layers = 2;   // K for ES-GNN / GCN depth; propagation steps for SGC
  int hidden = 64;  // d
  double eps_r = 0.5;
  double eps_ir = 0.5;
  double lambda_icr = 0.0;
  int epochs = 1000;
  int patience = 100;
  uint64_t seed = 1;
  bool icr_weight_grad = false;

  EsGnnConfig esgnn_config() const;
  void validate() const;
};

// True when every field lies inside the published search-space bounds
// (lr in [1e-2,1e-1], weight decay in [1e-6,1e-3], dropout in {0..0.8},
// K in 1..8, eps in [0.1,1]).
bool within_search_space(const TrainConfig& cfg);

struct TrainedModel {
  ModelKind kind = ModelKind::kEsgnn;
  TrainConfig cfg;
  EsGnnParams es;
  MlpParams mlp;
  SgcParams sgc;
  GcnParams gcn;

  // Eval-mode logits on a dataset (deterministic, dropout off).
  Matrix logits(const Dataset& ds) const;
  // Eval-mode per-layer edge splits (ES-GNN only).
  std::vector<EdgeSplit> edge_splits(const Dataset& ds) const;
  // Eval-mode final channel representations [Z_R | Z_IR] (ES-GNN only).
  Matrix channel_representations(const Dataset& ds) const;
};

struct TrainResult {
  int best_epoch = 0;  // 1-based epoch of the selected checkpoint
  int epochs_run = 0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  double l_pred = 0.0;  // eval-mode losses at the selected checkpoint
  double l_icr = 0.0;
  std::vector<double> val_curve;
  int64_t wall_ms = 0;
  TrainedModel model;
};

// Argmax accuracy over `ids`; logit ties break toward the smaller class id.
double accuracy(const Matrix& logits, const Labels& labels, const std::vector<int32_t>& ids);

double evaluate(const TrainedModel& model, const Dataset& ds, const std::vector<int32_t>& ids);

TrainResult train(const Dataset& ds, const NodeSplit& split, const TrainConfig& cfg);

// --- worker pool -------------------------------------------------------------

struct RunSpec {
  const Dataset* dataset = nullptr;
  NodeSplit split;
  TrainConfig cfg;
  std::string tag;  // free-form context carried into records
  int split_id = 0;
};

// Executes runs over `threads` workers; results are returned in input order
// regardless of scheduling. threads <= 0 picks default_thread_count().
std::vector<TrainResult> run_pool(const std::vector<RunSpec>& specs, int threads = 0);

// ESGNN_THREADS when set, otherwise hardware concurrency.
int default_thread_count();

}  // namespace esgnn
