#include "esgnn/train.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

namespace esgnn {

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kEsgnn: return "esgnn";
    case ModelKind::kMlp: return "mlp";
    case ModelKind::kSgc: return "sgc";
    case ModelKind::kGcn: return "gcn";
  }
  throw ContractError("model_kind_name: bad kind");
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "esgnn") return ModelKind::kEsgnn;
  if (name == "mlp") return ModelKind::kMlp;
  if (name == "sgc") return ModelKind::kSgc;
  if (name == "gcn") return ModelKind::kGcn;
  throw ContractError("unknown model '" + name + "'");
}

const char* variant_name(EsVariant v) {
  switch (v) {
    case EsVariant::kFull: return "full";
    case EsVariant::kNoIcr: return "no_icr";
    case EsVariant::kNoEs: return "no_es";
    case EsVariant::kDualHead: return "dual_head";
    case EsVariant::kDualHeadNoIcr: return "dual_head+no_icr";
    case EsVariant::kDualHeadNoEs: return "dual_head+no_es";
  }
  throw ContractError("variant_name: bad variant");
}

EsVariant variant_from_name(const std::string& name) {
  for (EsVariant v : {EsVariant::kFull, EsVariant::kNoIcr, EsVariant::kNoEs, EsVariant::kDualHead,
                      EsVariant::kDualHeadNoIcr, EsVariant::kDualHeadNoEs})
    if (name == variant_name(v)) return v;
  throw ContractError("unknown variant '" + name + "'");
}

void apply_variant(EsVariant v, EsGnnConfig& cfg) {
  cfg.dual_head = v == EsVariant::kDualHead || v == EsVariant::kDualHeadNoIcr ||
                  v == EsVariant::kDualHeadNoEs;
  cfg.no_icr = v == EsVariant::kNoIcr || v == EsVariant::kDualHeadNoIcr;
  cfg.no_es = v == EsVariant::kNoEs || v == EsVariant::kDualHeadNoEs;
}

EsGnnConfig TrainConfig::esgnn_config() const {
  EsGnnConfig c;
  c.layers = layers;
  c.hidden = hidden;
  c.eps_r = eps_r;
  c.eps_ir = eps_ir;
  c.lambda_icr = lambda_icr;
  c.dropout = dropout;
  c.icr_weight_grad = icr_weight_grad;
  apply_variant(variant, c);
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ContractError("TrainConfig: epochs must be >= 1");
  if (patience < 1) throw ContractError("TrainConfig: patience must be >= 1");
  if (lr <= 0) throw ContractError("TrainConfig: lr must be positive");
  if (layers < 1) throw ContractError("TrainConfig: layers must be >= 1");
  if (model == ModelKind::kEsgnn) esgnn_config().validate();
}

bool within_search_space(const TrainConfig& cfg) {
  const bool dropout_ok = cfg.dropout >= 0 && cfg.dropout <= 0.8;
  return cfg.lr >= 1e-2 && cfg.lr <= 1e-1 && cfg.weight_decay >= 1e-6 && cfg.weight_decay <= 1e-3 &&
         dropout_ok && cfg.layers >= 1 && cfg.layers <= 8 && cfg.eps_r >= 0.1 && cfg.eps_r <= 1.0 &&
         cfg.eps_ir >= 0.1 && cfg.eps_ir <= 1.0 && cfg.lambda_icr >= 0;
}

double accuracy(const Matrix& logits, const Labels& labels, const std::vector<int32_t>& ids) {
  if (ids.empty()) throw ContractError("accuracy: empty node set");
  int correct = 0;
  for (int32_t i : ids) {
    const double* row = logits.row(i);
    int arg = 0;
    for (int j = 1; j < logits.cols(); ++j)
      if (row[j] > row[arg]) arg = j;  // ties keep the smaller class id
    correct += arg == labels.y[i];
  }
  return static_cast<double>(correct) / static_cast<double>(ids.size());
}

Matrix TrainedModel::logits(const Dataset& ds) const {
  Features x(ds.features);
  Rng rng = make_rng(0);  // eval mode draws nothing
  Tape tape;
  switch (kind) {
    case ModelKind::kEsgnn: {
      EsGnnForward fwd = esgnn_forward(tape, es, cfg.esgnn_config(), ds.graph, x, false, rng);
      return tape.val(fwd.logits);
    }
    case ModelKind::kMlp:
      return tape.val(mlp_forward(tape, mlp, x, cfg.dropout, false, rng));
    case ModelKind::kSgc: {
      SgcPropagation prop;
      return tape.val(sgc_forward(tape, sgc, prop.propagate(ds.graph, ds.features, cfg.layers)));
    }
    case ModelKind::kGcn:
      return tape.val(gcn_forward(tape, gcn, ds.graph, x, cfg.dropout, false, rng));
  }
  throw ContractError("TrainedModel::logits: bad kind");
}

std::vector<EdgeSplit> TrainedModel::edge_splits(const Dataset& ds) const {
  if (kind != ModelKind::kEsgnn) throw ContractError("edge_splits: only defined for the edge-splitting model");
  Features x(ds.features);
  Rng rng = make_rng(0);
  Tape tape;
  EsGnnForward fwd = esgnn_forward(tape, es, cfg.esgnn_config(), ds.graph, x, false, rng);
  return extract_edge_splits(tape, fwd);
}

Matrix TrainedModel::channel_representations(const Dataset& ds) const {
  if (kind != ModelKind::kEsgnn)
    throw ContractError("channel_representations: only defined for the edge-splitting model");
  Features x(ds.features);
  Rng rng = make_rng(0);
  Tape tape;
  EsGnnForward fwd = esgnn_forward(tape, es, cfg.esgnn_config(), ds.graph, x, false, rng);
  Value cat = tape.concat_cols({fwd.z_r, fwd.z_ir});
  return tape.val(cat);
}

double evaluate(const TrainedModel& model, const Dataset& ds, const std::vector<int32_t>& ids) {
  return accuracy(model.logits(ds), ds.labels, ids);
}

namespace {

struct ParamRefs {
  std::vector<Matrix*> params;
  std::vector<std::string> names;
  std::vector<double> decay;  // weight decay per parameter (0 for biases)
};

template <typename P>
ParamRefs collect(P& p, double weight_decay) {
  ParamRefs refs;
  p.visit([&](const std::string& name, Matrix& m, bool is_weight) {
    refs.params.push_back(&m);
    refs.names.push_back(name);
    refs.decay.push_back(is_weight ? weight_decay : 0.0);
  });
  return refs;
}

}  // namespace

TrainResult train(const Dataset& ds, const NodeSplit& split, const TrainConfig& cfg) {
  cfg.validate();
  ds.validate();
  const int n = ds.num_nodes();
  for (const auto* ids : {&split.train, &split.val, &split.test}) {
    if (ids->empty()) throw ContractError("train: empty split");
    for (int32_t i : *ids)
      if (i < 0 || i >= n) throw ContractError("train: split node id out of range");
  }

  const auto t0 = std::chrono::steady_clock::now();
  Rng rng = make_rng(cfg.seed);

  TrainResult result;
  result.model.kind = cfg.model;
  result.model.cfg = cfg;
  TrainedModel& model = result.model;

  const EsGnnConfig es_cfg = cfg.esgnn_config();
  switch (cfg.model) {
    case ModelKind::kEsgnn:
      model.es = EsGnnParams::init(ds.num_features(), ds.labels.num_classes, es_cfg, rng);
      break;
    case ModelKind::kMlp:
      model.mlp = MlpParams::init(ds.num_features(), cfg.hidden, ds.labels.num_classes, rng);
      break;
    case ModelKind::kSgc:
      model.sgc = SgcParams::init(ds.num_features(), ds.labels.num_classes, rng);
      break;
    case ModelKind::kGcn:
      model.gcn = GcnParams::init(ds.num_features(), cfg.hidden, ds.labels.num_classes, cfg.layers, rng);
      break;
  }

  Features x(ds.features);
  SgcPropagation sgc_prop;
  const Matrix* sgc_features =
      cfg.model == ModelKind::kSgc ? &sgc_prop.propagate(ds.graph, ds.features, cfg.layers) : nullptr;

  AdamState adam;
  TrainedModel best = model;
  double best_val = -1.0;
  int best_epoch = 0;
  double best_test = 0.0;

  // Eval-mode logits reusing the prebuilt feature view / SGC cache.
  auto eval_logits = [&]() -> Matrix {
    Tape tape;
    Rng eval_rng = make_rng(0);
    switch (cfg.model) {
      case ModelKind::kEsgnn: {
        EsGnnForward fwd = esgnn_forward(tape, model.es, es_cfg, ds.graph, x, false, eval_rng);
        return tape.val(fwd.logits);
      }
      case ModelKind::kMlp:
        return tape.val(mlp_forward(tape, model.mlp, x, cfg.dropout, false, eval_rng));
      case ModelKind::kSgc:
        return tape.val(sgc_forward(tape, model.sgc, *sgc_features));
      case ModelKind::kGcn:
        return tape.val(gcn_forward(tape, model.gcn, ds.graph, x, cfg.dropout, false, eval_rng));
    }
    throw ContractError("train: bad model kind");
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Training step.
    {
      Tape tape;
      Value loss{-1};
      ParamRefs refs;
      std::vector<Value> leaves;
      switch (cfg.model) {
        case ModelKind::kEsgnn: {
          BoundParams bound;
          EsGnnForward fwd = esgnn_forward(tape, model.es, es_cfg, ds.graph, x, true, rng, &bound);
          loss = esgnn_total_loss(tape, fwd, ds.labels, split.train, ds.graph.edges(), es_cfg);
          refs = collect(model.es, cfg.weight_decay);
          leaves = {bound.w_r, bound.w_ir, bound.b_r, bound.b_ir};
          for (Value g : bound.g) leaves.push_back(g);
          leaves.push_back(bound.w_f);
          leaves.push_back(bound.b_f);
          break;
        }
        case ModelKind::kMlp: {
          MlpBound bound;
          Value logits = mlp_forward(tape, model.mlp, x, cfg.dropout, true, rng, &bound);
          loss = tape.cross_entropy(logits, ds.labels, split.train);
          refs = collect(model.mlp, cfg.weight_decay);
          leaves = {bound.w0, bound.b0, bound.w1, bound.b1};
          break;
        }
        case ModelKind::kSgc: {
          Value w;
          Value logits = sgc_forward(tape, model.sgc, *sgc_features, &w);
          loss = tape.cross_entropy(logits, ds.labels, split.train);
          refs = collect(model.sgc, cfg.weight_decay);
          leaves = {w};
          break;
        }
        case ModelKind::kGcn: {
          GcnBound bound;
          Value logits = gcn_forward(tape, model.gcn, ds.graph, x, cfg.dropout, true, rng, &bound);
          loss = tape.cross_entropy(logits, ds.labels, split.train);
          refs = collect(model.gcn, cfg.weight_decay);
          for (size_t i = 0; i < bound.w.size(); ++i) {
            leaves.push_back(bound.w[i]);
            leaves.push_back(bound.b[i]);
          }
          break;
        }
      }
      if (!tape.val(loss).all_finite())
        throw NumericError("train: loss diverged at epoch " + std::to_string(epoch));
      tape.backward(loss);
      std::vector<const Matrix*> grads;
      grads.reserve(leaves.size());
      for (Value v : leaves) grads.push_back(&tape.grad(v));
      if (grads.size() != refs.params.size()) throw ContractError("train: parameter binding mismatch");
      adam_step(refs.params, grads, adam, cfg.lr, refs.decay);
    }

    // Evaluation pass (dropout off).
    const Matrix logits = eval_logits();
    const double val_acc = accuracy(logits, ds.labels, split.val);
    result.val_curve.push_back(val_acc);
    if (val_acc > best_val) {  // ties keep the earliest epoch
      best_val = val_acc;
      best_epoch = epoch;
      best = model;
      best_test = accuracy(logits, ds.labels, split.test);
    }
    result.epochs_run = epoch;
    if (epoch - best_epoch >= cfg.patience) break;
  }

  result.model = best;
  result.best_epoch = best_epoch;
  result.val_acc = best_val;
  result.test_acc = best_test;

  // Recompute the component losses at the selected checkpoint (eval mode).
  {
    Tape tape;
    Rng eval_rng = make_rng(0);
    if (cfg.model == ModelKind::kEsgnn) {
      EsGnnForward fwd = esgnn_forward(tape, result.model.es, es_cfg, ds.graph, x, false, eval_rng);
      Value l_pred{-1}, l_icr{-1};
      (void)esgnn_total_loss(tape, fwd, ds.labels, split.train, ds.graph.edges(), es_cfg, &l_pred, &l_icr);
      result.l_pred = tape.val(l_pred)(0, 0);
      result.l_icr = tape.val(l_icr)(0, 0);
    } else {
      const Matrix logits = result.model.logits(ds);
      Value lv = tape.cross_entropy(tape.constant(logits), ds.labels, split.train);
      result.l_pred = tape.val(lv)(0, 0);
      result.l_icr = 0.0;
    }
  }

  result.wall_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

int default_thread_count() {
  if (const char* env = std::getenv("ESGNN_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 2 : static_cast<int>(hw);
}

std::vector<TrainResult> run_pool(const std::vector<RunSpec>& specs, int threads) {
  if (threads <= 0) threads = default_thread_count();
  threads = std::min<int>(threads, std::max<size_t>(specs.size(), 1));
  std::vector<TrainResult> results(specs.size());
  std::vector<std::string> errors(specs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      try {
        results[i] = train(*specs[i].dataset, specs[i].split, specs[i].cfg);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty())
      throw Error("run " + std::to_string(i) + " (" + specs[i].tag + ") failed: " + errors[i]);
  return results;
}

}  // namespace esgnn
