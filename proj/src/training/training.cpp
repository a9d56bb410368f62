// SPDX-FileCopyrightText: Copyright (c) 2026 The NestDrug Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nestdrug/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>

#include "json.hpp"
#include "nestdrug/errors.hpp"
#include "nestdrug/evalkit.hpp"
#include "nestdrug/rng.hpp"

namespace nestdrug::train {

using model::Group;
using model::Mode;
using tensor::Tensor;

TaskData TaskData::subset(const std::vector<std::size_t>& rows) const {
  TaskData out;
  out.mols.reserve(rows.size());
  for (std::size_t i : rows) {
    out.mols.push_back(mols.at(i));
    out.contexts.push_back(contexts.at(i));
    out.targets.push_back(targets.at(i));
  }
  return out;
}

std::vector<int> TaskData::labels() const {
  std::vector<int> out;
  out.reserve(targets.size());
  for (double t : targets) out.push_back(t >= 0.5 ? 1 : 0);
  return out;
}

TaskData from_dataset(const Dataset& d, TaskKind kind, ContextLevels levels) {
  TaskData out;
  const std::vector<double> z = kind == TaskKind::Regression ? standardized_pic50(d) : std::vector<double>{};
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    double target = 0;
    if (kind == TaskKind::Classification) {
      require(r.label.has_value(), ErrorKind::Data, "record " + std::to_string(i) + " has no label");
      target = *r.label;
    } else {
      require(r.pic50.has_value(), ErrorKind::Data, "record " + std::to_string(i) + " has no pIC50");
      target = z[i];
    }
    out.mols.push_back(mol::parse_smiles(r.smiles));
    out.contexts.push_back({levels.l1 ? r.target_id : 0, levels.l2 ? r.assay_id : 0, levels.l3 ? r.round_id : 0});
    out.targets.push_back(target);
  }
  return out;
}

TaskData with_generic_context(TaskData d) {
  for (auto& c : d.contexts) c = ContextTuple{};
  return d;
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Pretrain: return "pretrain";
    case Phase::Finetune: return "finetune";
    case Phase::Continual: return "continual";
  }
  return "?";
}

void PhaseConfig::validate() const {
  for (double lr : {lr_backbone, lr_l1, lr_l2, lr_l3, lr_context_proj, lr_fusion, lr_head}) {
    require(lr >= 0 && std::isfinite(lr), ErrorKind::Config, "learning rates must be finite and >= 0");
  }
  require(weight_decay >= 0, ErrorKind::Config, "weight_decay must be >= 0");
  require(epochs >= 0, ErrorKind::Config, "epochs must be >= 0");
  require(batch_size >= 1, ErrorKind::Config, "batch_size must be >= 1");
  require(patience >= 1, ErrorKind::Config, "patience must be >= 1");
  require(val_fraction >= 0 && val_fraction < 1, ErrorKind::Config, "val_fraction must be in [0, 1)");
}

double PhaseConfig::lr_for(Group g) const {
  switch (g) {
    case Group::Backbone: return lr_backbone;
    case Group::ContextL1: return lr_l1;
    case Group::ContextL2: return lr_l2;
    case Group::ContextL3: return lr_l3;
    case Group::ContextProj: return lr_context_proj;
    case Group::Fusion: return lr_fusion;
    case Group::FrozenProjection: return 0.0;
    case Group::Head: return lr_head;
  }
  return 0.0;
}

PhaseConfig pretrain_defaults(double lr) {
  PhaseConfig c;
  c.phase = Phase::Pretrain;
  c.lr_backbone = c.lr_l1 = c.lr_l2 = c.lr_l3 = c.lr_context_proj = c.lr_fusion = c.lr_head = lr;
  return c;
}

PhaseConfig finetune_defaults() { return PhaseConfig{}; }

PhaseConfig continual_defaults() {
  PhaseConfig c;
  c.phase = Phase::Continual;
  c.lr_backbone = 1e-6;
  c.lr_l1 = 1e-4;
  c.lr_l2 = 1e-4;
  c.lr_l3 = 1e-3;
  c.lr_context_proj = 1e-4;
  c.lr_fusion = 1e-4;
  c.lr_head = 1e-4;
  c.epochs = 1;
  return c;
}

std::string phase_config_to_json(const PhaseConfig& c) {
  nlohmann::ordered_json j;
  j["phase"] = std::string(to_string(c.phase));
  j["lr_backbone"] = c.lr_backbone;
  j["lr_l1"] = c.lr_l1;
  j["lr_l2"] = c.lr_l2;
  j["lr_l3"] = c.lr_l3;
  j["lr_context_proj"] = c.lr_context_proj;
  j["lr_fusion"] = c.lr_fusion;
  j["lr_head"] = c.lr_head;
  j["weight_decay"] = c.weight_decay;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["patience"] = c.patience;
  j["val_fraction"] = c.val_fraction;
  j["seed"] = c.seed;
  j["task"] = c.task;
  return j.dump();
}

PhaseConfig phase_config_from_json(const std::string& text, PhaseConfig c) {
  try {
    const auto j = nlohmann::json::parse(text);
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    if (j.contains("phase")) {
      const auto p = j.at("phase").get<std::string>();
      if (p == "pretrain") c.phase = Phase::Pretrain;
      else if (p == "finetune") c.phase = Phase::Finetune;
      else if (p == "continual") c.phase = Phase::Continual;
      else fail(ErrorKind::Config, "unknown phase " + p);
    }
    get("lr_backbone", c.lr_backbone);
    get("lr_l1", c.lr_l1);
    get("lr_l2", c.lr_l2);
    get("lr_l3", c.lr_l3);
    get("lr_context_proj", c.lr_context_proj);
    get("lr_fusion", c.lr_fusion);
    get("lr_head", c.lr_head);
    get("weight_decay", c.weight_decay);
    get("epochs", c.epochs);
    get("batch_size", c.batch_size);
    get("patience", c.patience);
    get("val_fraction", c.val_fraction);
    get("seed", c.seed);
    get("task", c.task);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("phase config JSON: ") + e.what());
  }
  c.validate();
  return c;
}

std::string TrainReport::to_json(bool include_wall_time) const {
  nlohmann::ordered_json j;
  j["phase"] = std::string(train::to_string(phase));
  j["selection_metric"] = selection_metric;
  j["selected_epoch"] = selected_epoch;
  j["early_stopped"] = early_stopped;
  j["n_train"] = n_train;
  j["n_val"] = n_val;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& e : epochs) {
    nlohmann::ordered_json r;
    r["epoch"] = e.epoch;
    r["train_loss"] = e.train_loss;
    r["val_loss"] = e.val_loss;
    r["val_auc"] = e.val_auc ? nlohmann::ordered_json(*e.val_auc) : nlohmann::ordered_json(nullptr);
    rows.push_back(r);
  }
  j["epochs"] = rows;
  if (include_wall_time) j["wall_time_s"] = wall_time_s;
  return j.dump(2);
}

std::vector<double> class_weights(const std::vector<double>& labels) {
  double pos = 0;
  for (double y : labels) pos += y >= 0.5 ? 1 : 0;
  const double n = static_cast<double>(labels.size());
  const double neg = n - pos;
  std::vector<double> w(labels.size(), 1.0);
  if (pos == 0 || neg == 0) return w;
  const double w_pos = n / (2 * pos), w_neg = n / (2 * neg);
  for (std::size_t i = 0; i < labels.size(); ++i) w[i] = labels[i] >= 0.5 ? w_pos : w_neg;
  return w;
}

Tensor loss(const Tensor& predictions, const std::vector<double>& targets, TaskKind kind,
            const std::vector<double>& weights) {
  require(predictions.rows() == targets.size() && predictions.cols() == 1, ErrorKind::Shape,
          "loss: predictions " + predictions.shape_string() + " vs " + std::to_string(targets.size()) + " targets");
  require(!targets.empty(), ErrorKind::EmptyBatch, "loss on an empty batch");
  if (kind == TaskKind::Regression) return tensor::mse(predictions, targets);
  if (weights.empty()) return tensor::bce_with_logits(predictions, targets, std::vector<double>(targets.size(), 1.0));
  require(weights.size() == targets.size(), ErrorKind::Shape, "loss: one weight per target is required");
  return tensor::bce_with_logits(predictions, targets, weights);
}

namespace {

constexpr std::size_t kPredictChunk = 128;

std::vector<const mol::MolGraph*> pointers(const TaskData& d, std::span<const std::size_t> rows) {
  std::vector<const mol::MolGraph*> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) out.push_back(&d.mols[i]);
  return out;
}

// Runs body(chunk_begin, chunk_end) over [0, n) in parallel chunks, rethrowing the first failure.
template <typename Body>
void parallel_chunks(std::size_t n, Body body) {
  const auto n_chunks = static_cast<std::int64_t>((n + kPredictChunk - 1) / kPredictChunk);
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    try {
      const std::size_t begin = static_cast<std::size_t>(c) * kPredictChunk;
      body(begin, std::min(n, begin + kPredictChunk));
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

/// n × 2d molecule embeddings computed without recording.
std::vector<double> embed_all(const NestModel& model, const TaskData& d) {
  const std::size_t D = model.config().mol_dim();
  std::vector<double> out(d.size() * D);
  parallel_chunks(d.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> rows(end - begin);
    std::iota(rows.begin(), rows.end(), begin);
    const auto ptrs = pointers(d, rows);
    const Tensor h = model.encode(model::make_batch(ptrs));
    std::copy(h.data().begin(), h.data().end(), out.begin() + static_cast<std::ptrdiff_t>(begin * D));
  });
  return out;
}

Tensor gather_embeddings(const std::vector<double>& cache, std::size_t D, std::span<const std::size_t> rows) {
  std::vector<double> v;
  v.reserve(rows.size() * D);
  for (std::size_t i : rows) v.insert(v.end(), cache.begin() + static_cast<std::ptrdiff_t>(i * D),
                                      cache.begin() + static_cast<std::ptrdiff_t>((i + 1) * D));
  return Tensor::from(rows.size(), D, std::move(v));
}

std::vector<double> predict_rows(const NestModel& model, const TaskData& d, std::size_t task,
                                 const std::vector<double>* cache) {
  std::vector<double> out(d.size());
  const std::size_t D = model.config().mol_dim();
  parallel_chunks(d.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> rows(end - begin);
    std::iota(rows.begin(), rows.end(), begin);
    const std::span<const ContextTuple> ctx(d.contexts.data() + begin, end - begin);
    const Tensor y = cache != nullptr
                         ? model.forward_embedded(gather_embeddings(*cache, D, rows), ctx, task)
                         : model.forward(model::make_batch(pointers(d, rows)), ctx, task);
    std::copy(y.data().begin(), y.data().end(), out.begin() + static_cast<std::ptrdiff_t>(begin));
  });
  return out;
}

tensor::AdamW make_optimizer(const NestModel& model, const PhaseConfig& c) {
  std::vector<tensor::ParamGroup> groups;
  for (Group g : {Group::Backbone, Group::ContextL1, Group::ContextL2, Group::ContextL3, Group::ContextProj,
                  Group::Fusion, Group::Head}) {
    auto params = model.group_params(g);
    if (params.empty()) continue;
    groups.push_back({std::string(model::to_string(g)), std::move(params), c.lr_for(g), c.weight_decay});
  }
  return tensor::AdamW(std::move(groups));
}

/// Stratified (classification) or plain random hold-out of round(fraction·n_class) rows per class.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout(const TaskData& d, TaskKind kind,
                                                                      double fraction, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> strata(kind == TaskKind::Classification ? 2 : 1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    strata[kind == TaskKind::Classification && d.targets[i] >= 0.5 ? 1 : 0].push_back(i);
  }
  std::vector<std::size_t> train, val;
  for (std::size_t s = 0; s < strata.size(); ++s) {
    Rng rng(derive_seed(seed, "val-split", s));
    rng.shuffle(std::span<std::size_t>(strata[s]));
    const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(strata[s].size())));
    val.insert(val.end(), strata[s].begin(), strata[s].begin() + static_cast<std::ptrdiff_t>(n_val));
    train.insert(train.end(), strata[s].begin() + static_cast<std::ptrdiff_t>(n_val), strata[s].end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {train, val};
}

struct Trainer {
  NestModel& model;
  const TaskData& data;
  const PhaseConfig& config;
  std::size_t task;
  TaskKind kind;
  std::vector<double> weights;   // per-row class weights over the training rows
  std::vector<double> cache;     // molecule embeddings when the backbone is frozen
  bool cached = false;
  tensor::AdamW opt;
  Rng dropout_rng;

  Trainer(NestModel& m, const TaskData& d, const PhaseConfig& c)
      : model(m),
        data(d),
        config(c),
        task(m.task_index(c.task)),
        kind(m.config().tasks[task].kind),
        opt(make_optimizer(m, c)),
        dropout_rng(derive_seed(c.seed, "dropout")) {
    cached = c.lr_backbone == 0.0;
    if (cached) cache = embed_all(model, data);
  }

  Tensor forward_rows(std::span<const std::size_t> rows, Mode mode) {
    std::vector<ContextTuple> ctx;
    ctx.reserve(rows.size());
    for (std::size_t i : rows) ctx.push_back(data.contexts[i]);
    if (cached) {
      return model.forward_embedded(gather_embeddings(cache, model.config().mol_dim(), rows), ctx, task, mode,
                                    &dropout_rng);
    }
    return model.forward(model::make_batch(pointers(data, rows)), ctx, task, mode, &dropout_rng);
  }

  /// One pass over `rows` in a seed-derived order; returns the mean training loss.
  double epoch(const std::vector<std::size_t>& rows, const std::vector<double>& row_weights, int index) {
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, "epoch-order", static_cast<std::uint64_t>(index)));
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<std::size_t> batch;
      std::vector<double> y, w;
      for (std::size_t k = start; k < end; ++k) {
        batch.push_back(rows[order[k]]);
        y.push_back(data.targets[rows[order[k]]]);
        w.push_back(row_weights.empty() ? 1.0 : row_weights[order[k]]);
      }
      tensor::Tape tape;
      const Tensor l = loss(forward_rows(batch, Mode::Train), y, kind, w);
      const double value = l.item();
      require(std::isfinite(value), ErrorKind::NonFiniteLoss,
              "non-finite loss " + std::to_string(value) + " at epoch " + std::to_string(index) + ", batch starting " +
                  std::to_string(start) + " (" + std::string(to_string(config.phase)) + ")");
      tape.backward(l);
      opt.step();
      opt.zero_grad();
      total += value * static_cast<double>(end - start);
    }
    return rows.empty() ? 0.0 : total / static_cast<double>(rows.size());
  }

  std::pair<double, std::optional<double>> evaluate(const std::vector<std::size_t>& rows,
                                                    const std::vector<double>& row_weights) {
    if (rows.empty()) return {0.0, std::nullopt};
    const TaskData sub = data.subset(rows);
    std::vector<double> sub_cache;
    if (cached) {
      const std::size_t D = model.config().mol_dim();
      const Tensor g = gather_embeddings(cache, D, rows);
      sub_cache.assign(g.data().begin(), g.data().end());
    }
    const auto preds = predict_rows(model, sub, task, cached ? &sub_cache : nullptr);
    const Tensor p = Tensor::from(preds.size(), 1, preds);
    const double l = loss(p, sub.targets, kind, row_weights).item();
    std::optional<double> auc;
    if (kind == TaskKind::Classification) {
      const auto labels = sub.labels();
      const bool both = std::count(labels.begin(), labels.end(), 1) > 0 && std::count(labels.begin(), labels.end(), 0) > 0;
      if (both) auc = eval::roc_auc(preds, labels);
    }
    return {l, auc};
  }
};

std::vector<std::vector<double>> snapshot(const NestModel& m) {
  std::vector<std::vector<double>> out;
  for (const auto& p : m.params()) out.emplace_back(p.value.data().begin(), p.value.data().end());
  return out;
}

void restore(NestModel& m, const std::vector<std::vector<double>>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    Tensor t = m.params()[i].value;
    std::copy(values[i].begin(), values[i].end(), t.mutable_data().begin());
  }
}

std::vector<double> weights_for(const TaskData& d, const std::vector<std::size_t>& rows, TaskKind kind,
                                const std::vector<double>& reference_labels) {
  if (kind != TaskKind::Classification) return {};
  const auto ref = class_weights(reference_labels);
  double w_pos = 1, w_neg = 1;
  for (std::size_t i = 0; i < reference_labels.size(); ++i) (reference_labels[i] >= 0.5 ? w_pos : w_neg) = ref[i];
  std::vector<double> w;
  w.reserve(rows.size());
  for (std::size_t i : rows) w.push_back(d.targets[i] >= 0.5 ? w_pos : w_neg);
  return w;
}

}  // namespace

TrainReport fit(NestModel& model, const TaskData& input, const PhaseConfig& config) {
  config.validate();
  require(input.size() > 0, ErrorKind::EmptyDataset, "cannot train on an empty dataset");
  const auto start_time = std::chrono::steady_clock::now();
  const TaskData data = config.phase == Phase::Pretrain ? with_generic_context(input) : input;

  Trainer tr(model, data, config);
  auto [train_rows, val_rows] = holdout(data, tr.kind, config.val_fraction, config.seed);
  if (train_rows.empty()) std::swap(train_rows, val_rows);
  std::vector<double> train_labels;
  for (std::size_t i : train_rows) train_labels.push_back(data.targets[i]);
  const auto train_w = weights_for(data, train_rows, tr.kind, train_labels);
  const auto val_w = weights_for(data, val_rows, tr.kind, train_labels);

  TrainReport report;
  report.phase = config.phase;
  report.n_train = train_rows.size();
  report.n_val = val_rows.size();

  // Selection: validation AUC when finetuning a classifier with a two-class validation set,
  // otherwise validation loss (training loss when there is no validation split).
  const bool use_val = !val_rows.empty();
  auto measure = [&](int epoch, double train_loss) {
    EpochRecord r;
    r.epoch = epoch;
    r.train_loss = train_loss;
    std::tie(r.val_loss, r.val_auc) = use_val ? tr.evaluate(val_rows, val_w) : tr.evaluate(train_rows, train_w);
    return r;
  };
  EpochRecord initial = measure(0, tr.evaluate(train_rows, train_w).first);
  const bool by_auc = config.phase == Phase::Finetune && tr.kind == TaskKind::Classification && initial.val_auc;
  report.selection_metric = by_auc ? "val_auc" : (use_val ? "val_loss" : "train_loss");
  auto score = [&](const EpochRecord& r) { return by_auc ? *r.val_auc : -r.val_loss; };

  report.epochs.push_back(initial);
  double best = score(initial);
  auto best_params = snapshot(model);
  int since_best = 0;
  for (int e = 1; e <= config.epochs; ++e) {
    const double train_loss = tr.epoch(train_rows, train_w, e);
    const EpochRecord r = measure(e, train_loss);
    report.epochs.push_back(r);
    if (score(r) > best) {
      best = score(r);
      best_params = snapshot(model);
      report.selected_epoch = e;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      report.early_stopped = true;
      break;
    }
  }
  restore(model, best_params);
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
  return report;
}

std::vector<NestModel> continual_update(NestModel& model, const std::vector<TaskData>& rounds,
                                        const PhaseConfig& config) {
  config.validate();
  std::vector<NestModel> out;
  const std::size_t task = model.task_index(config.task);
  tensor::AdamW opt = make_optimizer(model, config);
  for (std::size_t r = 0; r < rounds.size(); ++r) {
    require(rounds[r].size() > 0, ErrorKind::EmptyDataset, "continual round " + std::to_string(r) + " is empty");
    PhaseConfig rc = config;
    rc.seed = derive_seed(config.seed, "continual-round", r);
    Trainer tr(model, rounds[r], rc);
    tr.opt = opt;
    std::vector<std::size_t> rows(rounds[r].size());
    std::iota(rows.begin(), rows.end(), 0);
    const auto w = weights_for(rounds[r], rows, model.config().tasks[task].kind, rounds[r].targets);
    for (int e = 1; e <= config.epochs; ++e) tr.epoch(rows, w, e);
    opt = tr.opt;
    out.push_back(model.clone());
  }
  return out;
}

std::vector<double> predict(const NestModel& model, const TaskData& data, const std::string& task) {
  return predict_rows(model, data, model.task_index(task), nullptr);
}

FewShotResult few_shot_adapt_l1(const NestModel& base, const TaskData& support, const TaskData& query,
                                const FewShotConfig& c) {
  require(c.shots >= 1, ErrorKind::Parameter, "shots must be positive");
  require(c.steps >= 0 && c.lr >= 0, ErrorKind::Parameter, "steps and lr must be non-negative");
  require(support.size() >= static_cast<std::size_t>(c.shots), ErrorKind::InsufficientSupport,
          "support has " + std::to_string(support.size()) + " rows, fewer than " + std::to_string(c.shots) + " shots");
  NestModel model = base.clone();
  const std::size_t task = model.task_index(c.task);
  const auto& cfg = model.config();
  const int program = c.fresh_program < 0 ? static_cast<int>(cfg.n_programs) - 1 : c.fresh_program;
  require(program >= 1 && static_cast<std::size_t>(program) < cfg.n_programs, ErrorKind::Parameter,
          "fresh L1 row must be a non-generic row of the table");

  Tensor table = model.param("context.l1");
  const std::size_t dim = cfg.l1_dim;
  const auto row_begin = static_cast<std::size_t>(program) * dim;
  std::fill_n(table.mutable_data().begin() + static_cast<std::ptrdiff_t>(row_begin), dim, 0.0);

  std::vector<std::size_t> pick(support.size());
  std::iota(pick.begin(), pick.end(), 0);
  Rng rng(derive_seed(c.seed, "few-shot-support"));
  rng.shuffle(std::span<std::size_t>(pick));
  pick.resize(static_cast<std::size_t>(c.shots));
  std::sort(pick.begin(), pick.end());
  TaskData shots = support.subset(pick);
  for (auto& ctx : shots.contexts) ctx.program = program;

  auto score_query = [&](int prog) {
    TaskData q = query;
    for (auto& ctx : q.contexts) ctx.program = prog;
    return eval::roc_auc(predict_rows(model, q, task, nullptr), q.labels());
  };
  FewShotResult out;
  out.program = program;
  out.generic_auc = score_query(0);
  out.zero_shot_auc = score_query(program);

  // Only the fresh row moves: full-batch Adam on the support loss with every other parameter frozen.
  const auto emb = embed_all(model, shots);
  std::vector<std::size_t> all(shots.size());
  std::iota(all.begin(), all.end(), 0);
  const Tensor h = gather_embeddings(emb, cfg.mol_dim(), all);
  const auto w = class_weights(shots.targets);
  std::vector<double> m1(dim, 0.0), m2(dim, 0.0);
  const tensor::AdamConfig adam;
  for (int step = 1; step <= c.steps; ++step) {
    for (const auto& p : model.params()) {
      Tensor t = p.value;
      t.zero_grad();
    }
    tensor::Tape tape;
    const Tensor l = loss(model.forward_embedded(h, shots.contexts, task), shots.targets,
                          cfg.tasks[task].kind, w);
    require(std::isfinite(l.item()), ErrorKind::NonFiniteLoss, "few-shot loss is not finite");
    tape.backward(l);
    const auto grad = table.grad();
    auto values = table.mutable_data();
    const double bc1 = 1 - std::pow(adam.beta1, step), bc2 = 1 - std::pow(adam.beta2, step);
    for (std::size_t k = 0; k < dim; ++k) {
      const double g = grad[row_begin + k];
      m1[k] = adam.beta1 * m1[k] + (1 - adam.beta1) * g;
      m2[k] = adam.beta2 * m2[k] + (1 - adam.beta2) * g * g;
      values[row_begin + k] -= c.lr * (m1[k] / bc1) / (std::sqrt(m2[k] / bc2) + adam.eps);
    }
  }
  out.adapted_row.assign(table.data().begin() + static_cast<std::ptrdiff_t>(row_begin),
                         table.data().begin() + static_cast<std::ptrdiff_t>(row_begin + dim));
  out.adapted_auc = c.steps == 0 ? out.zero_shot_auc : score_query(program);
  out.delta = out.adapted_auc - out.zero_shot_auc;
  return out;
}

}  // namespace nestdrug::train
