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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nestdrug/datasets.hpp"
#include "nestdrug/model.hpp"

namespace nestdrug::train {

using model::ContextTuple;
using model::NestModel;
using model::TaskKind;

/// Parsed molecules with contexts and targets for one task.
struct TaskData {
  std::vector<mol::MolGraph> mols;
  std::vector<ContextTuple> contexts;
  std::vector<double> targets;  // 0/1 labels or regression values

  [[nodiscard]] std::size_t size() const { return mols.size(); }
  [[nodiscard]] TaskData subset(const std::vector<std::size_t>& rows) const;
  [[nodiscard]] std::vector<int> labels() const;
};

struct ContextLevels {
  bool l1 = true;
  bool l2 = true;
  bool l3 = true;
};

/// program = target_id, assay = assay_id, round = round_id; disabled levels map to the generic id 0.
/// Classification uses the record label, regression the per-target standardized pIC50.
TaskData from_dataset(const Dataset& d, TaskKind kind = TaskKind::Classification, ContextLevels levels = {});

/// Every context replaced by (0, 0, 0).
TaskData with_generic_context(TaskData d);

enum class Phase { Pretrain, Finetune, Continual };
std::string_view to_string(Phase p);

struct PhaseConfig {
  Phase phase = Phase::Finetune;
  double lr_backbone = 1e-5;
  double lr_l1 = 1e-3;
  double lr_l2 = 1e-3;
  double lr_l3 = 1e-3;
  double lr_context_proj = 1e-3;
  double lr_fusion = 1e-3;
  double lr_head = 1e-4;
  double weight_decay = 0.0;
  int epochs = 30;
  std::size_t batch_size = 32;
  int patience = 20;
  double val_fraction = 0.1;
  std::uint64_t seed = 1;
  std::string task = "activity";

  void validate() const;
  [[nodiscard]] double lr_for(model::Group g) const;
};

/// Single rate for every group, contexts forced to generic.
PhaseConfig pretrain_defaults(double lr = 3e-4);
/// Differential rates: backbone 1e-5, context and FiLM 1e-3, heads 1e-4.
PhaseConfig finetune_defaults();
/// Multi-timescale rates L3 1e-3 > L1 1e-4 > L0 1e-6; one pass per revealed round.
PhaseConfig continual_defaults();

std::string phase_config_to_json(const PhaseConfig& c);
PhaseConfig phase_config_from_json(const std::string& json, PhaseConfig base);

struct EpochRecord {
  int epoch = 0;  // 0 = before any update
  double train_loss = 0;
  double val_loss = 0;
  std::optional<double> val_auc;
};

struct TrainReport {
  Phase phase = Phase::Finetune;
  std::vector<EpochRecord> epochs;
  int selected_epoch = 0;
  bool early_stopped = false;
  std::string selection_metric;  // "val_auc" or "val_loss"
  double wall_time_s = 0;
  std::size_t n_train = 0;
  std::size_t n_val = 0;

  /// Deterministic JSON; wall time is included only when asked.
  [[nodiscard]] std::string to_json(bool include_wall_time = false) const;
};

/// Inverse class frequency weights normalized to mean 1 over the given labels.
std::vector<double> class_weights(const std::vector<double>& labels);

/// Classification: class-weighted BCE on logits; regression: MSE.
tensor::Tensor loss(const tensor::Tensor& predictions, const std::vector<double>& targets, TaskKind kind,
                    const std::vector<double>& weights = {});

/// Trains in place and leaves the parameters of the selected epoch in the model.
/// Pretrain forces the generic context and selects by validation loss; Finetune selects by
/// validation ROC-AUC (validation loss for regression or one-class validation sets).
/// When the backbone rate is 0 the molecule embeddings are computed once and reused.
TrainReport fit(NestModel& model, const TaskData& data, const PhaseConfig& config);

/// One pass over each revealed round in order; returns a snapshot of the model after every round.
std::vector<NestModel> continual_update(NestModel& model, const std::vector<TaskData>& rounds,
                                        const PhaseConfig& config);

/// Raw head outputs (logits or values) in eval mode, parallel over molecule chunks.
std::vector<double> predict(const NestModel& model, const TaskData& data, const std::string& task = "activity");

struct FewShotConfig {
  int shots = 10;
  int steps = 100;
  double lr = 1e-2;
  std::uint64_t seed = 1;
  int fresh_program = -1;  // L1 row to adapt; -1 = last row of the table
  std::string task = "activity";
};

struct FewShotResult {
  std::vector<double> adapted_row;
  double zero_shot_auc = 0;  // query scored with the fresh row at its zero initialization
  double adapted_auc = 0;
  double delta = 0;
  double generic_auc = 0;  // query scored with the generic row 0, for reference
  int program = 0;
};

/// Adapts one zero-initialized L1 row on `shots` support rows (full-batch Adam); everything else
/// stays frozen. The model passed in is not modified.
FewShotResult few_shot_adapt_l1(const NestModel& model, const TaskData& support, const TaskData& query,
                                const FewShotConfig& config);

}  // namespace nestdrug::train
