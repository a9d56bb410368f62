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
#include <map>
#include <string>
#include <vector>

#include "nestdrug/baselines.hpp"
#include "nestdrug/datasets.hpp"
#include "nestdrug/evalkit.hpp"
#include "nestdrug/training.hpp"

namespace nestdrug::protocol {

using model::FusionVariant;
using train::TaskData;

struct ProtocolConfig {
  model::ModelConfig model;
  train::PhaseConfig pretrain = train::pretrain_defaults();
  train::PhaseConfig finetune = train::finetune_defaults();
  int folds = 5;  // stratified; fold `test_fold` is the hold-out
  int test_fold = 0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Small network and short schedules that run the synthetic protocols in seconds on one core:
/// width 64, one message-passing layer, 3 generic pretraining epochs at 3e-4, 30 finetuning
/// epochs at the finetune rates with the backbone held fixed.
ProtocolConfig desk_protocol_config(std::uint64_t seed = 1);

std::string protocol_config_to_json(const ProtocolConfig& c);
ProtocolConfig protocol_config_from_json(const std::string& json, ProtocolConfig base);

/// Stratified hold-out over the labels: (train rows, test rows).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_rows(std::span<const int> labels, int folds,
                                                                           int test_fold, std::uint64_t seed);

/// Hold-out split plus a generically pretrained model shared by every arm of one seed.
struct PreparedRun {
  TaskData train;
  TaskData test;
  std::vector<int> test_targets;  // target id of each test row
  model::NestModel base;
  train::TrainReport pretrain_report;
};

PreparedRun prepare(const Dataset& dataset, const ProtocolConfig& config);

/// Mean over targets of the per-target ROC-AUC; targets with one class in the test rows are skipped.
struct TargetAucs {
  std::map<int, double> per_target;
  std::map<int, std::size_t> n_test;
  double mean = 0;
};
TargetAucs per_target_auc(std::span<const double> scores, std::span<const int> labels, std::span<const int> targets);

/// Context levels: the level under study keeps its true id, the others are set to generic.
enum class Level { L1, L2, L3 };
Level parse_level(std::string_view name);
std::string_view to_string(Level l);
TaskData only_level(TaskData d, Level level);
TaskData without_level(TaskData d, Level level);

/// Finetunes `variant` from the prepared base with the level's true ids and returns the model.
model::NestModel finetune_variant(const PreparedRun& run, FusionVariant variant, Level level,
                                  const ProtocolConfig& config, train::TrainReport* report = nullptr);

struct AblationRow {
  int target = 0;
  std::size_t n_test = 0;
  double auc_correct = 0;
  double auc_generic = 0;
  double delta = 0;
};

struct AblationResult {
  Level level = Level::L1;
  std::vector<AblationRow> rows;
  double mean_correct = 0;
  double mean_generic = 0;
  double mean_delta = 0;
};

/// One model finetuned with the true ids of `level`, scored on the hold-out twice:
/// with the true ids and with that level replaced by the generic id 0.
AblationResult context_ablation(const PreparedRun& run, Level level, const ProtocolConfig& config);
AblationResult ablation_from_model(const PreparedRun& run, const model::NestModel& m, Level level);

struct VariantResult {
  FusionVariant variant = FusionVariant::FiLM;
  TargetAucs aucs;
  int selected_epoch = 0;
};

/// Each variant finetuned from the same pretrained base with true L1 ids.
std::vector<VariantResult> fusion_sweep(const PreparedRun& run, std::span<const FusionVariant> variants,
                                        const ProtocolConfig& config);

/// Across seeds: mean of per-seed mean AUCs and a paired t-test on the per-seed differences.
struct SeedComparison {
  double mean_a = 0;
  double mean_b = 0;
  double mean_delta = 0;
  eval::TTestResult test;
};
SeedComparison compare_over_seeds(std::span<const double> a, std::span<const double> b, int m_comparisons);

struct ScarcityResult {
  int target = 0;
  std::size_t n_train_rows = 0;
  std::size_t n_test = 0;
  double multitask_auc = 0;
  double rf_auc = 0;
  double delta = 0;
};

/// The target keeps `n_rows` of its training rows (at least one per class); the multi-task FiLM
/// model trains on every target, the forest on the kept rows only; both score the target's hold-out.
ScarcityResult scarcity_transfer(const Dataset& dataset, int target, std::size_t n_rows, const ProtocolConfig& config,
                                 const rf::ForestConfig& forest);

struct FewShotRow {
  int target = 0;
  int shots = 0;
  double zero_shot_auc = 0;
  double adapted_auc = 0;
  double delta = 0;
  double generic_auc = 0;
};

/// The target is held out of training; its training rows form the support pool and its
/// hold-out rows the query set. One fresh L1 row (the target's id) is adapted per shot count.
std::vector<FewShotRow> few_shot_protocol(const Dataset& dataset, int target, std::span<const int> shots,
                                          const ProtocolConfig& config, const train::FewShotConfig& adapt);

}  // namespace nestdrug::protocol
