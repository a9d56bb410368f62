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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nestdrug/baselines.hpp"
#include "nestdrug/datasets.hpp"
#include "nestdrug/fingerprint.hpp"

namespace nestdrug::audit {

struct LeakageResult {
  double active_leakage_pct = 0;
  double decoy_leakage_pct = 0;
  std::vector<std::size_t> leaked_actives;  // indices into the eval actives
  std::vector<std::size_t> leaked_decoys;
};

/// Exact canonical-form overlap of the eval sets with the training set. An empty eval set
/// reports 0%; throws EmptySet when the training set or both eval sets are empty.
LeakageResult leakage_report(std::span<const std::string> train, std::span<const std::string> eval_actives,
                             std::span<const std::string> eval_decoys);

struct StructuralBias {
  double one_nn_auc = 0;
  double aa_sim = 0;  // mean NN similarity of test actives to train actives
  double da_sim = 0;  // mean NN similarity of decoys to train actives
  double gap = 0;
};

StructuralBias structural_bias_audit(std::span<const fp::Fingerprint> train_actives,
                                     std::span<const fp::Fingerprint> test_actives,
                                     std::span<const fp::Fingerprint> test_decoys);

struct CrossTargetMatrix {
  std::vector<int> targets;
  std::vector<std::vector<double>> auc;  // auc[i][j]: forest fit on targets[i], scored on targets[j]

  double off_diagonal_mean() const;
};

/// Per-target stratified hold-out as in per_target_rf_experiment; every forest is scored on
/// every target's hold-out rows.
CrossTargetMatrix cross_target_transfer_audit(const Dataset& dataset, std::span<const int> targets,
                                              const rf::RfExperimentConfig& config);

struct AuditConfig {
  int radius = fp::kDefaultRadius;
  int nbits = fp::kDefaultBits;
  bool strip_stereo = false;  // canonical forms for overlap are recomputed with this setting
  double leakage_threshold_pct = 25.0;
  bool cross_target = false;
  rf::RfExperimentConfig rf;
};

struct AuditRow {
  int target = 0;
  std::size_t n_train = 0;
  std::size_t n_train_actives = 0;
  std::size_t n_eval_actives = 0;
  std::size_t n_eval_decoys = 0;
  // Overlap with every training record of the target, and with its thresholded actives only.
  LeakageResult any_level;
  LeakageResult thresholded;
  std::optional<StructuralBias> bias;  // absent when the target has no train actives or no eval decoys
};

struct AuditReport {
  AuditConfig config;
  std::vector<AuditRow> rows;
  std::optional<CrossTargetMatrix> cross_target;

  double max_active_leakage_pct() const;
  bool exceeds_threshold() const { return max_active_leakage_pct() > config.leakage_threshold_pct; }
};

/// Eval records labelled 1 are actives, 0 decoys; rows are reported per target present in the eval set.
AuditReport run_audit(const Dataset& train, const Dataset& eval, const AuditConfig& config);

std::string audit_report_json(const AuditReport& r);
std::string audit_report_csv(const AuditReport& r);
std::string cross_target_csv(const CrossTargetMatrix& m);

}  // namespace nestdrug::audit
