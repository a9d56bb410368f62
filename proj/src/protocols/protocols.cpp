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

#include "nestdrug/protocols.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "json.hpp"
#include "nestdrug/errors.hpp"
#include "nestdrug/rng.hpp"

namespace nestdrug::protocol {

using nlohmann::json;

void ProtocolConfig::validate() const {
  model.validate();
  pretrain.validate();
  finetune.validate();
  require(folds >= 2, ErrorKind::Config, "folds must be at least 2");
  require(test_fold >= 0 && test_fold < folds, ErrorKind::Config, "test_fold out of range");
}

ProtocolConfig desk_protocol_config(std::uint64_t seed) {
  ProtocolConfig c;
  c.seed = seed;
  auto& m = c.model;
  m.hidden = 64;
  m.mpnn_layers = 1;
  m.l1_dim = 16;
  m.l2_dim = 8;
  m.l3_dim = 8;
  m.n_programs = 8;
  m.n_assays = 4;
  m.n_rounds = 8;
  m.film_hidden = 32;
  m.head_hidden = {64, 32};
  c.pretrain = train::pretrain_defaults(3e-4);
  c.pretrain.epochs = 3;
  c.pretrain.seed = seed;
  c.finetune = train::finetune_defaults();
  c.finetune.lr_backbone = 0.0;
  c.finetune.epochs = 30;
  c.finetune.seed = seed;
  return c;
}

std::string protocol_config_to_json(const ProtocolConfig& c) {
  json j;
  j["model"] = json::parse(model::config_to_json(c.model));
  j["pretrain"] = json::parse(train::phase_config_to_json(c.pretrain));
  j["finetune"] = json::parse(train::phase_config_to_json(c.finetune));
  j["folds"] = c.folds;
  j["test_fold"] = c.test_fold;
  j["seed"] = c.seed;
  return j.dump(2);
}

ProtocolConfig protocol_config_from_json(const std::string& text, ProtocolConfig base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("protocol config: ") + e.what());
  }
  require(j.is_object(), ErrorKind::Config, "protocol config must be a JSON object");
  try {
    if (j.contains("model")) base.model = model::config_from_json(j["model"].dump());
    if (j.contains("pretrain")) base.pretrain = train::phase_config_from_json(j["pretrain"].dump(), base.pretrain);
    if (j.contains("finetune")) base.finetune = train::phase_config_from_json(j["finetune"].dump(), base.finetune);
    if (j.contains("folds")) base.folds = j["folds"].get<int>();
    if (j.contains("test_fold")) base.test_fold = j["test_fold"].get<int>();
    if (j.contains("seed")) base.seed = j["seed"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("protocol config: ") + e.what());
  }
  base.validate();
  return base;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_rows(std::span<const int> labels, int folds,
                                                                           int test_fold, std::uint64_t seed) {
  const auto plan = eval::stratified_kfold(labels, folds, derive_seed(seed, "holdout"));
  return {plan.train_rows(test_fold), plan.test_rows(test_fold)};
}

namespace {

void check_capacity(const Dataset& d, const model::ModelConfig& m) {
  for (const auto& r : d.records) {
    require(r.target_id >= 0 && static_cast<std::size_t>(r.target_id) < m.n_programs, ErrorKind::IdOutOfRange,
            "target id " + std::to_string(r.target_id) + " exceeds the program table");
    require(r.assay_id >= 0 && static_cast<std::size_t>(r.assay_id) < m.n_assays, ErrorKind::IdOutOfRange,
            "assay id " + std::to_string(r.assay_id) + " exceeds the assay table");
    require(r.round_id >= 0 && static_cast<std::size_t>(r.round_id) < m.n_rounds, ErrorKind::IdOutOfRange,
            "round id " + std::to_string(r.round_id) + " exceeds the round table");
  }
}

std::vector<int> targets_of(const Dataset& d, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) out.push_back(d.records[i].target_id);
  return out;
}

train::PhaseConfig seeded(train::PhaseConfig c, std::uint64_t seed) {
  c.seed = seed;
  return c;
}

double auc_over(std::span<const double> scores, std::span<const int> labels) {
  return eval::roc_auc(scores, labels);
}

}  // namespace

PreparedRun prepare(const Dataset& dataset, const ProtocolConfig& config) {
  config.validate();
  require(!dataset.records.empty(), ErrorKind::EmptyDataset, "dataset has no records");
  check_capacity(dataset, config.model);
  const TaskData all = train::from_dataset(dataset);
  const auto [tr, te] = holdout_rows(all.labels(), config.folds, config.test_fold, config.seed);
  PreparedRun run{all.subset(tr), all.subset(te), targets_of(dataset, te), model::NestModel(config.model, config.seed),
                  {}};
  run.pretrain_report = train::fit(run.base, run.train, seeded(config.pretrain, config.seed));
  return run;
}

TargetAucs per_target_auc(std::span<const double> scores, std::span<const int> labels, std::span<const int> targets) {
  require(scores.size() == labels.size() && labels.size() == targets.size(), ErrorKind::Shape,
          "scores, labels and targets differ in length");
  std::map<int, std::pair<std::vector<double>, std::vector<int>>> groups;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto& g = groups[targets[i]];
    g.first.push_back(scores[i]);
    g.second.push_back(labels[i]);
  }
  TargetAucs out;
  for (const auto& [t, g] : groups) {
    const auto pos = std::count(g.second.begin(), g.second.end(), 1);
    if (pos == 0 || pos == static_cast<long>(g.second.size())) continue;
    out.per_target[t] = auc_over(g.first, g.second);
    out.n_test[t] = g.second.size();
  }
  require(!out.per_target.empty(), ErrorKind::OneClassOnly, "no target has both classes in the test rows");
  for (const auto& [t, a] : out.per_target) out.mean += a;
  out.mean /= static_cast<double>(out.per_target.size());
  return out;
}

Level parse_level(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (s == "l1") return Level::L1;
  if (s == "l2") return Level::L2;
  if (s == "l3") return Level::L3;
  fail(ErrorKind::Config, "unknown context level '" + std::string(name) + "' (expected l1, l2 or l3)");
}

std::string_view to_string(Level l) {
  switch (l) {
    case Level::L1: return "l1";
    case Level::L2: return "l2";
    case Level::L3: return "l3";
  }
  return "?";
}

TaskData only_level(TaskData d, Level level) {
  for (auto& c : d.contexts) {
    if (level != Level::L1) c.program = 0;
    if (level != Level::L2) c.assay = 0;
    if (level != Level::L3) c.round = 0;
  }
  return d;
}

TaskData without_level(TaskData d, Level level) {
  for (auto& c : d.contexts) {
    if (level == Level::L1) c.program = 0;
    if (level == Level::L2) c.assay = 0;
    if (level == Level::L3) c.round = 0;
  }
  return d;
}

model::NestModel finetune_variant(const PreparedRun& run, FusionVariant variant, Level level,
                                  const ProtocolConfig& config, train::TrainReport* report) {
  model::ModelConfig mc = run.base.config();
  mc.fusion = variant;
  model::NestModel m(mc, derive_seed(config.seed, "variant", static_cast<std::uint64_t>(variant)));
  m.load_matching(run.base);
  auto r = train::fit(m, only_level(run.train, level), seeded(config.finetune, config.seed));
  if (report != nullptr) *report = std::move(r);
  return m;
}

AblationResult ablation_from_model(const PreparedRun& run, const model::NestModel& m, Level level) {
  const TaskData correct = only_level(run.test, level);
  const TaskData generic = without_level(correct, level);
  const auto labels = run.test.labels();
  const auto pc = train::predict(m, correct);
  const auto pg = train::predict(m, generic);
  const TargetAucs ac = per_target_auc(pc, labels, run.test_targets);
  const TargetAucs ag = per_target_auc(pg, labels, run.test_targets);
  AblationResult out;
  out.level = level;
  for (const auto& [t, a] : ac.per_target) {
    const double g = ag.per_target.at(t);
    out.rows.push_back({t, ac.n_test.at(t), a, g, a - g});
  }
  out.mean_correct = ac.mean;
  out.mean_generic = ag.mean;
  out.mean_delta = ac.mean - ag.mean;
  return out;
}

AblationResult context_ablation(const PreparedRun& run, Level level, const ProtocolConfig& config) {
  const auto m = finetune_variant(run, run.base.config().fusion, level, config);
  return ablation_from_model(run, m, level);
}

std::vector<VariantResult> fusion_sweep(const PreparedRun& run, std::span<const FusionVariant> variants,
                                        const ProtocolConfig& config) {
  std::vector<VariantResult> out;
  const auto labels = run.test.labels();
  const TaskData test = only_level(run.test, Level::L1);
  for (const auto v : variants) {
    train::TrainReport report;
    const auto m = finetune_variant(run, v, Level::L1, config, &report);
    out.push_back({v, per_target_auc(train::predict(m, test), labels, run.test_targets), report.selected_epoch});
  }
  return out;
}

SeedComparison compare_over_seeds(std::span<const double> a, std::span<const double> b, int m_comparisons) {
  require(a.size() == b.size() && !a.empty(), ErrorKind::Shape, "seed series must be non-empty and equal in length");
  SeedComparison out;
  std::vector<double> diffs(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    diffs[i] = a[i] - b[i];
    out.mean_a += a[i] / static_cast<double>(a.size());
    out.mean_b += b[i] / static_cast<double>(a.size());
  }
  out.mean_delta = out.mean_a - out.mean_b;
  out.test = diffs.size() >= 2 ? eval::paired_t_test(diffs, m_comparisons) : eval::TTestResult{};
  return out;
}

ScarcityResult scarcity_transfer(const Dataset& dataset, int target, std::size_t n_rows, const ProtocolConfig& config,
                                 const rf::ForestConfig& forest) {
  config.validate();
  check_capacity(dataset, config.model);
  require(n_rows >= 2, ErrorKind::Config, "scarce target needs at least two rows");
  const TaskData all = train::from_dataset(dataset);
  const auto labels = all.labels();
  const auto [tr, te] = holdout_rows(labels, config.folds, config.test_fold, config.seed);

  std::vector<std::size_t> keep_train, pool, test_rows;
  for (std::size_t i : tr) (dataset.records[i].target_id == target ? pool : keep_train).push_back(i);
  for (std::size_t i : te)
    if (dataset.records[i].target_id == target) test_rows.push_back(i);
  require(pool.size() >= n_rows, ErrorKind::InsufficientData,
          "target " + std::to_string(target) + " has " + std::to_string(pool.size()) + " training rows, " +
              std::to_string(n_rows) + " requested");

  // Shuffled pool; the first active and first inactive are kept, then the rest in shuffled order.
  Rng rng(derive_seed(config.seed, "scarce", static_cast<std::uint64_t>(target)));
  rng.shuffle(std::span<std::size_t>(pool));
  const auto first_pos = std::find_if(pool.begin(), pool.end(), [&](std::size_t i) { return labels[i] == 1; });
  const auto first_neg = std::find_if(pool.begin(), pool.end(), [&](std::size_t i) { return labels[i] == 0; });
  require(first_pos != pool.end() && first_neg != pool.end(), ErrorKind::OneClassOnly,
          "target " + std::to_string(target) + " has one class in its training rows");
  std::vector<std::size_t> kept = {*first_pos, *first_neg};
  for (std::size_t i : pool) {
    if (kept.size() >= n_rows) break;
    if (i != *first_pos && i != *first_neg) kept.push_back(i);
  }
  std::sort(kept.begin(), kept.end());
  std::vector<std::size_t> train_rows = keep_train;
  train_rows.insert(train_rows.end(), kept.begin(), kept.end());
  std::sort(train_rows.begin(), train_rows.end());

  const TaskData train = all.subset(train_rows), test = all.subset(test_rows);
  const auto test_labels = test.labels();
  model::NestModel m(config.model, config.seed);
  train::fit(m, train, seeded(config.pretrain, config.seed));
  train::fit(m, train, seeded(config.finetune, config.seed));

  ScarcityResult out;
  out.target = target;
  out.n_train_rows = kept.size();
  out.n_test = test_rows.size();
  out.multitask_auc = auc_over(train::predict(m, test), test_labels);

  rf::RfExperimentConfig rc;
  rc.forest = forest;
  rc.min_train_actives = 1;
  out.rf_auc = *rf::rf_train_test(dataset, kept, test_rows, rc).metrics.roc_auc;
  out.delta = out.multitask_auc - out.rf_auc;
  return out;
}

std::vector<FewShotRow> few_shot_protocol(const Dataset& dataset, int target, std::span<const int> shots,
                                          const ProtocolConfig& config, const train::FewShotConfig& adapt) {
  config.validate();
  check_capacity(dataset, config.model);
  require(target >= 1, ErrorKind::Config, "few-shot target must be a non-generic id");
  const TaskData all = train::from_dataset(dataset);
  const auto [tr, te] = holdout_rows(all.labels(), config.folds, config.test_fold, config.seed);

  std::vector<std::size_t> train_rows, support_rows, query_rows;
  for (std::size_t i : tr) (dataset.records[i].target_id == target ? support_rows : train_rows).push_back(i);
  for (std::size_t i : te)
    if (dataset.records[i].target_id == target) query_rows.push_back(i);
  require(!train_rows.empty(), ErrorKind::EmptyDataset, "no training rows outside the held-out target");

  const TaskData train = only_level(all.subset(train_rows), Level::L1);
  model::NestModel m(config.model, config.seed);
  train::fit(m, train, seeded(config.pretrain, config.seed));
  train::fit(m, train, seeded(config.finetune, config.seed));

  const TaskData support = only_level(all.subset(support_rows), Level::L1);
  const TaskData query = only_level(all.subset(query_rows), Level::L1);
  std::vector<FewShotRow> out;
  for (const int k : shots) {
    train::FewShotConfig c = adapt;
    c.shots = k;
    c.fresh_program = target;
    c.seed = derive_seed(config.seed, "few-shot", static_cast<std::uint64_t>(k));
    const auto r = train::few_shot_adapt_l1(m, support, query, c);
    out.push_back({target, k, r.zero_shot_auc, r.adapted_auc, r.delta, r.generic_auc});
  }
  return out;
}

}  // namespace nestdrug::protocol
