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

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "nestdrug/errors.hpp"

namespace nestdrug::protocol {
namespace {

Dataset synth(int n_targets, int n_per_target, double shift, std::uint64_t seed) {
  SynthConfig sc;
  sc.n_targets = n_targets;
  sc.n_per_target = n_per_target;
  sc.shift_strength = shift;
  sc.seed = seed;
  return synth_structured_shift(sc).dataset;
}

ProtocolConfig quick(std::uint64_t seed = 1) {
  ProtocolConfig c = desk_protocol_config(seed);
  c.model.hidden = 32;
  c.model.head_hidden = {32, 16};
  c.finetune.epochs = 12;
  return c;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Internal;
}

TEST(Protocol, PerTargetAucByHand) {
  // Target 1: perfect ranking. Target 2: positives 0.8 and 0.3 against negatives 0.2 and 0.7,
  // three of four pairs ordered. Target 3: one class, skipped.
  const std::vector<double> s = {0.9, 0.1, 0.8, 0.2, 0.3, 0.7, 0.5, 0.6};
  const std::vector<int> y = {1, 0, 1, 0, 1, 0, 1, 1};
  const std::vector<int> t = {1, 1, 2, 2, 2, 2, 3, 3};
  const auto a = per_target_auc(s, y, t);
  ASSERT_EQ(a.per_target.size(), 2u);
  EXPECT_DOUBLE_EQ(a.per_target.at(1), 1.0);
  EXPECT_DOUBLE_EQ(a.per_target.at(2), 0.75);
  EXPECT_DOUBLE_EQ(a.mean, 0.875);
  EXPECT_EQ(a.n_test.at(2), 4u);
  EXPECT_EQ(kind_of([] { per_target_auc(std::vector<double>{0.1}, std::vector<int>{1}, std::vector<int>{1}); }),
            ErrorKind::OneClassOnly);
  EXPECT_EQ(kind_of([] { per_target_auc(std::vector<double>{0.1}, std::vector<int>{1, 0}, std::vector<int>{1}); }),
            ErrorKind::Shape);
}

TEST(Protocol, LevelMasks) {
  train::TaskData d;
  d.contexts = {{3, 2, 5}, {1, 1, 1}};
  const auto o = only_level(d, Level::L2);
  EXPECT_EQ(o.contexts[0], (model::ContextTuple{0, 2, 0}));
  const auto w = without_level(d, Level::L3);
  EXPECT_EQ(w.contexts[0], (model::ContextTuple{3, 2, 0}));
  EXPECT_EQ(without_level(only_level(d, Level::L1), Level::L1).contexts[1], (model::ContextTuple{0, 0, 0}));
  EXPECT_EQ(parse_level("L3"), Level::L3);
  EXPECT_EQ(to_string(parse_level("l2")), "l2");
  EXPECT_EQ(kind_of([] { parse_level("l4"); }), ErrorKind::Config);
}

TEST(Protocol, HoldoutIsStratifiedPartition) {
  std::vector<int> y(103);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 4 == 0 ? 1 : 0;
  const auto [tr, te] = holdout_rows(y, 5, 0, 7);
  std::set<std::size_t> all(tr.begin(), tr.end());
  for (std::size_t i : te) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), y.size());
  const auto pos_te = std::count_if(te.begin(), te.end(), [&](std::size_t i) { return y[i] == 1; });
  EXPECT_NEAR(static_cast<double>(pos_te), 26.0 / 5.0, 1.0);
  EXPECT_EQ(holdout_rows(y, 5, 0, 7).second, te);
  EXPECT_NE(holdout_rows(y, 5, 0, 8).second, te);
}

TEST(Protocol, ConfigJsonRoundTrip) {
  const ProtocolConfig c = desk_protocol_config(9);
  const ProtocolConfig r = protocol_config_from_json(protocol_config_to_json(c), ProtocolConfig{});
  EXPECT_EQ(protocol_config_to_json(r), protocol_config_to_json(c));
  EXPECT_EQ(r.model.hidden, 64u);
  EXPECT_EQ(r.finetune.lr_backbone, 0.0);
  EXPECT_EQ(r.pretrain.epochs, 3);
  const ProtocolConfig partial = protocol_config_from_json(R"({"folds": 4, "test_fold": 3})", c);
  EXPECT_EQ(partial.folds, 4);
  EXPECT_EQ(partial.model.hidden, 64u);
  EXPECT_EQ(kind_of([&] { protocol_config_from_json(R"({"folds": 1})", c); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { protocol_config_from_json("[1]", c); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { protocol_config_from_json(R"({"folds": "x"})", c); }), ErrorKind::Config);
}

TEST(Protocol, SeedComparisonMatchesPairedTest) {
  const std::vector<double> a = {0.9, 0.85, 0.95, 0.8}, b = {0.7, 0.75, 0.72, 0.71};
  const auto c = compare_over_seeds(a, b, 2);
  EXPECT_NEAR(c.mean_a, 0.875, 1e-12);
  EXPECT_NEAR(c.mean_b, 0.72, 1e-12);
  EXPECT_NEAR(c.mean_delta, 0.155, 1e-12);
  const std::vector<double> d = {0.2, 0.1, 0.23, 0.09};
  const auto t = eval::paired_t_test(d, 2);
  EXPECT_NEAR(c.test.t, t.t, 1e-12);
  EXPECT_NEAR(c.test.p_bonferroni, t.p_bonferroni, 1e-12);
  EXPECT_EQ(kind_of([&] { compare_over_seeds(a, std::vector<double>{1.0}, 1); }), ErrorKind::Shape);
}

TEST(Protocol, CapacityIsChecked) {
  const Dataset d = synth(2, 40, 0.5, 1);
  ProtocolConfig c = quick();
  c.model.n_programs = 2;  // ids 1 and 2 need three rows
  EXPECT_EQ(kind_of([&] { prepare(d, c); }), ErrorKind::IdOutOfRange);
}

TEST(Protocol, AblationSeparatesOpposedTargets) {
  // Two targets with opposite rules: the generic context cannot rank both.
  const Dataset d = synth(2, 200, 1.0, 3);
  ProtocolConfig c = quick(3);
  c.finetune.epochs = 30;
  const PreparedRun run = prepare(d, c);
  EXPECT_EQ(run.train.size() + run.test.size(), d.size());
  EXPECT_EQ(run.test_targets.size(), run.test.size());
  const auto a = context_ablation(run, Level::L1, c);
  ASSERT_EQ(a.rows.size(), 2u);
  double sum_c = 0, sum_g = 0;
  for (const auto& r : a.rows) {
    EXPECT_DOUBLE_EQ(r.delta, r.auc_correct - r.auc_generic);
    sum_c += r.auc_correct;
    sum_g += r.auc_generic;
  }
  EXPECT_NEAR(a.mean_correct, sum_c / 2, 1e-12);
  EXPECT_NEAR(a.mean_generic, sum_g / 2, 1e-12);
  EXPECT_GT(a.mean_correct, 0.8);
  EXPECT_GT(a.mean_delta, 0.1);

  // The FiLM arm of the sweep is the same model as the ablation's.
  const std::vector<FusionVariant> variants = {FusionVariant::FiLM, FusionVariant::None};
  const auto sweep = fusion_sweep(run, variants, c);
  ASSERT_EQ(sweep.size(), 2u);
  EXPECT_DOUBLE_EQ(sweep[0].aucs.mean, a.mean_correct);
  EXPECT_EQ(sweep[1].variant, FusionVariant::None);
  // Without context the two opposed rules cancel.
  EXPECT_LT(sweep[1].aucs.mean, a.mean_correct);
}

TEST(Protocol, ScarcityKeepsRequestedRows) {
  const Dataset d = synth(2, 150, 0.0, 4);
  ProtocolConfig c = quick(4);
  c.finetune.epochs = 4;
  rf::ForestConfig f;
  f.n_trees = 20;
  const auto r = scarcity_transfer(d, 2, 12, c, f);
  EXPECT_EQ(r.target, 2);
  EXPECT_EQ(r.n_train_rows, 12u);
  EXPECT_NEAR(static_cast<double>(r.n_test), 30.0, 2.0);
  EXPECT_DOUBLE_EQ(r.delta, r.multitask_auc - r.rf_auc);
  EXPECT_GT(r.multitask_auc, 0.5);
  EXPECT_EQ(kind_of([&] { scarcity_transfer(d, 2, 500, c, f); }), ErrorKind::InsufficientData);
  EXPECT_EQ(kind_of([&] { scarcity_transfer(d, 2, 1, c, f); }), ErrorKind::Config);
}

TEST(Protocol, FewShotRowsPerShotCount) {
  const Dataset d = synth(3, 120, 0.5, 5);
  ProtocolConfig c = quick(5);
  c.finetune.epochs = 3;
  train::FewShotConfig adapt;
  adapt.steps = 0;
  const std::vector<int> shots = {4, 8};
  const auto rows = few_shot_protocol(d, 3, shots, c, adapt);
  ASSERT_EQ(rows.size(), 2u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].target, 3);
    EXPECT_EQ(rows[i].shots, shots[i]);
    EXPECT_DOUBLE_EQ(rows[i].adapted_auc, rows[i].zero_shot_auc);
    EXPECT_DOUBLE_EQ(rows[i].delta, 0.0);
  }
  // The zeroed row scores identically regardless of the support size.
  EXPECT_DOUBLE_EQ(rows[0].zero_shot_auc, rows[1].zero_shot_auc);
  EXPECT_EQ(kind_of([&] { few_shot_protocol(d, 0, shots, c, adapt); }), ErrorKind::Config);
}

}  // namespace
}  // namespace nestdrug::protocol
