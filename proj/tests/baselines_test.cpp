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

#include "nestdrug/baselines.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "nestdrug/errors.hpp"
#include "nestdrug/rng.hpp"

namespace nestdrug::rf {
namespace {

BitMatrix random_bits(std::size_t rows, std::size_t features, Rng& rng, double p = 0.3) {
  BitMatrix x(rows, features);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t f = 0; f < features; ++f) {
      if (rng.bernoulli(p)) x.set(r, f);
    }
  }
  return x;
}

ForestConfig small_forest(std::uint64_t seed, int trees = 30) {
  ForestConfig c;
  c.n_trees = trees;
  c.seed = seed;
  return c;
}

TEST(Forest, SinglePredictiveBitGivesStumps) {
  BitMatrix x(40, 16);
  std::vector<int> y(40);
  for (std::size_t r = 0; r < 40; ++r) {
    y[r] = r % 2 == 0 ? 1 : 0;
    if (y[r] == 1) x.set(r, 7);
    x.set(r, 3);  // constant column
  }
  const Forest f = fit_forest(x, y, small_forest(1));
  for (const auto& t : f.trees) {
    EXPECT_EQ(t.depth(), 1);
    EXPECT_EQ(t.feature[0], 7);
  }
  const auto p = predict_proba(f, x);
  EXPECT_EQ(eval::roc_auc(p, y), 1.0);
}

TEST(Forest, IndependentLabelsGiveChanceAuc) {
  double mean = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const BitMatrix train = random_bits(200, 64, rng), test = random_bits(200, 64, rng);
    std::vector<int> y_train(200), y_test(200);
    for (auto& v : y_train) v = rng.bernoulli(0.5) ? 1 : 0;
    for (auto& v : y_test) v = rng.bernoulli(0.5) ? 1 : 0;
    const Forest f = fit_forest(train, y_train, small_forest(seed));
    mean += eval::roc_auc(predict_proba(f, test), y_test) / 20.0;
  }
  EXPECT_NEAR(mean, 0.5, 0.05);
}

TEST(Forest, DeterministicAndThreadIndependent) {
  Rng rng(3);
  const BitMatrix x = random_bits(150, 100, rng);
  std::vector<int> y(150);
  for (std::size_t r = 0; r < 150; ++r) y[r] = x.get(r, 1) != x.get(r, 2) ? 1 : 0;
  const Forest a = fit_forest(x, y, small_forest(9));
  const Forest b = fit_forest(x, y, small_forest(9));
  const Forest s = fit_forest_serial(x, y, small_forest(9));
  EXPECT_EQ(a.trees, b.trees);
  EXPECT_EQ(a.trees, s.trees);
  const Forest other = fit_forest(x, y, small_forest(10));
  EXPECT_NE(a.trees, other.trees);
}

TEST(Forest, PredictionIsMeanOfLeaves) {
  BitMatrix x(6, 2);
  std::vector<int> y = {1, 1, 0, 0, 1, 0};
  for (std::size_t r : {0u, 1u, 4u}) x.set(r, 0);
  Forest f = fit_forest(x, y, small_forest(2, 1));
  // Identical stumps: probability equals the single tree's leaf value.
  Forest twins = f;
  twins.trees.push_back(f.trees[0]);
  const auto p1 = predict_proba(f, x), p2 = predict_proba(twins, x);
  for (std::size_t r = 0; r < 6; ++r) {
    EXPECT_EQ(p1[r], f.trees[0].predict(x, r));
    EXPECT_EQ(p1[r], p2[r]);
    EXPECT_GE(p1[r], 0.0);
    EXPECT_LE(p1[r], 1.0);
  }
  BitMatrix wrong(2, 3);
  EXPECT_THROW(predict_proba(f, wrong), Error);
}

TEST(Forest, Errors) {
  BitMatrix x(4, 3);
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Internal;
  };
  EXPECT_EQ(kind_of([&] { fit_forest(x, std::vector<int>{1, 1, 1, 1}, ForestConfig{}); }), ErrorKind::OneClassOnly);
  EXPECT_EQ(kind_of([&] { fit_forest(BitMatrix(0, 3), std::vector<int>{}, ForestConfig{}); }), ErrorKind::EmptyData);
  EXPECT_EQ(kind_of([&] { fit_forest(x, std::vector<int>{1, 0}, ForestConfig{}); }), ErrorKind::Shape);
  ForestConfig bad;
  bad.n_trees = 0;
  EXPECT_EQ(kind_of([&] { fit_forest(x, std::vector<int>{1, 0, 1, 0}, bad); }), ErrorKind::Config);
}

TEST(Forest, CheckpointRoundTrip) {
  Rng rng(5);
  const BitMatrix x = random_bits(80, 40, rng);
  std::vector<int> y(80);
  for (std::size_t r = 0; r < 80; ++r) y[r] = x.get(r, 4) ? 1 : 0;
  const Forest f = fit_forest(x, y, small_forest(4, 5));
  std::stringstream buf;
  write_forest(buf, f);
  const Forest g = read_forest(buf);
  EXPECT_EQ(g.trees, f.trees);
  EXPECT_EQ(g.n_features, f.n_features);
  EXPECT_EQ(g.config.seed, f.config.seed);
  std::stringstream bytes1, bytes2;
  write_forest(bytes1, f);
  write_forest(bytes2, g);
  EXPECT_EQ(bytes1.str(), bytes2.str());

  std::stringstream junk("NOTAFOREST");
  EXPECT_THROW(read_forest(junk), Error);
  std::string cut = bytes1.str().substr(0, bytes1.str().size() / 2);
  std::stringstream truncated(cut);
  EXPECT_THROW(read_forest(truncated), Error);
}

TEST(Forest, ContextBlockChangesPredictions) {
  // Same fingerprints, opposite labels under the two contexts.
  SynthConfig sc;
  sc.n_targets = 2;
  sc.n_per_target = 150;
  sc.shift_strength = 1.0;
  const auto d = synth_structured_shift(sc).dataset;
  const auto fps = fingerprints(d);
  std::vector<int> ctx;
  for (const auto& r : d.records) ctx.push_back(r.target_id - 1);
  const auto x = BitMatrix::from_fingerprints(fps, ctx, 2);
  EXPECT_EQ(x.features(), static_cast<std::size_t>(fp::kDefaultBits) + 2);
  const Forest f = fit_forest(x, d.labels(), small_forest(1, 40));
  std::vector<int> flipped = ctx;
  for (auto& c : flipped) c = 1 - c;
  const auto p = predict_proba(f, x);
  const auto q = predict_proba(f, BitMatrix::from_fingerprints(fps, flipped, 2));
  double diff = 0;
  for (std::size_t i = 0; i < p.size(); ++i) diff += std::abs(p[i] - q[i]) / static_cast<double>(p.size());
  EXPECT_GT(diff, 0.05);
  EXPECT_THROW(BitMatrix::from_fingerprints(fps, std::vector<int>(fps.size(), 2), 2), Error);
}

TEST(PerTargetRf, SeparableTargetAndScarcityGuard) {
  SynthConfig sc;
  sc.n_targets = 2;
  sc.n_per_target = 400;
  sc.shift_strength = 0.0;
  const auto d = synth_structured_shift(sc).dataset;
  RfExperimentConfig c;
  c.forest = small_forest(1, 50);
  const auto r = per_target_rf_experiment(d, 1, c);
  EXPECT_GE(*r.metrics.roc_auc, 0.95);
  EXPECT_EQ(r.n_train + r.n_test, 400u);

  // Keep five actives of target 2.
  std::vector<std::size_t> rows;
  int actives = 0;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    if (d.records[i].target_id != 2) continue;
    if (*d.records[i].label == 1 && actives++ >= 5) continue;
    rows.push_back(i);
  }
  const Dataset scarce = d.subset(rows);
  c.folds = 2;
  c.test_fold = 1;
  try {
    per_target_rf_experiment(scarce, 2, c);
    FAIL() << "expected InsufficientData";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
    EXPECT_NE(std::string(e.what()).find(" training actives, 10 required"), std::string::npos) << e.what();
  }
}

TEST(PerTargetRf, MoreDataDoesNotHurt) {
  SynthConfig sc;
  sc.n_targets = 1;
  sc.n_per_target = 700;
  sc.shift_strength = 0.0;
  RfExperimentConfig c;
  c.forest = small_forest(1, 30);
  c.min_train_actives = 1;
  double small_auc = 0, large_auc = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    sc.seed = seed;
    const auto d = synth_structured_shift(sc).dataset;
    const auto labels = d.labels();
    std::vector<std::size_t> test, pool;
    for (std::size_t i = 0; i < d.size(); ++i) (i < 200 ? test : pool).push_back(i);
    // The first ten actives and ten inactives of the pool.
    std::vector<std::size_t> small;
    int need1 = 10, need0 = 10;
    for (std::size_t i : pool) {
      if (labels[i] == 1 && need1 > 0) {
        small.push_back(i);
        --need1;
      } else if (labels[i] == 0 && need0 > 0) {
        small.push_back(i);
        --need0;
      }
    }
    const std::vector<std::size_t> large(pool.begin(), pool.begin() + 500);
    c.forest.seed = seed;
    small_auc += *rf_train_test(d, small, test, c).metrics.roc_auc / 10.0;
    large_auc += *rf_train_test(d, large, test, c).metrics.roc_auc / 10.0;
  }
  EXPECT_GE(large_auc, small_auc - 0.02);
}

}  // namespace
}  // namespace nestdrug::rf
