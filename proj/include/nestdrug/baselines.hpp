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
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nestdrug/datasets.hpp"
#include "nestdrug/evalkit.hpp"
#include "nestdrug/fingerprint.hpp"

namespace nestdrug::rf {

/// Dense binary design matrix, one row of 64-bit words per sample.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t features);

  std::size_t rows() const { return rows_; }
  std::size_t features() const { return features_; }
  bool get(std::size_t row, std::size_t feature) const {
    return (bits_[row * words_ + (feature >> 6)] >> (feature & 63)) & 1u;
  }
  void set(std::size_t row, std::size_t feature);

  /// Fingerprint bits, optionally followed by a one-hot block of `n_contexts` columns
  /// (context id k sets column nbits + k).
  static BitMatrix from_fingerprints(std::span<const fp::Fingerprint> fps, std::span<const int> contexts = {},
                                     std::size_t n_contexts = 0);

 private:
  std::size_t rows_ = 0;
  std::size_t features_ = 0;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;
};

struct ForestConfig {
  int n_trees = 200;
  int max_depth = 20;
  int min_leaf = 2;
  double feature_fraction = 0.0;  // candidate features per node; 0 = √F
  std::uint64_t seed = 1;

  void validate() const;
};

/// Flat node arrays; feature = -1 marks a leaf. Split sends bit 0 left and bit 1 right.
struct DecisionTree {
  std::vector<std::int32_t> feature;
  std::vector<std::int32_t> left;
  std::vector<std::int32_t> right;
  std::vector<double> value;  // positive-class probability at each node

  std::size_t size() const { return feature.size(); }
  int depth() const;
  double predict(const BitMatrix& x, std::size_t row) const;
  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct Forest {
  ForestConfig config;
  std::size_t n_features = 0;
  std::vector<DecisionTree> trees;
};

/// Bootstrap-sampled Gini trees over √F candidate features per node (constant features do not
/// count toward the quota); ties go to the lowest feature index. Trees fit in parallel from
/// per-tree seeds, so the result does not depend on the thread count.
Forest fit_forest(const BitMatrix& x, std::span<const int> y, const ForestConfig& config);
/// Single-threaded reference; bitwise identical to fit_forest.
Forest fit_forest_serial(const BitMatrix& x, std::span<const int> y, const ForestConfig& config);

/// Mean positive-class leaf probability across trees.
std::vector<double> predict_proba(const Forest& forest, const BitMatrix& x);

void write_forest(std::ostream& out, const Forest& forest);
Forest read_forest(std::istream& in);
void save_forest(const std::string& path, const Forest& forest);
Forest load_forest(const std::string& path);

struct RfExperimentConfig {
  ForestConfig forest;
  int radius = fp::kDefaultRadius;
  int nbits = fp::kDefaultBits;
  int folds = 5;          // stratified; fold `test_fold` is held out
  int test_fold = 0;
  int min_train_actives = 10;
  std::uint64_t split_seed = 1;
};

struct RfExperimentResult {
  int target_id = 0;
  std::size_t n_train = 0;
  std::size_t n_train_actives = 0;
  std::size_t n_test = 0;
  std::size_t n_test_actives = 0;
  eval::MetricBundle metrics;
};

/// Per-target forest on one target's labelled records: stratified hold-out, fit, score.
/// Throws InsufficientData when the training split has fewer actives than required.
RfExperimentResult per_target_rf_experiment(const Dataset& dataset, int target_id, const RfExperimentConfig& config);

/// Forest on explicit train/test rows of a single target's records.
RfExperimentResult rf_train_test(const Dataset& dataset, std::span<const std::size_t> train_rows,
                                 std::span<const std::size_t> test_rows, const RfExperimentConfig& config);

std::vector<fp::Fingerprint> fingerprints(const Dataset& dataset, int radius = fp::kDefaultRadius,
                                          int nbits = fp::kDefaultBits);

}  // namespace nestdrug::rf
