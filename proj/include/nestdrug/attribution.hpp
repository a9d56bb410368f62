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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nestdrug/model.hpp"

namespace nestdrug::attr {

inline constexpr int kDefaultSteps = 50;
inline constexpr int kMinSteps = 8;

/// Values and input gradients of a scalar function at a batch of points.
using BatchGradient = std::function<void(const std::vector<std::vector<double>>& points, std::vector<double>& values,
                                         std::vector<std::vector<double>>& grads)>;

struct FeatureAttribution {
  std::vector<double> attribution;  // per input dimension
  double f_input = 0;
  double f_baseline = 0;
  double residual = 0;  // |Σ attribution − (f(x) − f(x'))|
};

/// IG_i = (x_i − x'_i)·(1/steps)·Σ_k ∂f/∂x_i at x' + α_k(x − x'), α_k = (k − 0.5)/steps.
FeatureAttribution integrated_gradients(std::span<const double> input, std::span<const double> baseline, int steps,
                                        const BatchGradient& f);

struct AttributionResult {
  std::vector<double> atom_importance;  // L1 norm of each atom's feature attributions
  std::vector<double> feature_attribution;  // atoms × features, row-major
  std::size_t n_features = 0;
  int steps = 0;
  std::string baseline = "zero-features";
  std::string output = "logit";
  double f_input = 0;
  double f_baseline = 0;
  double residual = 0;
};

/// Attributions over the atom feature matrix against the all-zero matrix on the same graph.
/// Throws StepsTooFew below kMinSteps.
AttributionResult integrated_gradients(const model::NestModel& m, const mol::MolGraph& mol,
                                       const model::ContextTuple& context, int steps = kDefaultSteps,
                                       const std::string& task = "activity");

/// Parallel over (molecule, context) pairs; result[i][j] is molecule i under context j.
std::vector<std::vector<AttributionResult>> attribute_all(const model::NestModel& m,
                                                          std::span<const mol::MolGraph> mols,
                                                          std::span<const model::ContextTuple> contexts,
                                                          int steps = kDefaultSteps,
                                                          const std::string& task = "activity");

/// a·b / sqrt(|a|²·|b|²); throws ZeroVector when either vector is all zero.
double cosine(std::span<const double> a, std::span<const double> b);

/// Pairwise cosine of the per-atom importance vectors of one molecule under each context.
std::vector<std::vector<double>> attribution_similarity(const model::NestModel& m, const mol::MolGraph& mol,
                                                        std::span<const model::ContextTuple> contexts,
                                                        int steps = kDefaultSteps,
                                                        const std::string& task = "activity");

struct AttributionStats {
  double mean = 0;
  double max = 0;
  double std = 0;  // population standard deviation
  std::vector<std::size_t> top_atoms;  // descending importance, ties by index
};

AttributionStats attribution_stats(std::span<const double> importance, std::size_t top_k = 3);

struct StatsTable {
  std::vector<AttributionStats> rows;  // one per molecule
  double mean_importance = 0;  // mean over molecules of the per-molecule mean
  double mean_max = 0;
};
StatsTable attribution_stats(std::span<const AttributionResult> results, std::size_t top_k = 3);

/// {"atoms": {"0": importance, ...}, "steps": ..., "baseline": ..., "residual": ...}
std::string attribution_json(const AttributionResult& r, const std::vector<std::string>& atom_symbols = {});

}  // namespace nestdrug::attr
