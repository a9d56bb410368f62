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
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nestdrug::eval {

/// Mann-Whitney ROC-AUC; ties count one half.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// Average precision with right-step interpolation at each distinct threshold.
double pr_auc(std::span<const double> scores, std::span<const int> labels);

/// Number of compounds in the top fraction: ⌈fraction·n⌉ (with a 1e-9 guard against
/// representation error, so 0.01·100 counts as exactly 1).
std::size_t top_count(double fraction, std::size_t n);

/// Hit rate in the top ⌈fraction·n⌉ by score (stable ties) over the overall hit rate.
double enrichment_factor(std::span<const double> scores, std::span<const int> labels, double fraction);

struct Confusion {
  double sensitivity = 0;
  double specificity = 0;
};

/// TPR/TNR with score ≥ threshold predicted positive.
Confusion confusion_metrics(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

struct RegressionMetrics {
  double rmse = 0;
  double r2 = 0;
  std::optional<double> pearson;  // undefined when predictions are constant
};

RegressionMetrics regression_metrics(std::span<const double> preds, std::span<const double> targets);

struct MetricBundle {
  std::optional<double> roc_auc, pr_auc, ef_at_1pct, ef_at_5pct, sensitivity, specificity;
  std::optional<double> rmse, r2, pearson;
  std::size_t n = 0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

/// Classification bundle from probabilities; metrics needing a missing class are left empty.
MetricBundle classification_bundle(std::span<const double> probs, std::span<const int> labels);
MetricBundle regression_bundle(std::span<const double> preds, std::span<const double> targets);

std::string metric_bundle_json(const MetricBundle& b);
/// Header and row for a flat CSV (fixed column order, empty cells for missing metrics).
/// Ten significant digits; shared by every CSV writer.
std::string format_number(double v);

std::string metric_bundle_csv_header();
std::string metric_bundle_csv_row(const MetricBundle& b);

// ---- splits ----
struct SplitPlan {
  int k = 0;
  std::vector<int> fold;                       // k-fold: fold of each row
  std::vector<bool> is_test;                   // temporal: test flag per row
  std::map<int, std::vector<std::size_t>> test_buckets;  // temporal: year -> rows
  std::vector<std::string> warnings;

  std::vector<std::size_t> train_rows(int test_fold) const;
  std::vector<std::size_t> test_rows(int test_fold) const;
};

/// Per class: seeded shuffle, then round-robin fold assignment with one counter across classes.
SplitPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

/// train: year ≤ cutoff; test: year > cutoff, bucketed per year.
SplitPlan temporal_split(std::span<const std::optional<int>> years, int cutoff_year);

// ---- statistics ----
/// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);
/// Two-sided p-value of Student's t with dof degrees of freedom.
double student_t_two_sided_p(double t, double dof);

struct TTestResult {
  double t = 0;
  double p_raw = 1;
  double p_bonferroni = 1;
  double cohens_d = 0;
  bool degenerate = false;  // zero variance
  std::size_t n = 0;
};

/// Paired t-test on differences; zero variance gives p = 1 (mean 0) or p = 0 (mean ≠ 0), flagged degenerate.
TTestResult paired_t_test(std::span<const double> diffs, int m_comparisons = 1);
double bonferroni(double p, int m);
double cohens_d(std::span<const double> diffs);
double one_way_anova_f(const std::vector<std::vector<double>>& groups);

struct MeanSe {
  double mean = 0;
  double se = 0;
  std::size_t n = 0;
};
MeanSe mean_se(std::span<const double> values);

// ---- Theorem-2 decomposition on finite joint tables ----
struct JointTable {
  std::size_t n_molecules = 0;
  std::size_t n_contexts = 0;
  std::vector<double> y_values;
  /// P(g, c, y) at index (g·n_contexts + c)·|y| + yi.
  std::vector<double> prob;

  double& at(std::size_t g, std::size_t c, std::size_t yi) { return prob[(g * n_contexts + c) * y_values.size() + yi]; }
  double at(std::size_t g, std::size_t c, std::size_t yi) const {
    return prob[(g * n_contexts + c) * y_values.size() + yi];
  }
};

struct ExcessRisk {
  double loss_ctx = 0;
  double loss_static = 0;
  double excess = 0;
  double variance_term = 0;
};

/// Squared-loss Bayes risks of E[y|g,c] and E[y|g], plus E_g[Var_c(E[y|g,c])].
ExcessRisk excess_risk_decomposition(const JointTable& joint);

}  // namespace nestdrug::eval
