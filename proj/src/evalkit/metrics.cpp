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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "nestdrug/errors.hpp"
#include "nestdrug/evalkit.hpp"

namespace nestdrug::eval {

namespace {

void check_aligned(std::size_t a, std::size_t b, const char* op) {
  require(a == b, ErrorKind::Shape,
          std::string(op) + ": " + std::to_string(a) + " scores vs " + std::to_string(b) + " labels");
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const int> labels) {
  std::size_t pos = 0, neg = 0;
  for (int l : labels) {
    require(l == 0 || l == 1, ErrorKind::Data, "labels must be 0 or 1");
    (l == 1 ? pos : neg)++;
  }
  return {pos, neg};
}

// Indices ordered by descending score, ties kept in input order.
std::vector<std::size_t> rank_desc(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_aligned(scores.size(), labels.size(), "roc_auc");
  const auto [pos, neg] = class_counts(labels);
  require(pos > 0 && neg > 0, ErrorKind::OneClassOnly,
          "roc_auc needs both classes (" + std::to_string(pos) + " positives, " + std::to_string(neg) + " negatives)");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // U = Σ over positives of (#negatives below + ½ #negatives tied), accumulated per tie group.
  double u = 0;
  std::size_t neg_below = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t group_pos = 0, group_neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? group_pos : group_neg)++;
      ++j;
    }
    u += static_cast<double>(group_pos) * (static_cast<double>(neg_below) + 0.5 * static_cast<double>(group_neg));
    neg_below += group_neg;
    i = j;
  }
  return u / (static_cast<double>(pos) * static_cast<double>(neg));
}

double pr_auc(std::span<const double> scores, std::span<const int> labels) {
  check_aligned(scores.size(), labels.size(), "pr_auc");
  const auto [pos, neg] = class_counts(labels);
  require(pos > 0, ErrorKind::NoPositives, "pr_auc needs at least one positive");
  const auto order = rank_desc(scores);
  double tp = 0, seen = 0, prev_recall = 0, area = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      seen += 1;
      if (labels[order[j]] == 1) tp += 1;
      ++j;
    }
    const double recall = tp / static_cast<double>(pos);
    area += (recall - prev_recall) * (tp / seen);
    prev_recall = recall;
    i = j;
  }
  return area;
}

std::size_t top_count(double fraction, std::size_t n) {
  require(fraction > 0.0 && fraction <= 1.0, ErrorKind::Parameter,
          "fraction must be in (0, 1], got " + std::to_string(fraction));
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(k, n == 0 ? 0 : 1, n);
}

double enrichment_factor(std::span<const double> scores, std::span<const int> labels, double fraction) {
  check_aligned(scores.size(), labels.size(), "enrichment_factor");
  const auto [pos, neg] = class_counts(labels);
  require(pos > 0, ErrorKind::NoPositives, "enrichment_factor needs at least one positive");
  const std::size_t n = scores.size();
  const std::size_t top = top_count(fraction, n);
  const auto order = rank_desc(scores);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < top; ++i) hits += labels[order[i]] == 1 ? 1 : 0;
  const double top_rate = static_cast<double>(hits) / static_cast<double>(top);
  const double base_rate = static_cast<double>(pos) / static_cast<double>(n);
  return top_rate / base_rate;
}

Confusion confusion_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_aligned(scores.size(), labels.size(), "confusion_metrics");
  const auto [pos, neg] = class_counts(labels);
  require(pos > 0 && neg > 0, ErrorKind::OneClassOnly, "confusion_metrics needs both classes");
  std::size_t tp = 0, tn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1 && predicted) ++tp;
    if (labels[i] == 0 && !predicted) ++tn;
  }
  return {static_cast<double>(tp) / static_cast<double>(pos), static_cast<double>(tn) / static_cast<double>(neg)};
}

RegressionMetrics regression_metrics(std::span<const double> preds, std::span<const double> targets) {
  check_aligned(preds.size(), targets.size(), "regression_metrics");
  const std::size_t n = preds.size();
  require(n >= 2, ErrorKind::TooFewSamples, "regression_metrics needs at least 2 samples");
  const double nn = static_cast<double>(n);
  double mean_t = 0, mean_p = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_t += targets[i];
    mean_p += preds[i];
  }
  mean_t /= nn;
  mean_p /= nn;
  double ss_res = 0, ss_tot = 0, ss_p = 0, cross = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ss_res += (targets[i] - preds[i]) * (targets[i] - preds[i]);
    ss_tot += (targets[i] - mean_t) * (targets[i] - mean_t);
    ss_p += (preds[i] - mean_p) * (preds[i] - mean_p);
    cross += (targets[i] - mean_t) * (preds[i] - mean_p);
  }
  require(ss_tot > 0, ErrorKind::DegenerateVariance, "targets have zero variance");
  RegressionMetrics r;
  r.rmse = std::sqrt(ss_res / nn);
  r.r2 = 1.0 - ss_res / ss_tot;
  if (ss_p > 0) r.pearson = cross / std::sqrt(ss_tot * ss_p);
  return r;
}

MetricBundle classification_bundle(std::span<const double> probs, std::span<const int> labels) {
  check_aligned(probs.size(), labels.size(), "classification_bundle");
  MetricBundle b;
  const auto [pos, neg] = class_counts(labels);
  b.n = probs.size();
  b.n_pos = pos;
  b.n_neg = neg;
  if (pos > 0) {
    b.pr_auc = pr_auc(probs, labels);
    b.ef_at_1pct = enrichment_factor(probs, labels, 0.01);
    b.ef_at_5pct = enrichment_factor(probs, labels, 0.05);
  }
  if (pos > 0 && neg > 0) {
    b.roc_auc = roc_auc(probs, labels);
    const auto c = confusion_metrics(probs, labels, 0.5);
    b.sensitivity = c.sensitivity;
    b.specificity = c.specificity;
  }
  return b;
}

MetricBundle regression_bundle(std::span<const double> preds, std::span<const double> targets) {
  MetricBundle b;
  const auto r = regression_metrics(preds, targets);
  b.n = preds.size();
  b.rmse = r.rmse;
  b.r2 = r.r2;
  b.pearson = r.pearson;
  return b;
}

namespace {

struct Column {
  const char* name;
  std::optional<double> MetricBundle::*field;
};

constexpr Column kColumns[] = {
    {"roc_auc", &MetricBundle::roc_auc},         {"pr_auc", &MetricBundle::pr_auc},
    {"ef_at_1pct", &MetricBundle::ef_at_1pct},   {"ef_at_5pct", &MetricBundle::ef_at_5pct},
    {"sensitivity", &MetricBundle::sensitivity}, {"specificity", &MetricBundle::specificity},
    {"rmse", &MetricBundle::rmse},               {"r2", &MetricBundle::r2},
    {"pearson", &MetricBundle::pearson},
};

}  // namespace

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::string metric_bundle_json(const MetricBundle& b) {
  nlohmann::ordered_json j;
  for (const auto& c : kColumns) {
    if ((b.*c.field).has_value()) j[c.name] = *(b.*c.field);
  }
  j["n"] = b.n;
  j["n_pos"] = b.n_pos;
  j["n_neg"] = b.n_neg;
  return j.dump();
}

std::string metric_bundle_csv_header() {
  std::string h;
  for (const auto& c : kColumns) h += std::string(c.name) + ",";
  return h + "n,n_pos,n_neg";
}

std::string metric_bundle_csv_row(const MetricBundle& b) {
  std::string row;
  for (const auto& c : kColumns) {
    if ((b.*c.field).has_value()) row += format_number(*(b.*c.field));
    row += ",";
  }
  return row + std::to_string(b.n) + "," + std::to_string(b.n_pos) + "," + std::to_string(b.n_neg);
}

}  // namespace nestdrug::eval
