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
#include <limits>
#include <set>

#include "nestdrug/errors.hpp"
#include "nestdrug/evalkit.hpp"
#include "nestdrug/rng.hpp"

namespace nestdrug::eval {

// ---- splits ----

std::vector<std::size_t> SplitPlan::train_rows(int test_fold) const {
  std::vector<std::size_t> out;
  if (!fold.empty()) {
    for (std::size_t i = 0; i < fold.size(); ++i) {
      if (fold[i] != test_fold) out.push_back(i);
    }
  } else {
    for (std::size_t i = 0; i < is_test.size(); ++i) {
      if (!is_test[i]) out.push_back(i);
    }
  }
  return out;
}

std::vector<std::size_t> SplitPlan::test_rows(int test_fold) const {
  std::vector<std::size_t> out;
  if (!fold.empty()) {
    for (std::size_t i = 0; i < fold.size(); ++i) {
      if (fold[i] == test_fold) out.push_back(i);
    }
  } else {
    for (std::size_t i = 0; i < is_test.size(); ++i) {
      if (is_test[i]) out.push_back(i);
    }
  }
  return out;
}

SplitPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  require(k >= 2, ErrorKind::Parameter, "stratified_kfold needs k >= 2");
  std::set<int> classes(labels.begin(), labels.end());
  SplitPlan plan;
  plan.k = k;
  plan.fold.assign(labels.size(), -1);
  std::size_t counter = 0;
  for (int cls : classes) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    require(members.size() >= static_cast<std::size_t>(k), ErrorKind::TooFewSamples,
            "class " + std::to_string(cls) + " has " + std::to_string(members.size()) + " rows, fewer than k = " +
                std::to_string(k));
    Rng rng(derive_seed(seed, "kfold", static_cast<std::uint64_t>(cls + 1000)));
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t idx : members) plan.fold[idx] = static_cast<int>(counter++ % static_cast<std::size_t>(k));
  }
  return plan;
}

SplitPlan temporal_split(std::span<const std::optional<int>> years, int cutoff_year) {
  SplitPlan plan;
  plan.is_test.assign(years.size(), false);
  for (std::size_t i = 0; i < years.size(); ++i) {
    require(years[i].has_value(), ErrorKind::MissingYear, "row " + std::to_string(i) + " has no year");
    if (*years[i] > cutoff_year) {
      plan.is_test[i] = true;
      plan.test_buckets[*years[i]].push_back(i);
    }
  }
  if (plan.test_buckets.empty()) {
    plan.warnings.push_back("temporal split at " + std::to_string(cutoff_year) + " leaves the test side empty");
  }
  if (std::none_of(plan.is_test.begin(), plan.is_test.end(), [](bool t) { return !t; })) {
    plan.warnings.push_back("temporal split at " + std::to_string(cutoff_year) + " leaves the train side empty");
  }
  return plan;
}

// ---- statistics ----

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1, qam = a - 1;
  double c = 1, d = 1 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  require(a > 0 && b > 0, ErrorKind::Parameter, "incomplete_beta needs a, b > 0");
  require(x >= 0 && x <= 1, ErrorKind::Parameter, "incomplete_beta needs x in [0, 1]");
  if (x == 0) return 0;
  if (x == 1) return 1;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1) / (a + b + 2)) return front * beta_continued_fraction(a, b, x) / a;
  return 1 - front * beta_continued_fraction(b, a, 1 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  require(dof > 0, ErrorKind::Parameter, "degrees of freedom must be positive");
  if (std::isinf(t)) return 0.0;
  return std::clamp(incomplete_beta(dof / 2, 0.5, dof / (dof + t * t)), 0.0, 1.0);
}

double bonferroni(double p, int m) {
  require(m >= 1, ErrorKind::Parameter, "Bonferroni needs m >= 1");
  return std::min(1.0, p * static_cast<double>(m));
}

namespace {

std::pair<double, double> mean_sd(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  double m = 0;
  for (double x : v) m += x;
  m /= n;
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1))};
}

// Exact check: the computed sd of identical values can be a rounding residue, not 0.
bool all_equal(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

double cohens_d(std::span<const double> diffs) {
  require(diffs.size() >= 2, ErrorKind::TooFewSamples, "Cohen's d needs at least 2 values");
  const auto [m, sd] = mean_sd(diffs);
  if (all_equal(diffs)) return m == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), m);
  return m / sd;
}

TTestResult paired_t_test(std::span<const double> diffs, int m_comparisons) {
  require(diffs.size() >= 2, ErrorKind::TooFewSamples, "paired t-test needs at least 2 differences");
  TTestResult r;
  r.n = diffs.size();
  const auto [m, sd] = mean_sd(diffs);
  r.cohens_d = cohens_d(diffs);
  if (all_equal(diffs)) {
    r.degenerate = true;
    r.t = m == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), m);
    r.p_raw = m == 0 ? 1.0 : 0.0;
  } else {
    r.t = m / (sd / std::sqrt(static_cast<double>(diffs.size())));
    r.p_raw = student_t_two_sided_p(r.t, static_cast<double>(diffs.size() - 1));
  }
  r.p_bonferroni = bonferroni(r.p_raw, m_comparisons);
  return r;
}

double one_way_anova_f(const std::vector<std::vector<double>>& groups) {
  require(groups.size() >= 2, ErrorKind::TooFewSamples, "ANOVA needs at least two groups");
  std::size_t n = 0;
  double grand = 0;
  for (const auto& g : groups) {
    require(!g.empty(), ErrorKind::TooFewSamples, "ANOVA group is empty");
    n += g.size();
    for (double v : g) grand += v;
  }
  require(n > groups.size(), ErrorKind::TooFewSamples, "ANOVA needs more observations than groups");
  grand /= static_cast<double>(n);
  double between = 0, within = 0;
  for (const auto& g : groups) {
    double m = 0;
    for (double v : g) m += v;
    m /= static_cast<double>(g.size());
    between += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g) within += (v - m) * (v - m);
  }
  const double df_between = static_cast<double>(groups.size() - 1);
  const double df_within = static_cast<double>(n - groups.size());
  if (within == 0) return between == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  return (between / df_between) / (within / df_within);
}

MeanSe mean_se(std::span<const double> values) {
  MeanSe r;
  r.n = values.size();
  if (values.empty()) return r;
  double m = 0;
  for (double v : values) m += v;
  m /= static_cast<double>(values.size());
  r.mean = m;
  if (values.size() >= 2) {
    double ss = 0;
    for (double v : values) ss += (v - m) * (v - m);
    r.se = std::sqrt(ss / static_cast<double>(values.size() - 1)) / std::sqrt(static_cast<double>(values.size()));
  }
  return r;
}

// ---- excess risk ----

ExcessRisk excess_risk_decomposition(const JointTable& joint) {
  const std::size_t G = joint.n_molecules, C = joint.n_contexts, Y = joint.y_values.size();
  require(G > 0 && C > 0 && Y > 0, ErrorKind::Parameter, "joint table has an empty dimension");
  require(joint.prob.size() == G * C * Y, ErrorKind::Shape, "joint table size does not match its dimensions");
  double total = 0;
  for (double p : joint.prob) {
    require(p >= 0 && std::isfinite(p), ErrorKind::NotNormalized, "joint table has a negative or non-finite entry");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorKind::NotNormalized,
          "joint table sums to " + std::to_string(total) + ", not 1");

  std::vector<double> p_gc(G * C, 0.0), f_gc(G * C, 0.0), p_g(G, 0.0), f_g(G, 0.0);
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t c = 0; c < C; ++c) {
      double mass = 0, first = 0;
      for (std::size_t y = 0; y < Y; ++y) {
        mass += joint.at(g, c, y);
        first += joint.at(g, c, y) * joint.y_values[y];
      }
      p_gc[g * C + c] = mass;
      f_gc[g * C + c] = mass > 0 ? first / mass : 0.0;
      p_g[g] += mass;
      f_g[g] += first;
    }
    f_g[g] = p_g[g] > 0 ? f_g[g] / p_g[g] : 0.0;
  }

  ExcessRisk r;
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t y = 0; y < Y; ++y) {
        const double p = joint.at(g, c, y);
        const double yv = joint.y_values[y];
        r.loss_ctx += p * (yv - f_gc[g * C + c]) * (yv - f_gc[g * C + c]);
        r.loss_static += p * (yv - f_g[g]) * (yv - f_g[g]);
      }
      const double dev = f_gc[g * C + c] - f_g[g];
      r.variance_term += p_gc[g * C + c] * dev * dev;
    }
  }
  r.excess = r.loss_static - r.loss_ctx;
  return r;
}

}  // namespace nestdrug::eval
