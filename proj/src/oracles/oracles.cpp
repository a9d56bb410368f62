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

#include "nestdrug/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "nestdrug/errors.hpp"
#include "nestdrug/rng.hpp"

namespace nestdrug::oracle {

using tensor::Tensor;

GradCheckResult grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                           const std::vector<Tensor>& inputs, double h, double rtol, double atol,
                           std::uint64_t seed) {
  std::vector<Tensor> x = inputs;
  for (auto& t : x) t.zero_grad();

  std::vector<double> weights;
  {
    tensor::Tape tape;
    const Tensor out = f(x);
    Rng rng(seed);
    weights.resize(out.size());
    for (double& w : weights) w = rng.uniform(-1.0, 1.0);
    const Tensor loss = tensor::sum(tensor::mul(out, Tensor::from(out.rows(), out.cols(), weights)));
    tape.backward(loss);
  }

  auto objective = [&]() {
    const Tensor out = f(x);
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.data()[i] * weights[i];
    return s;
  };

  GradCheckResult result;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!x[k].requires_grad()) continue;
    auto values = x[k].mutable_data();
    const std::vector<double> analytic(x[k].grad().begin(), x[k].grad().end());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + h;
      const double up = objective();
      values[i] = orig - h;
      const double down = objective();
      values[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double err = std::abs(numeric - analytic[i]);
      const double scale = std::max(std::abs(numeric), std::abs(analytic[i]));
      result.worst_abs_error = std::max(result.worst_abs_error, err);
      if (scale > 0) result.worst_rel_error = std::max(result.worst_rel_error, err / scale);
      if (err > rtol * scale + atol && result.ok) {
        result.ok = false;
        std::ostringstream os;
        os << "input " << k << " element " << i << ": analytic " << analytic[i] << " vs numeric " << numeric;
        result.detail = os.str();
      }
    }
  }
  return result;
}

double pairwise_auc(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  require(pairs > 0, ErrorKind::OneClassOnly, "pairwise_auc needs both classes");
  return wins / static_cast<double>(pairs);
}

double threshold_pr_auc(std::span<const double> scores, std::span<const int> labels) {
  std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
  double total_pos = 0;
  for (int l : labels) total_pos += l == 1 ? 1.0 : 0.0;
  require(total_pos > 0, ErrorKind::NoPositives, "threshold_pr_auc needs positives");
  double prev_recall = 0, area = 0;
  for (double t : thresholds) {
    double tp = 0, predicted = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) {
        predicted += 1;
        if (labels[i] == 1) tp += 1;
      }
    }
    const double recall = tp / total_pos;
    const double precision = tp / predicted;
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

namespace {

template <typename F>
double simpson(F f, double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15 * tol) return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

template <typename F>
double integrate(F f, double a, double b, double tol = 1e-13) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4 * fm + fb), tol, 50);
}

}  // namespace

double t_two_sided_p_quadrature(double t, double dof) {
  const double norm = std::exp(std::lgamma((dof + 1) / 2) - std::lgamma(dof / 2)) / std::sqrt(dof * std::numbers::pi);
  auto density = [&](double x) { return norm * std::pow(1.0 + x * x / dof, -(dof + 1) / 2); };
  const double inner = integrate(density, 0.0, std::abs(t));
  return std::clamp(1.0 - 2.0 * inner, 0.0, 1.0);
}

double incomplete_beta_quadrature(double a, double b, double x) {
  require(a >= 1 && b >= 1, ErrorKind::Parameter, "quadrature oracle needs a, b >= 1");
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double inv_beta = std::exp(-log_beta);
  auto integrand = [&](double u) { return std::pow(u, a - 1) * std::pow(1.0 - u, b - 1) * inv_beta; };
  return integrate(integrand, 0.0, x);
}

double anova_f(const std::vector<std::vector<double>>& groups) {
  double grand = 0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    for (double v : g) grand += v;
    n += g.size();
  }
  grand /= static_cast<double>(n);
  double ssb = 0, ssw = 0;
  for (const auto& g : groups) {
    double m = 0;
    for (double v : g) m += v;
    m /= static_cast<double>(g.size());
    ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
    for (double v : g) ssw += (v - m) * (v - m);
  }
  const double k = static_cast<double>(groups.size());
  return (ssb / (k - 1)) / (ssw / (static_cast<double>(n) - k));
}

namespace {

// Distinct scores: the item at rank r (0 = best) scores n - r. Items are then shuffled so the
// metric has to sort; the hand count only depends on which ranks hold actives.
EnrichmentCase ranked_case(std::string name, std::size_t n, std::vector<std::size_t> active_ranks, double fraction,
                           double expected) {
  EnrichmentCase c{std::move(name), std::vector<double>(n), std::vector<int>(n, 0), fraction, expected};
  for (std::size_t r = 0; r < n; ++r) c.scores[r] = static_cast<double>(n - r);
  for (std::size_t r : active_ranks) c.labels[r] = 1;
  Rng rng(n * 31 + active_ranks.size());
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(c.scores[i - 1], c.scores[j]);
    std::swap(c.labels[i - 1], c.labels[j]);
  }
  return c;
}

}  // namespace

std::vector<EnrichmentCase> enrichment_cases() {
  std::vector<EnrichmentCase> cases;
  // top = ceil(fraction * n); EF = (hits in top / top) / (actives / n)
  cases.push_back(ranked_case("n100 top1 hit", 100, {0, 50}, 0.01, 50.0));          // (1/1)/(2/100)
  cases.push_back(ranked_case("n100 top1 miss", 100, {1, 50}, 0.01, 0.0));          // 0 hits
  cases.push_back(ranked_case("n100 two in top5", 100, {0, 1}, 0.05, 20.0));        // (2/5)/(2/100)
  cases.push_back(ranked_case("n102 1:50 all top", 102, {0, 1}, 0.01, 51.0));       // top 2: (2/2)/(2/102)
  cases.push_back(ranked_case("all active", 10, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 0.1, 1.0));
  cases.push_back(ranked_case("fraction one", 10, {9}, 1.0, 1.0));                   // whole list
  cases.push_back(ranked_case("half list", 10, {0, 5}, 0.5, 1.0));                   // (1/5)/(2/10)
  cases.push_back(ranked_case("quarter", 20, {0, 1, 2, 3}, 0.25, 4.0));              // (4/5)/(4/20)
  cases.push_back(ranked_case("ceil 3.5", 7, {3}, 0.5, 1.75));                       // top 4: (1/4)/(1/7)
  cases.push_back(ranked_case("tiny fraction", 3, {0}, 0.01, 3.0));                  // top 1: 1/(1/3)
  cases.push_back(ranked_case("spread 20pct", 50, {0, 10, 20, 30, 40}, 0.2, 1.0));   // (1/10)/(5/50)
  cases.push_back(ranked_case("spread 22pct", 50, {0, 10, 20, 30, 40}, 0.22, 20.0 / 11.0));  // top 11: (2/11)/0.1
  cases.push_back(ranked_case("n200 top2", 200, {0, 1}, 0.01, 100.0));               // (2/2)/(2/200)
  cases.push_back(ranked_case("n200 one of two", 200, {0, 3}, 0.01, 50.0));          // (1/2)/(2/200)
  cases.push_back(ranked_case("n1000 half pct", 1000, {4}, 0.005, 200.0));           // top 5 (ranks 0..4): (1/5)/(1/1000)
  cases.push_back(ranked_case("n1000 just outside", 1000, {4}, 0.004, 0.0));         // top 4 misses rank 4
  // Ties keep input order.
  cases.push_back({"all tied, actives last", {1, 1, 1, 1}, {0, 0, 1, 1}, 0.5, 0.0});  // top = items 0,1
  cases.push_back({"all tied, active first", {1, 1, 1, 1}, {1, 0, 0, 0}, 0.25, 4.0}); // 1/(1/4)
  cases.push_back({"tie at cutoff miss", {3, 2, 2, 1}, {0, 0, 1, 1}, 0.5, 0.0});      // items 0,1
  cases.push_back({"tie at cutoff hit", {3, 2, 2, 1}, {0, 1, 0, 1}, 0.5, 1.0});       // (1/2)/(2/4)
  return cases;
}

}  // namespace nestdrug::oracle
