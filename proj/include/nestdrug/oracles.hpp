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

// Independent reference implementations used by the unit tests, the acceptance
// suite and `nestdrug selftest`. They favour obviousness over speed.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nestdrug/tensor.hpp"

namespace nestdrug::oracle {

struct GradCheckResult {
  bool ok = true;
  double worst_abs_error = 0.0;
  double worst_rel_error = 0.0;
  std::string detail;
};

/// Central finite-difference check of d(sum(f(x) ⊙ R))/dx for every input element, R fixed random.
GradCheckResult grad_check(const std::function<tensor::Tensor(const std::vector<tensor::Tensor>&)>& f,
                           const std::vector<tensor::Tensor>& inputs, double h = 1e-4, double rtol = 1e-3,
                           double atol = 1e-5, std::uint64_t seed = 1);

/// Probability a positive outranks a negative by counting every pair; ties count ½.
double pairwise_auc(std::span<const double> scores, std::span<const int> labels);

/// Average precision by evaluating precision and recall at every distinct threshold.
double threshold_pr_auc(std::span<const double> scores, std::span<const int> labels);

/// Two-sided Student-t p-value by adaptive Simpson integration of the density.
double t_two_sided_p_quadrature(double t, double dof);

/// Regularized incomplete beta by composite Simpson integration.
double incomplete_beta_quadrature(double a, double b, double x);

/// One-way ANOVA F from the textbook sums of squares.
double anova_f(const std::vector<std::vector<double>>& groups);

struct EnrichmentCase {
  std::string name;
  std::vector<double> scores;
  std::vector<int> labels;
  double fraction = 0;
  double expected = 0;  // worked out by hand, see oracles.cpp
};

/// Twenty constructed enrichment-factor cases with hand-counted answers.
std::vector<EnrichmentCase> enrichment_cases();

}  // namespace nestdrug::oracle
