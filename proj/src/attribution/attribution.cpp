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

#include "nestdrug/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "json.hpp"
#include "nestdrug/errors.hpp"

namespace nestdrug::attr {

FeatureAttribution integrated_gradients(std::span<const double> input, std::span<const double> baseline, int steps,
                                        const BatchGradient& f) {
  require(steps >= kMinSteps, ErrorKind::StepsTooFew,
          "integrated gradients needs at least " + std::to_string(kMinSteps) + " steps, got " + std::to_string(steps));
  require(input.size() == baseline.size(), ErrorKind::Shape, "input and baseline differ in size");
  const std::size_t n = input.size();
  std::vector<std::vector<double>> points;
  points.reserve(static_cast<std::size_t>(steps) + 2);
  points.emplace_back(input.begin(), input.end());
  points.emplace_back(baseline.begin(), baseline.end());
  for (int k = 1; k <= steps; ++k) {
    const double alpha = (static_cast<double>(k) - 0.5) / static_cast<double>(steps);
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = baseline[i] + alpha * (input[i] - baseline[i]);
    points.push_back(std::move(p));
  }
  std::vector<double> values;
  std::vector<std::vector<double>> grads;
  f(points, values, grads);
  require(values.size() == points.size() && grads.size() == points.size(), ErrorKind::Shape,
          "gradient function returned the wrong number of points");

  FeatureAttribution out;
  out.attribution.assign(n, 0.0);
  for (std::size_t k = 2; k < points.size(); ++k) {
    require(grads[k].size() == n, ErrorKind::Shape, "gradient has the wrong size");
    for (std::size_t i = 0; i < n; ++i) out.attribution[i] += grads[k][i];
  }
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.attribution[i] *= (input[i] - baseline[i]) / static_cast<double>(steps);
    total += out.attribution[i];
  }
  out.f_input = values[0];
  out.f_baseline = values[1];
  out.residual = std::abs(total - (out.f_input - out.f_baseline));
  return out;
}

namespace {

AttributionResult attribute_with(const model::NestModel& work, const mol::MolGraph& mol,
                                 const model::ContextTuple& context, int steps, std::size_t task) {
  const std::size_t atoms = mol.num_atoms();
  require(atoms > 0, ErrorKind::EmptyMolecule, "molecule has no atoms");
  const std::size_t dim = mol::kAtomFeatureDim;
  const auto& x = mol.atom_features().values;
  const std::vector<double> zero(x.size(), 0.0);

  const BatchGradient f = [&](const std::vector<std::vector<double>>& points, std::vector<double>& values,
                              std::vector<std::vector<double>>& grads) {
    std::vector<const mol::MolGraph*> copies(points.size(), &mol);
    model::MolBatch batch = model::make_batch(copies);
    std::vector<double> flat;
    flat.reserve(points.size() * x.size());
    for (const auto& p : points) flat.insert(flat.end(), p.begin(), p.end());
    tensor::Tape tape;
    batch.atom_features = tensor::Tensor::param(points.size() * atoms, dim, std::move(flat));
    const std::vector<model::ContextTuple> ctx(points.size(), context);
    const tensor::Tensor out = work.forward(batch, ctx, task);
    tape.backward(tensor::sum(out));
    values.assign(out.data().begin(), out.data().end());
    const auto g = batch.atom_features.grad();
    grads.assign(points.size(), {});
    for (std::size_t k = 0; k < points.size(); ++k)
      grads[k].assign(g.begin() + static_cast<std::ptrdiff_t>(k * x.size()),
                      g.begin() + static_cast<std::ptrdiff_t>((k + 1) * x.size()));
  };
  const FeatureAttribution fa = integrated_gradients(x, zero, steps, f);

  AttributionResult r;
  r.feature_attribution = fa.attribution;
  r.n_features = dim;
  r.steps = steps;
  r.output = work.config().tasks[task].kind == model::TaskKind::Classification ? "logit" : "value";
  r.f_input = fa.f_input;
  r.f_baseline = fa.f_baseline;
  r.residual = fa.residual;
  r.atom_importance.assign(atoms, 0.0);
  for (std::size_t a = 0; a < atoms; ++a)
    for (std::size_t j = 0; j < dim; ++j) r.atom_importance[a] += std::abs(fa.attribution[a * dim + j]);
  return r;
}

}  // namespace

AttributionResult integrated_gradients(const model::NestModel& m, const mol::MolGraph& mol,
                                       const model::ContextTuple& context, int steps, const std::string& task) {
  require(steps >= kMinSteps, ErrorKind::StepsTooFew,
          "integrated gradients needs at least " + std::to_string(kMinSteps) + " steps, got " + std::to_string(steps));
  // Backward accumulates into parameter gradients; a private copy keeps the caller's model untouched.
  const model::NestModel work = m.clone();
  return attribute_with(work, mol, context, steps, m.task_index(task));
}

std::vector<std::vector<AttributionResult>> attribute_all(const model::NestModel& m,
                                                          std::span<const mol::MolGraph> mols,
                                                          std::span<const model::ContextTuple> contexts, int steps,
                                                          const std::string& task) {
  require(steps >= kMinSteps, ErrorKind::StepsTooFew,
          "integrated gradients needs at least " + std::to_string(kMinSteps) + " steps, got " + std::to_string(steps));
  const std::size_t t = m.task_index(task);
  std::vector<std::vector<AttributionResult>> out(mols.size(), std::vector<AttributionResult>(contexts.size()));
  const auto jobs = static_cast<std::int64_t>(mols.size() * contexts.size());
  std::exception_ptr error;
#pragma omp parallel
  {
    const model::NestModel work = m.clone();
#pragma omp for schedule(dynamic, 1)
    for (std::int64_t j = 0; j < jobs; ++j) {
      const auto i = static_cast<std::size_t>(j) / contexts.size();
      const auto c = static_cast<std::size_t>(j) % contexts.size();
      try {
        out[i][c] = attribute_with(work, mols[i], contexts[c], steps, t);
      } catch (...) {
#pragma omp critical
        if (!error) error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::Shape, "cosine of vectors with different lengths");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  require(na > 0 && nb > 0, ErrorKind::ZeroVector, "cosine of a zero attribution vector");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

std::vector<std::vector<double>> attribution_similarity(const model::NestModel& m, const mol::MolGraph& mol,
                                                        std::span<const model::ContextTuple> contexts, int steps,
                                                        const std::string& task) {
  require(contexts.size() >= 2, ErrorKind::Parameter, "attribution similarity needs at least two contexts");
  const auto res = attribute_all(m, std::span<const mol::MolGraph>(&mol, 1), contexts, steps, task)[0];
  const std::size_t n = contexts.size();
  std::vector<std::vector<double>> sim(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sim[i][j] = cosine(res[i].atom_importance, res[j].atom_importance);
  return sim;
}

AttributionStats attribution_stats(std::span<const double> importance, std::size_t top_k) {
  require(!importance.empty(), ErrorKind::EmptySet, "no atom importances");
  AttributionStats s;
  const auto n = static_cast<double>(importance.size());
  for (double v : importance) s.mean += v / n;
  s.max = *std::max_element(importance.begin(), importance.end());
  double var = 0;
  for (double v : importance) var += (v - s.mean) * (v - s.mean) / n;
  s.std = std::sqrt(var);
  std::vector<std::size_t> order(importance.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });
  order.resize(std::min(top_k, order.size()));
  s.top_atoms = std::move(order);
  return s;
}

StatsTable attribution_stats(std::span<const AttributionResult> results, std::size_t top_k) {
  require(!results.empty(), ErrorKind::EmptySet, "no attribution results");
  StatsTable t;
  for (const auto& r : results) {
    t.rows.push_back(attribution_stats(r.atom_importance, top_k));
    t.mean_importance += t.rows.back().mean / static_cast<double>(results.size());
    t.mean_max += t.rows.back().max / static_cast<double>(results.size());
  }
  return t;
}

std::string attribution_json(const AttributionResult& r, const std::vector<std::string>& atom_symbols) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json atoms;
  for (std::size_t a = 0; a < r.atom_importance.size(); ++a) atoms[std::to_string(a)] = r.atom_importance[a];
  j["atoms"] = std::move(atoms);
  if (!atom_symbols.empty()) j["symbols"] = atom_symbols;
  j["steps"] = r.steps;
  j["baseline"] = r.baseline;
  j["aggregation"] = "l1";
  j["output"] = r.output;
  j["f_input"] = r.f_input;
  j["f_baseline"] = r.f_baseline;
  j["residual"] = r.residual;
  return j.dump(2) + "\n";
}

}  // namespace nestdrug::attr
