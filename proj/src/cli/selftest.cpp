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

#include <cmath>
#include <cstring>
#include <sstream>

#include "nestdrug/attribution.hpp"
#include "nestdrug/audit.hpp"
#include "nestdrug/cli.hpp"
#include "nestdrug/dmta.hpp"
#include "nestdrug/evalkit.hpp"
#include "nestdrug/model.hpp"
#include "nestdrug/molgraph.hpp"
#include "nestdrug/oracles.hpp"
#include "nestdrug/rng.hpp"

namespace nestdrug::cli {

namespace {

using tensor::Tensor;

Tensor random_param(Rng& rng, std::size_t r, std::size_t c) {
  std::vector<double> v(r * c);
  for (double& x : v) x = rng.uniform(-1, 1);
  return Tensor::param(r, c, std::move(v));
}

std::string worst(double v) {
  std::ostringstream os;
  os << "worst " << v;
  return os.str();
}

SelftestCheck gradients() {
  Rng rng(7);
  const auto a = random_param(rng, 3, 4);
  const auto b = random_param(rng, 4, 2);
  const std::size_t seg[] = {0, 0, 1};
  struct Case {
    const char* name;
    std::function<Tensor(const std::vector<Tensor>&)> f;
    std::vector<Tensor> in;
  };
  const std::vector<Case> cases = {
      {"matmul", [](const auto& x) { return tensor::matmul(x[0], x[1]); }, {a, b}},
      {"sigmoid", [](const auto& x) { return tensor::sigmoid(x[0]); }, {a}},
      {"tanh", [](const auto& x) { return tensor::tanh(x[0]); }, {a}},
      {"softmax", [](const auto& x) { return tensor::softmax(x[0]); }, {a}},
      {"segment_mean", [&](const auto& x) { return tensor::segment_mean(x[0], seg, 2); }, {a}},
      {"segment_max", [&](const auto& x) { return tensor::segment_max(x[0], seg, 2); }, {a}},
  };
  double w = 0;
  for (const auto& c : cases) {
    const auto r = oracle::grad_check(c.f, c.in);
    w = std::max(w, r.worst_rel_error);
    if (!r.ok) return {"finite-difference gradients", false, std::string(c.name) + ": " + r.detail};
  }
  return {"finite-difference gradients", true, worst(w)};
}

SelftestCheck auc_oracle() {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(8));  // coarse scores force ties
      y[i] = rng.bernoulli(0.4) ? 1 : 0;
    }
    y[0] = 1;
    y[1] = 0;
    if (eval::roc_auc(s, y) != oracle::pairwise_auc(s, y)) return {"roc_auc = pairwise oracle", false, "mismatch"};
    if (std::abs(eval::pr_auc(s, y) - oracle::threshold_pr_auc(s, y)) > 1e-12)
      return {"roc_auc = pairwise oracle", false, "pr_auc mismatch"};
  }
  return {"roc_auc = pairwise oracle, pr_auc = threshold oracle", true, "200 instances"};
}

SelftestCheck enrichment() {
  for (const auto& c : oracle::enrichment_cases())
    if (std::abs(eval::enrichment_factor(c.scores, c.labels, c.fraction) - c.expected) > 1e-12)
      return {"enrichment factor hand cases", false, c.name};
  return {"enrichment factor hand cases", true, ""};
}

SelftestCheck statistics() {
  const std::vector<double> d = {1, 2, 3, 4, 5};
  const auto t = eval::paired_t_test(d);
  if (std::abs(t.t - std::sqrt(18.0)) > 1e-12) return {"paired t and p quadrature", false, "t"};
  double w = 0;
  for (double tv : {0.3, 1.0, 2.5, 4.2426}) {
    for (double dof : {2.0, 4.0, 9.0, 30.0}) {
      w = std::max(w, std::abs(eval::student_t_two_sided_p(tv, dof) - oracle::t_two_sided_p_quadrature(tv, dof)));
    }
  }
  return {"paired t and p quadrature", w < 1e-6, worst(w)};
}

SelftestCheck total_variance() {
  eval::JointTable hand{1, 2, {1.0, -1.0}, std::vector<double>(4, 0.0)};
  hand.at(0, 0, 0) = 0.5;
  hand.at(0, 1, 1) = 0.5;
  if (eval::excess_risk_decomposition(hand).excess != 1.0) return {"excess risk = E[Var_c]", false, "hand case"};
  Rng rng(3);
  double w = 0;
  for (int k = 0; k < 20; ++k) {
    eval::JointTable t{3, 4, std::vector<double>(3), std::vector<double>(36)};
    for (double& y : t.y_values) y = rng.normal();
    double total = 0;
    for (double& p : t.prob) total += (p = rng.uniform());
    for (double& p : t.prob) p /= total;
    const auto r = eval::excess_risk_decomposition(t);
    w = std::max(w, std::abs(r.excess - r.variance_term));
  }
  return {"excess risk = E[Var_c]", w <= 1e-10, worst(w)};
}

SelftestCheck film_identity() {
  model::ModelConfig c;
  c.hidden = 16;
  c.mpnn_layers = 2;
  c.l1_dim = 8;
  c.l2_dim = 4;
  c.l3_dim = 4;
  c.n_programs = 4;
  c.n_assays = 3;
  c.n_rounds = 3;
  c.film_hidden = 8;
  c.head_hidden = {16, 8};
  const std::vector<std::string> smiles = {"CCO", "c1ccccc1O", "CC(=O)Nc1ccccc1", "N#CC(C)C"};
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    c.fusion = model::FusionVariant::FiLM;
    const model::NestModel film(c, seed);
    c.fusion = model::FusionVariant::None;
    const model::NestModel none(c, seed);
    for (const auto& s : smiles) {
      const auto m = mol::parse_smiles(s);
      for (int p = 0; p < 4; ++p) {
        const model::ContextTuple ctx{p, p % 3, (p + 1) % 3};
        const double a = film.predict(m, ctx, "activity");
        const double b = none.predict(m, ctx, "activity");
        if (std::memcmp(&a, &b, sizeof a) != 0) return {"FiLM is the identity at init", false, s};
      }
    }
  }
  return {"FiLM is the identity at init", true, ""};
}

SelftestCheck ig_linear() {
  Rng rng(5);
  std::vector<double> w(10), x(10), zero(10, 0.0);
  for (auto& v : w) v = rng.normal();
  for (auto& v : x) v = rng.normal();
  const attr::BatchGradient f = [&](const std::vector<std::vector<double>>& pts, std::vector<double>& v,
                                    std::vector<std::vector<double>>& g) {
    v.clear();
    g.assign(pts.size(), w);
    for (const auto& p : pts) {
      double s = 0;
      for (std::size_t i = 0; i < p.size(); ++i) s += w[i] * p[i];
      v.push_back(s);
    }
  };
  double err = 0;
  for (int steps : {8, 50}) {
    const auto r = attr::integrated_gradients(x, zero, steps, f);
    for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(r.attribution[i] - w[i] * x[i]));
  }
  return {"integrated gradients exact on linear model", err < 1e-12, worst(err)};
}

SelftestCheck dmta_oracle() {
  dmta::Campaign c;
  for (int i = 0; i < 100; ++i) {
    ActivityRecord r;
    r.smiles = "C";
    r.target_id = 1;
    r.label = (i % 5 < 2) ? 1 : 0;
    c.pool.records.push_back(r);
  }
  c.scorer = dmta::ScorerKind::Oracle;
  const auto r = dmta::replay_campaign(c);
  return {"oracle replay on 100/40 pool has enrichment 2.5", r.enrichment && *r.enrichment == 2.5, ""};
}

SelftestCheck leakage() {
  const std::vector<std::string> train = {"a", "b", "c"};
  const std::vector<std::string> actives = {"a", "x", "b", "y"};
  const std::vector<std::string> decoys = {"z"};
  const auto r = audit::leakage_report(train, actives, decoys);
  return {"leakage of a 50% overlap is 50%", r.active_leakage_pct == 50.0 && r.decoy_leakage_pct == 0.0, ""};
}

SelftestCheck canonical() {
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"OCC", "CCO"}, {"c1ccccc1C", "Cc1ccccc1"}, {"C(=O)(O)C", "CC(O)=O"}};
  for (const auto& [a, b] : pairs)
    if (mol::canonical_form(mol::parse_smiles(a)) != mol::canonical_form(mol::parse_smiles(b)))
      return {"canonical form ignores atom order", false, a};
  return {"canonical form ignores atom order", true, ""};
}

}  // namespace

std::vector<SelftestCheck> selftest() {
  std::vector<SelftestCheck> out;
  for (auto check : {gradients, auc_oracle, enrichment, statistics, total_variance, film_identity, ig_linear,
                     dmta_oracle, leakage, canonical}) {
    try {
      out.push_back(check());
    } catch (const std::exception& e) {
      out.push_back({"(check threw)", false, e.what()});
    }
  }
  return out;
}

}  // namespace nestdrug::cli
