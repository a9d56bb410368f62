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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.
// Usage: nestdrug_acceptance [criterion numbers...]   (default: all twelve)

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nestdrug/attribution.hpp"
#include "nestdrug/audit.hpp"
#include "nestdrug/cli.hpp"
#include "nestdrug/datasets.hpp"
#include "nestdrug/dmta.hpp"
#include "nestdrug/evalkit.hpp"
#include "nestdrug/oracles.hpp"
#include "nestdrug/protocols.hpp"
#include "nestdrug/report.hpp"
#include "nestdrug/rng.hpp"

namespace {

using namespace nestdrug;
using tensor::Tensor;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

constexpr int kSeeds = 5;

// ---------------------------------------------------------------- 1
Tensor random_param(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(r * c);
  for (double& x : v) x = rng.uniform(lo, hi);
  return Tensor::param(r, c, std::move(v));
}

model::ModelConfig tiny_config(model::FusionVariant v) {
  model::ModelConfig c;
  c.hidden = 8;
  c.mpnn_layers = 2;
  c.l1_dim = 4;
  c.l2_dim = 3;
  c.l3_dim = 2;
  c.n_programs = 4;
  c.n_assays = 3;
  c.n_rounds = 3;
  c.film_hidden = 6;
  c.head_hidden = {8, 4};
  c.dropout = 0;
  c.fusion = v;
  return c;
}

Outcome autodiff() {
  using F = std::function<Tensor(const std::vector<Tensor>&)>;
  Rng rng(2024);
  std::size_t checks = 0;
  double worst = 0;
  std::string failure;
  auto check = [&](const F& f, const std::vector<Tensor>& in, const std::string& what, double atol = 1e-5) {
    const auto r = oracle::grad_check(f, in, 1e-4, 1e-3, atol);
    ++checks;
    worst = std::max(worst, r.worst_rel_error);
    if (!r.ok && failure.empty()) failure = what + ": " + r.detail;
  };
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t r = 1 + rng.below(4), k = 1 + rng.below(4), c = 1 + rng.below(4);
    const auto a = random_param(rng, r, k), b = random_param(rng, k, c), same = random_param(rng, r, k);
    const auto row = random_param(rng, 1, k), col = random_param(rng, r, 1);
    const auto positive = random_param(rng, r, k, 0.5, 2.0);
    check([](auto& x) { return tensor::matmul(x[0], x[1]); }, {a, b}, "matmul");
    check([](auto& x) { return tensor::matmul_nt(x[0], x[1]); }, {a, same}, "matmul_nt");
    check([](auto& x) { return tensor::add(x[0], x[1]); }, {a, row}, "add");
    check([](auto& x) { return tensor::sub(x[0], x[1]); }, {a, col}, "sub");
    check([](auto& x) { return tensor::mul(x[0], x[1]); }, {a, same}, "mul");
    check([](auto& x) { return tensor::div(x[0], x[1]); }, {a, positive}, "div");
    check([](auto& x) { return tensor::neg(tensor::scale(tensor::add_scalar(x[0], 0.3), -1.7)); }, {a}, "scale");
    check([](auto& x) { return tensor::concat({x[0], x[1]}, 0); }, {a, same}, "concat0");
    check([](auto& x) { return tensor::concat({x[0], x[1]}, 1); }, {a, col}, "concat1");
    check([k](auto& x) { return tensor::slice(x[0], 1, k / 2, k - k / 2); }, {a}, "slice");
    for (int axis : {-1, 0, 1}) {
      check([axis](auto& x) { return tensor::sum(x[0], axis); }, {a}, "sum");
      check([axis](auto& x) { return tensor::mean(x[0], axis); }, {a}, "mean");
      check([axis](auto& x) { return tensor::max(x[0], axis); }, {a}, "max");
    }
    check([](auto& x) { return tensor::sigmoid(x[0]); }, {a}, "sigmoid");
    check([](auto& x) { return tensor::tanh(x[0]); }, {a}, "tanh");
    check([](auto& x) { return tensor::relu(x[0]); }, {a}, "relu");
    check([](auto& x) { return tensor::exp(x[0]); }, {a}, "exp");
    check([](auto& x) { return tensor::log(x[0]); }, {positive}, "log");
    check([](auto& x) { return tensor::sqrt(x[0]); }, {positive}, "sqrt");
    check([](auto& x) { return tensor::square(x[0]); }, {a}, "square");
    check([](auto& x) { return tensor::softmax(x[0]); }, {a}, "softmax");
    const std::uint64_t mask_seed = rng.next_u64();
    check([mask_seed](auto& x) {
      Rng mask(mask_seed);  // same mask on every evaluation
      return tensor::dropout(x[0], 0.3, mask);
    }, {a}, "dropout");
    std::vector<std::size_t> idx(r + 2);
    for (auto& i : idx) i = rng.below(r);
    check([idx](auto& x) { return tensor::gather_rows(x[0], idx); }, {a}, "gather_rows");
    std::vector<std::size_t> seg(r);
    const std::size_t nseg = 1 + rng.below(r);
    for (std::size_t i = 0; i < r; ++i) seg[i] = i < nseg ? i : rng.below(nseg);
    check([seg, nseg](auto& x) { return tensor::scatter_add_rows(x[0], seg, nseg + 1); }, {a}, "scatter_add_rows");
    check([seg, nseg](auto& x) { return tensor::segment_mean(x[0], seg, nseg); }, {a}, "segment_mean");
    check([seg, nseg](auto& x) { return tensor::segment_max(x[0], seg, nseg); }, {a}, "segment_max");
    std::vector<double> y(r * k), w(r * k);
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = static_cast<double>(rng.below(2));
      w[i] = rng.uniform(0.5, 2.0);
    }
    check([y, w](auto& x) { return tensor::bce_with_logits(x[0], y, w); }, {a}, "bce_with_logits");
    check([y](auto& x) { return tensor::mse(x[0], y); }, {a}, "mse");
  }

  // End to end: MPNN + FiLM loss on a three-atom molecule, every parameter perturbed.
  model::NestModel m(tiny_config(model::FusionVariant::FiLM), 17);
  Rng perturb(18);
  for (const auto& p : m.params()) {
    Tensor t = p.value;
    for (double& v : t.mutable_data()) v += 0.3 * perturb.uniform(-1, 1);
  }
  const auto batch = model::make_batch(mol::parse_smiles("CCO"));
  const model::ContextTuple ctx[] = {{2, 1, 1}};
  std::vector<Tensor> params;
  std::size_t n_values = 0;
  for (const auto& p : m.params()) {
    params.push_back(p.value);
    n_values += p.value.size();
  }
  const double y[] = {1.0}, w[] = {1.0};
  check([&](const std::vector<Tensor>&) { return tensor::bce_with_logits(m.forward(batch, ctx, 0), y, w); }, params,
        "MPNN+FiLM end to end", 1e-7);
  return {failure.empty(), failure.empty() ? fmt("%zu checks incl. end-to-end over %zu parameters, worst rel err %.2e",
                                                 checks, n_values, worst)
                                           : failure};
}

// ---------------------------------------------------------------- 2
Outcome film_identity() {
  model::ModelConfig c = protocol::desk_protocol_config(1).model;
  std::size_t compared = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(derive_seed(seed, "identity-inputs"));
    std::vector<mol::MolGraph> mols;
    std::vector<model::ContextTuple> ctx;
    for (int i = 0; i < 20; ++i) {
      mols.push_back(mol::parse_smiles(synth_molecule(static_cast<std::uint32_t>(rng.below(64)), rng.next_u64())));
      ctx.push_back({static_cast<int>(rng.below(c.n_programs)), static_cast<int>(rng.below(c.n_assays)),
                     static_cast<int>(rng.below(c.n_rounds))});
    }
    std::vector<const mol::MolGraph*> ptrs;
    for (const auto& m : mols) ptrs.push_back(&m);
    const auto batch = model::make_batch(ptrs);
    c.fusion = model::FusionVariant::FiLM;
    const model::NestModel film(c, seed);
    c.fusion = model::FusionVariant::None;
    const model::NestModel none(c, seed);
    const auto a = film.forward(batch, ctx, 0);
    const auto b = none.forward(batch, ctx, 0);
    if (a.size() != b.size() || std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) != 0)
      return {false, fmt("seed %llu: FiLM and None predictions differ", static_cast<unsigned long long>(seed))};
    compared += a.size();
  }
  return {true, fmt("%zu predictions bitwise equal over 100 init seeds", compared)};
}

// ---------------------------------------------------------------- 3
Outcome metric_oracles() {
  Rng rng(33);
  double worst_pr = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(199);
    const int levels = 2 + static_cast<int>(rng.below(20));  // few distinct scores, many ties
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(static_cast<std::uint64_t>(levels))) / levels;
      y[i] = rng.bernoulli(0.35) ? 1 : 0;
    }
    const std::size_t pos = rng.below(n);
    y[pos] = 1;
    y[(pos + 1 + rng.below(n - 1)) % n] = 0;  // both classes present
    const double auc = eval::roc_auc(s, y), oracle_auc = oracle::pairwise_auc(s, y);
    if (auc != oracle_auc) return {false, fmt("trial %d: roc_auc %.17g vs pairwise %.17g", trial, auc, oracle_auc)};
    worst_pr = std::max(worst_pr, std::abs(eval::pr_auc(s, y) - oracle::threshold_pr_auc(s, y)));
  }
  if (worst_pr > 1e-12) return {false, fmt("pr_auc deviates by %.3e", worst_pr)};
  const auto cases = oracle::enrichment_cases();
  for (const auto& c : cases) {
    const double ef = eval::enrichment_factor(c.scores, c.labels, c.fraction);
    if (std::abs(ef - c.expected) > 1e-12) return {false, c.name + fmt(": EF %.6g vs %.6g", ef, c.expected)};
  }
  return {true, fmt("1000 AUC instances exact, PR-AUC worst %.1e, %zu EF cases", worst_pr, cases.size())};
}

// ---------------------------------------------------------------- 4
Outcome total_variance() {
  eval::JointTable hand{1, 2, {1.0, -1.0}, std::vector<double>(4, 0.0)};
  hand.at(0, 0, 0) = 0.5;
  hand.at(0, 1, 1) = 0.5;
  const auto h = eval::excess_risk_decomposition(hand);
  if (std::abs(h.excess - 1.0) > 1e-10 || std::abs(h.variance_term - 1.0) > 1e-10)
    return {false, fmt("hand case: excess %.6g, variance %.6g", h.excess, h.variance_term)};
  Rng rng(44);
  double worst = 0;
  for (int k = 0; k < 20; ++k) {
    const std::size_t g = 1 + rng.below(6), c = 1 + rng.below(6), ny = 2 + rng.below(4);
    eval::JointTable t{g, c, std::vector<double>(ny), std::vector<double>(g * c * ny)};
    for (double& y : t.y_values) y = rng.normal();
    double total = 0;
    for (double& p : t.prob) total += (p = rng.uniform());
    for (double& p : t.prob) p /= total;
    const auto r = eval::excess_risk_decomposition(t);
    worst = std::max(worst, std::abs(r.excess - r.variance_term));
  }
  return {worst <= 1e-10, fmt("hand case excess 1, 20 random tables worst |excess - E[Var]| %.1e", worst)};
}

// ---------------------------------------------------------------- 5
fp::Fingerprint random_fp(Rng& rng, int lo, int hi, double p) {
  fp::Fingerprint f(2048, 2);
  for (int b = lo; b < hi; ++b)
    if (rng.bernoulli(p)) f.set(b);
  return f;
}

Outcome audit_exactness() {
  // 50% overlap through the full audit path: half the eval actives are training molecules.
  SynthConfig sc;
  sc.n_targets = 1;
  sc.n_per_target = 200;
  const Dataset pool = synth_structured_shift(sc).dataset;
  Dataset train, evald;
  std::size_t copied = 0, fresh = 0;
  std::set<std::string> train_forms;
  for (std::size_t i = 0; i < 100; ++i) {
    train.records.push_back(pool.records[i]);
    train_forms.insert(pool.records[i].canonical);
  }
  for (std::size_t i = 0; i < 40; ++i) {
    auto r = pool.records[i];
    r.label = 1;
    evald.records.push_back(r);
    ++copied;
  }
  for (std::size_t i = 100; i < pool.size() && fresh < copied; ++i) {
    if (train_forms.count(pool.records[i].canonical)) continue;
    auto r = pool.records[i];
    r.label = 1;
    evald.records.push_back(r);
    ++fresh;
  }
  const auto report = audit::run_audit(train, evald, {});
  const double pct = report.rows.at(0).any_level.active_leakage_pct;
  if (pct != 50.0) return {false, fmt("constructed 50%% overlap reported %.17g%%", pct)};

  Rng rng(55);
  std::vector<fp::Fingerprint> tr, decoys;
  for (int i = 0; i < 40; ++i) tr.push_back(random_fp(rng, 0, 1024, 0.1));
  for (int i = 0; i < 60; ++i) decoys.push_back(random_fp(rng, 1024, 2048, 0.1));
  const std::vector<fp::Fingerprint> actives(tr.begin(), tr.begin() + 20);
  const auto leaky = audit::structural_bias_audit(tr, actives, decoys);
  if (leaky.one_nn_auc != 1.0 || leaky.gap != 1.0)
    return {false, fmt("leaky benchmark: 1-NN AUC %.6g, gap %.6g", leaky.one_nn_auc, leaky.gap)};

  double mean = 0;
  for (int t = 0; t < 20; ++t) {
    std::vector<fp::Fingerprint> ntr, na, nd;
    for (int i = 0; i < 50; ++i) ntr.push_back(random_fp(rng, 0, 2048, 0.05));
    for (int i = 0; i < 500; ++i) na.push_back(random_fp(rng, 0, 2048, 0.05));
    for (int i = 0; i < 500; ++i) nd.push_back(random_fp(rng, 0, 2048, 0.05));
    mean += audit::structural_bias_audit(ntr, na, nd).one_nn_auc / 20;
  }
  const bool ok = std::abs(mean - 0.5) <= 0.05;
  return {ok, fmt("overlap 50.0%% exactly; leaky AUC 1.0, gap 1.0; random null AUC %.4f", mean)};
}

// ---------------------------------------------------------------- 6, 7, 10 share these runs
Dataset synth_dataset(double shift, std::uint64_t seed) {
  SynthConfig sc;
  sc.n_targets = 4;
  sc.n_per_target = 500;
  sc.shift_strength = shift;
  sc.seed = seed;
  return synth_structured_shift(sc).dataset;
}

struct ShiftRuns {
  std::vector<protocol::PreparedRun> runs;
  std::vector<protocol::ProtocolConfig> configs;
};

std::map<int, ShiftRuns> g_runs;  // key: shift in tenths

const ShiftRuns& shift_runs(double shift) {
  const int key = static_cast<int>(std::lround(shift * 10));
  auto it = g_runs.find(key);
  if (it != g_runs.end()) return it->second;
  ShiftRuns s;
  for (int k = 1; k <= kSeeds; ++k) {
    const auto seed = static_cast<std::uint64_t>(k);
    s.configs.push_back(protocol::desk_protocol_config(seed));
    s.runs.push_back(protocol::prepare(synth_dataset(shift, seed), s.configs.back()));
  }
  return g_runs.emplace(key, std::move(s)).first->second;
}

Outcome l1_ablation() {
  std::vector<double> correct8, generic8, correct0, generic0;
  for (double shift : {0.8, 0.0}) {
    const auto& s = shift_runs(shift);
    for (int k = 0; k < kSeeds; ++k) {
      const auto a = protocol::context_ablation(s.runs[k], protocol::Level::L1, s.configs[k]);
      (shift > 0 ? correct8 : correct0).push_back(a.mean_correct);
      (shift > 0 ? generic8 : generic0).push_back(a.mean_generic);
    }
  }
  const auto shifted = protocol::compare_over_seeds(correct8, generic8, 2);
  const auto flat = protocol::compare_over_seeds(correct0, generic0, 2);
  const bool ok = shifted.mean_delta >= 0.05 && shifted.test.p_bonferroni < 0.05 && std::abs(flat.mean_delta) <= 0.01;
  return {ok, fmt("s=0.8: correct %.4f vs generic %.4f, delta %+.2f pp, p_bonf %.2e; s=0: delta %+.2f pp",
                  shifted.mean_a, shifted.mean_b, 100 * shifted.mean_delta, shifted.test.p_bonferroni,
                  100 * flat.mean_delta)};
}

Outcome fusion_ordering() {
  using model::FusionVariant;
  const std::vector<FusionVariant> variants = {FusionVariant::FiLM, FusionVariant::Additive, FusionVariant::None,
                                               FusionVariant::ConcatFrozen};
  std::vector<double> mean(variants.size(), 0.0);
  const auto& s = shift_runs(0.8);
  for (int k = 0; k < kSeeds; ++k) {
    const auto r = protocol::fusion_sweep(s.runs[k], variants, s.configs[k]);
    for (std::size_t v = 0; v < variants.size(); ++v) mean[v] += r[v].aucs.mean / kSeeds;
  }
  // A pair (hi >= lo) is violated only when lo exceeds hi by more than 1 pp.
  auto holds = [&](std::size_t hi, std::size_t lo) { return mean[lo] - mean[hi] <= 0.01; };
  const bool film_add = holds(0, 1), add_none = holds(1, 2), none_concat = holds(2, 3);
  std::string detail = fmt("FiLM %.4f, Additive %.4f, None %.4f, ConcatFrozen %.4f", mean[0], mean[1], mean[2],
                           mean[3]);
  if (!film_add) detail += "; Additive > FiLM";
  if (!add_none) detail += "; None > Additive";
  if (!none_concat) detail += "; ConcatFrozen > None";
  return {film_add && add_none && none_concat, detail};
}

// ---------------------------------------------------------------- 8
Outcome scarcity() {
  std::vector<double> mt, rfs;
  std::string per_seed;
  for (int k = 1; k <= kSeeds; ++k) {
    const auto seed = static_cast<std::uint64_t>(k);
    rf::ForestConfig forest;
    forest.seed = derive_seed(seed, "scarce-forest");
    const auto r = protocol::scarcity_transfer(synth_dataset(0.0, seed), 1, 30, protocol::desk_protocol_config(seed),
                                               forest);
    mt.push_back(r.multitask_auc);
    rfs.push_back(r.rf_auc);
    per_seed += fmt("%s%+.1f", per_seed.empty() ? "" : " ", 100 * r.delta);
  }
  const auto c = protocol::compare_over_seeds(mt, rfs, 1);
  return {c.mean_delta >= 0.10, fmt("multi-task FiLM %.4f vs RF %.4f on 30 rows, delta %+.2f pp (per seed: %s)",
                                    c.mean_a, c.mean_b, 100 * c.mean_delta, per_seed.c_str())};
}

// ---------------------------------------------------------------- 9
dmta::Campaign label_campaign(const std::vector<int>& labels, dmta::ScorerKind k) {
  dmta::Campaign c;
  for (int y : labels) {
    ActivityRecord r;
    r.smiles = "C";
    r.target_id = 1;
    r.label = y;
    c.pool.records.push_back(r);
  }
  c.scorer = k;
  return c;
}

Outcome dmta_replay() {
  std::vector<int> y(100, 0);
  for (int i = 0; i < 40; ++i) y[static_cast<std::size_t>(99 - 2 * i)] = 1;
  const auto oracle = dmta::replay_campaign(label_campaign(y, dmta::ScorerKind::Oracle));
  if (!oracle.enrichment || *oracle.enrichment != 2.5)
    return {false, fmt("oracle enrichment %.17g", oracle.enrichment.value_or(-1))};

  auto rc = label_campaign(y, dmta::ScorerKind::Random);
  double mean = 0;
  for (int t = 0; t < 1000; ++t) {
    rc.seed = static_cast<std::uint64_t>(t + 1);
    mean += *dmta::replay_campaign(rc).enrichment / 1000.0;
  }
  if (std::abs(mean - 1.0) > 0.05) return {false, fmt("random enrichment %.4f", mean)};

  SynthConfig sc;
  sc.n_targets = 1;
  sc.n_per_target = 60;
  std::size_t comparisons = 0;
  for (int trial = 0; trial < 50; ++trial) {
    sc.seed = static_cast<std::uint64_t>(trial + 1);
    Rng rng(static_cast<std::uint64_t>(500 + trial));
    dmta::Campaign c;
    c.pool = synth_structured_shift(sc).dataset;
    c.rounds = 1 + static_cast<int>(rng.below(4));
    c.select_fraction = rng.uniform(0.05, 0.6);
    c.seed = static_cast<std::uint64_t>(trial);
    c.scorer = dmta::ScorerKind::Oracle;
    const auto best = dmta::replay_campaign(c);
    c.known_actives = {fp::morgan_fingerprint(mol::parse_smiles(c.pool.records[0].smiles))};
    const std::uint64_t noise_seed = rng.next_u64();
    const dmta::Scorer adversary = [&](const dmta::ReplayState& s) {
      Rng r(derive_seed(noise_seed, "adversary", static_cast<std::uint64_t>(s.round)));
      std::vector<double> out;
      for (auto row : s.remaining) out.push_back(r.uniform() + (row % 3 == 0 ? 1.0 : 0.0));
      return out;
    };
    std::vector<dmta::CampaignResult> others;
    for (auto k : {dmta::ScorerKind::Random, dmta::ScorerKind::FingerprintNN}) {
      c.scorer = k;
      others.push_back(dmta::replay_campaign(c));
    }
    others.push_back(dmta::replay_campaign(c, adversary));
    for (const auto& r : others) {
      for (std::size_t i = 0; i < r.rounds.size(); ++i) {
        ++comparisons;
        if (r.cumulative_hits[i] > best.cumulative_hits[i])
          return {false, fmt("campaign %d round %zu: %s beats oracle", trial, i, std::string(to_string(r.scorer)).c_str())};
      }
    }
  }
  return {true, fmt("oracle EF 2.5 exactly; random mean EF %.4f over 1000; %zu round comparisons, none above oracle",
                    mean, comparisons)};
}

// ---------------------------------------------------------------- 10
Outcome integrated_gradients() {
  Rng rng(101);
  double worst_linear = 0;
  for (int steps : {8, 9, 13, 50, 64, 300, 1000}) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<double> w(n), x(n), base(n);
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = rng.normal();
      x[i] = rng.normal();
      base[i] = rng.bernoulli(0.5) ? 0.0 : rng.normal();
    }
    const attr::BatchGradient f = [&](const std::vector<std::vector<double>>& pts, std::vector<double>& v,
                                      std::vector<std::vector<double>>& g) {
      v.clear();
      g.assign(pts.size(), w);
      for (const auto& p : pts) {
        double s = 0.25;
        for (std::size_t i = 0; i < n; ++i) s += w[i] * p[i];
        v.push_back(s);
      }
    };
    const auto r = attr::integrated_gradients(x, base, steps, f);
    for (std::size_t i = 0; i < n; ++i) {
      const double exact = w[i] * (x[i] - base[i]);
      worst_linear = std::max(worst_linear, std::abs(r.attribution[i] - exact) / (1 + std::abs(exact)));
    }
  }
  if (worst_linear > 1e-12) return {false, fmt("linear surrogate error %.2e", worst_linear)};

  const auto& s = shift_runs(0.8);
  const auto& run = s.runs[0];
  const auto film = protocol::finetune_variant(run, model::FusionVariant::FiLM, protocol::Level::L1, s.configs[0]);
  double worst_ratio = 0;
  std::size_t n_mols = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const model::ContextTuple ctx{run.test.contexts[i].program, 0, 0};
    const auto r = attr::integrated_gradients(film, run.test.mols[i], ctx, 300);
    const double allowed = 0.02 * std::abs(r.f_input - r.f_baseline) + 1e-4;
    worst_ratio = std::max(worst_ratio, r.residual / allowed);
    ++n_mols;
  }
  if (worst_ratio > 1.0) return {false, fmt("completeness residual at %.2fx the allowed bound", worst_ratio)};

  const auto none = protocol::finetune_variant(run, model::FusionVariant::None, protocol::Level::L1, s.configs[0]);
  const std::vector<model::ContextTuple> contexts = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {4, 0, 0}};
  for (std::size_t i = 0; i < 5; ++i) {
    const auto sim = attr::attribution_similarity(none, run.test.mols[i], contexts, attr::kDefaultSteps);
    for (const auto& row : sim)
      for (double v : row)
        if (v != 1.0) return {false, fmt("None variant cosine %.17g", v)};
  }
  return {true, fmt("linear exact (worst %.1e); residual <= %.0f%% of bound on %zu molecules at 300 steps; "
                    "None cosine 1.0 exactly",
                    worst_linear, 100 * worst_ratio, n_mols)};
}

// ---------------------------------------------------------------- 11
Outcome statistics() {
  const std::vector<double> d = {1, 2, 3, 4, 5};
  const auto t = eval::paired_t_test(d);
  if (std::abs(t.t - 4.2426) > 5e-5) return {false, fmt("t = %.6f", t.t)};
  double worst = 0;
  Rng rng(111);
  for (int k = 0; k < 200; ++k) {
    const double tv = rng.uniform(0, 8), dof = 1 + static_cast<double>(rng.below(40));
    worst = std::max(worst, std::abs(eval::student_t_two_sided_p(tv, dof) - oracle::t_two_sided_p_quadrature(tv, dof)));
  }
  if (worst > 1e-6) return {false, fmt("p-value deviates from quadrature by %.2e", worst)};
  for (int k = 0; k < 1000; ++k) {
    const double p = rng.uniform(), q = rng.uniform();
    const int m = 1 + static_cast<int>(rng.below(50));
    const double b = eval::bonferroni(p, m);
    const bool ok = b >= p && b <= 1.0 && eval::bonferroni(p, m + 1) >= b &&
                    (p <= q ? eval::bonferroni(q, m) >= b : eval::bonferroni(q, m) <= b);
    if (!ok) return {false, fmt("Bonferroni not monotone at p=%.6f m=%d", p, m)};
  }
  return {true, fmt("t = %.4f; 200 p-values within %.1e of quadrature; Bonferroni monotone on 1000 pairs", t.t, worst)};
}

// ---------------------------------------------------------------- 12
struct CliCall {
  std::string name;
  std::vector<std::string> args;
  int expected = 0;
};

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "nestdrug_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root);
  const auto p = [&](const std::string& s) { return (root / s).string(); };
  const std::string data = p("synth/dataset.csv");
  const std::vector<CliCall> calls = {
      {"synth", {"synth", "--out", p("synth"), "--seed", "4", "--set", "n_targets=3", "n_per_target=80"}, 0},
      {"ingest", {"ingest", "--input", data, "--out", p("ingest")}, 0},
      {"featurize", {"featurize", "--data", p("ingest/dataset.jsonl"), "--out", p("featurize")}, 0},
      {"fp", {"fp", "--data", data, "--out", p("fp"), "--nbits", "1024"}, 0},
      {"audit", {"audit", "--train", data, "--eval", data, "--out", p("audit"), "--cross-target", "--set",
                 "forest.n_trees=25"}, 2},
      {"pretrain", {"train", "--data", data, "--phase", "pretrain", "--out", p("pretrain"), "--set",
                    "pretrain.epochs=2"}, 0},
      {"finetune", {"train", "--data", data, "--phase", "finetune", "--init", p("pretrain/model.ndck"), "--out",
                    p("finetune"), "--set", "finetune.epochs=3"}, 0},
      {"continual", {"train", "--data", data, "--phase", "continual", "--init", p("finetune/model.ndck"), "--out",
                     p("continual")}, 0},
      {"eval", {"eval", "--model", p("finetune/model.ndck"), "--data", data, "--out", p("eval"), "--set", "folds=3"}, 0},
      {"ablate", {"ablate", "--data", data, "--levels", "l1,l2", "--variants", "film,none", "--out", p("ablate"),
                  "--set", "pretrain.epochs=1", "finetune.epochs=3"}, 0},
      {"fewshot", {"fewshot", "--data", data, "--target", "2", "--shots", "1,5", "--steps", "10", "--out",
                   p("fewshot"), "--set", "pretrain.epochs=1", "finetune.epochs=2"}, 0},
      {"replay-random", {"replay", "--pool", data, "--scorer", "random", "--out", p("replay_random"), "--set",
                         "rounds=3"}, 0},
      {"replay-fp", {"replay", "--pool", data, "--known", data, "--scorer", "fingerprint-nn", "--out", p("replay_fp"),
                     "--set", "rounds=3"}, 0},
      {"replay-model", {"replay", "--pool", data, "--model", p("finetune/model.ndck"), "--scorer", "model", "--out",
                        p("replay_model"), "--set", "rounds=2"}, 0},
      {"attribute", {"attribute", "--model", p("finetune/model.ndck"), "--data", data, "--contexts", "1,0,0;2,1,1",
                     "--steps", "16", "--out", p("attribute"), "--set", "max_molecules=4"}, 0},
      {"report", {"report", "--results", p("ablate"), "--out", p("report")}, 0},
  };
  std::ostringstream sink;
  std::size_t files = 0;
  for (const auto& c : calls) {
    std::vector<std::string> args = {"nestdrug"};
    args.insert(args.end(), c.args.begin(), c.args.end());
    const int code = cli::run(args, sink, sink);
    if (code != c.expected) return {false, c.name + fmt(": exit %d, expected %d", code, c.expected)};
  }
  for (const auto& c : calls) {
    const std::string dir = c.args[std::find(c.args.begin(), c.args.end(), "--out") - c.args.begin() + 1];
    std::ostringstream out;
    const int code = cli::run({"nestdrug", "rerun", "--manifest", dir + "/manifest.json", "--out", dir + "_rerun",
                               "--threads", "1", "--verify"},
                              out, sink);
    if (code != c.expected) return {false, c.name + fmt(": re-run exit %d\n", code) + out.str()};
    const std::string text = out.str();
    if (text.find("DIFFERENT") != std::string::npos) return {false, c.name + ": " + text};
    for (std::size_t at = text.find("identical"); at != std::string::npos; at = text.find("identical", at + 1)) ++files;
  }
  return {true, fmt("%zu commands re-run single-threaded from their manifests, %zu primary outputs byte-identical",
                    calls.size(), files)};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*fn)();
  };
  const std::vector<Criterion> all = {
      {1, "autodiff gradient checks", autodiff},
      {2, "FiLM identity at initialization", film_identity},
      {3, "metric oracles", metric_oracles},
      {4, "excess risk = law of total variance", total_variance},
      {5, "audit exactness", audit_exactness},
      {6, "directional L1 ablation", l1_ablation},
      {7, "fusion ordering", fusion_ordering},
      {8, "data-scarcity transfer", scarcity},
      {9, "DMTA replay", dmta_replay},
      {10, "integrated gradients", integrated_gradients},
      {11, "statistics", statistics},
      {12, "CLI determinism from manifests", determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int run = 0, passed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    ++run;
    passed += o.pass ? 1 : 0;
    std::printf("%s  %2d  %-36s %s  [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("acceptance: %d/%d criteria passed\n", passed, run);
  return passed == run ? 0 : 1;
}
