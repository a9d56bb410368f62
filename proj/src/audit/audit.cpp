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

#include "nestdrug/audit.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "nestdrug/errors.hpp"
#include "nestdrug/evalkit.hpp"

namespace nestdrug::audit {

namespace {

double pct(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::exception_ptr error;
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

struct Prepared {
  std::vector<std::string> canonical;
  std::vector<fp::Fingerprint> fps;
};

Prepared prepare(const Dataset& d, const AuditConfig& c) {
  Prepared p;
  p.canonical.resize(d.records.size());
  p.fps.resize(d.records.size());
  parallel_for(d.records.size(), [&](std::size_t i) {
    const auto m = mol::parse_smiles(d.records[i].smiles);
    p.canonical[i] = mol::canonical_form(m, {c.strip_stereo}).text;
    p.fps[i] = fp::morgan_fingerprint(m, c.radius, c.nbits);
  });
  return p;
}

}  // namespace

LeakageResult leakage_report(std::span<const std::string> train, std::span<const std::string> eval_actives,
                             std::span<const std::string> eval_decoys) {
  require(!train.empty(), ErrorKind::EmptySet, "training set is empty");
  require(!eval_actives.empty() || !eval_decoys.empty(), ErrorKind::EmptySet, "evaluation sets are empty");
  const std::unordered_set<std::string> seen(train.begin(), train.end());
  LeakageResult r;
  for (std::size_t i = 0; i < eval_actives.size(); ++i)
    if (seen.contains(eval_actives[i])) r.leaked_actives.push_back(i);
  for (std::size_t i = 0; i < eval_decoys.size(); ++i)
    if (seen.contains(eval_decoys[i])) r.leaked_decoys.push_back(i);
  r.active_leakage_pct = pct(r.leaked_actives.size(), eval_actives.size());
  r.decoy_leakage_pct = pct(r.leaked_decoys.size(), eval_decoys.size());
  return r;
}

StructuralBias structural_bias_audit(std::span<const fp::Fingerprint> train_actives,
                                     std::span<const fp::Fingerprint> test_actives,
                                     std::span<const fp::Fingerprint> test_decoys) {
  require(!train_actives.empty(), ErrorKind::EmptySet, "no training actives");
  require(!test_actives.empty(), ErrorKind::EmptySet, "no test actives");
  require(!test_decoys.empty(), ErrorKind::EmptySet, "no test decoys");
  const auto a = fp::one_nn_scores(train_actives, test_actives);
  const auto d = fp::one_nn_scores(train_actives, test_decoys);
  std::vector<double> scores(a);
  scores.insert(scores.end(), d.begin(), d.end());
  std::vector<int> labels(a.size(), 1);
  labels.resize(scores.size(), 0);
  StructuralBias b;
  b.one_nn_auc = eval::roc_auc(scores, labels);
  b.aa_sim = mean_of(a);
  b.da_sim = mean_of(d);
  b.gap = b.aa_sim - b.da_sim;
  return b;
}

double CrossTargetMatrix::off_diagonal_mean() const {
  double s = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < auc.size(); ++i)
    for (std::size_t j = 0; j < auc[i].size(); ++j)
      if (i != j) {
        s += auc[i][j];
        ++n;
      }
  return n == 0 ? 0.0 : s / static_cast<double>(n);
}

CrossTargetMatrix cross_target_transfer_audit(const Dataset& dataset, std::span<const int> targets,
                                              const rf::RfExperimentConfig& config) {
  require(targets.size() >= 2, ErrorKind::Parameter, "cross-target audit needs at least two targets");
  struct Split {
    std::vector<fp::Fingerprint> train_fp, test_fp;
    std::vector<int> train_y, test_y;
  };
  std::vector<Split> splits(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < dataset.records.size(); ++i)
      if (dataset.records[i].target_id == targets[t] && dataset.records[i].label) rows.push_back(i);
    require(!rows.empty(), ErrorKind::InsufficientData,
            "target " + std::to_string(targets[t]) + " has no labelled records");
    const Dataset sub = dataset.subset(rows);
    const auto fps = rf::fingerprints(sub, config.radius, config.nbits);
    const auto labels = sub.labels();
    const auto plan = eval::stratified_kfold(labels, config.folds, config.split_seed);
    auto& s = splits[t];
    for (std::size_t r : plan.train_rows(config.test_fold)) {
      s.train_fp.push_back(fps[r]);
      s.train_y.push_back(labels[r]);
    }
    for (std::size_t r : plan.test_rows(config.test_fold)) {
      s.test_fp.push_back(fps[r]);
      s.test_y.push_back(labels[r]);
    }
    const auto actives = static_cast<std::size_t>(std::count(s.train_y.begin(), s.train_y.end(), 1));
    require(actives >= static_cast<std::size_t>(config.min_train_actives), ErrorKind::InsufficientData,
            "target " + std::to_string(targets[t]) + " has " + std::to_string(actives) + " training actives, " +
                std::to_string(config.min_train_actives) + " required");
  }
  CrossTargetMatrix m;
  m.targets.assign(targets.begin(), targets.end());
  m.auc.assign(targets.size(), std::vector<double>(targets.size(), 0.0));
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto forest = rf::fit_forest(rf::BitMatrix::from_fingerprints(splits[i].train_fp), splits[i].train_y,
                                       config.forest);
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const auto p = rf::predict_proba(forest, rf::BitMatrix::from_fingerprints(splits[j].test_fp));
      m.auc[i][j] = eval::roc_auc(p, splits[j].test_y);
    }
  }
  return m;
}

double AuditReport::max_active_leakage_pct() const {
  double m = 0;
  for (const auto& r : rows) m = std::max(m, r.any_level.active_leakage_pct);
  return m;
}

AuditReport run_audit(const Dataset& train, const Dataset& eval, const AuditConfig& config) {
  require(config.leakage_threshold_pct >= 0 && config.leakage_threshold_pct <= 100, ErrorKind::Config,
          "leakage threshold must lie in [0, 100]");
  require(!train.records.empty(), ErrorKind::EmptySet, "training dataset is empty");
  require(!eval.records.empty(), ErrorKind::EmptySet, "evaluation dataset is empty");
  const Prepared tp = prepare(train, config);
  const Prepared ep = prepare(eval, config);

  std::set<int> targets;
  for (const auto& r : eval.records)
    if (r.label) targets.insert(r.target_id);
  require(!targets.empty(), ErrorKind::EmptySet, "evaluation dataset has no labelled records");

  AuditReport report;
  report.config = config;
  for (const int t : targets) {
    std::vector<std::string> train_any, train_act, eval_act, eval_dec;
    std::vector<fp::Fingerprint> fp_train_act, fp_eval_act, fp_eval_dec;
    for (std::size_t i = 0; i < train.records.size(); ++i) {
      const auto& r = train.records[i];
      if (r.target_id != t) continue;
      train_any.push_back(tp.canonical[i]);
      if (r.label == 1) {
        train_act.push_back(tp.canonical[i]);
        fp_train_act.push_back(tp.fps[i]);
      }
    }
    for (std::size_t i = 0; i < eval.records.size(); ++i) {
      const auto& r = eval.records[i];
      if (r.target_id != t || !r.label) continue;
      (*r.label == 1 ? eval_act : eval_dec).push_back(ep.canonical[i]);
      (*r.label == 1 ? fp_eval_act : fp_eval_dec).push_back(ep.fps[i]);
    }
    AuditRow row;
    row.target = t;
    row.n_train = train_any.size();
    row.n_train_actives = train_act.size();
    row.n_eval_actives = eval_act.size();
    row.n_eval_decoys = eval_dec.size();
    if (!train_any.empty()) row.any_level = leakage_report(train_any, eval_act, eval_dec);
    if (!train_act.empty()) row.thresholded = leakage_report(train_act, eval_act, eval_dec);
    if (!fp_train_act.empty() && !fp_eval_act.empty() && !fp_eval_dec.empty())
      row.bias = structural_bias_audit(fp_train_act, fp_eval_act, fp_eval_dec);
    report.rows.push_back(std::move(row));
  }
  if (config.cross_target) {
    std::vector<int> ids(targets.begin(), targets.end());
    report.cross_target = cross_target_transfer_audit(train, ids, config.rf);
  }
  return report;
}

std::string audit_report_json(const AuditReport& r) {
  nlohmann::ordered_json j;
  j["fingerprint"] = {{"radius", r.config.radius}, {"nbits", r.config.nbits}};
  j["normalization"] = {{"strip_stereo", r.config.strip_stereo}};
  j["leakage_threshold_pct"] = r.config.leakage_threshold_pct;
  j["max_active_leakage_pct"] = r.max_active_leakage_pct();
  j["exceeds_threshold"] = r.exceeds_threshold();
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json o;
    o["target"] = row.target;
    o["n_train"] = row.n_train;
    o["n_train_actives"] = row.n_train_actives;
    o["n_eval_actives"] = row.n_eval_actives;
    o["n_eval_decoys"] = row.n_eval_decoys;
    o["active_leakage_pct"] = row.any_level.active_leakage_pct;
    o["decoy_leakage_pct"] = row.any_level.decoy_leakage_pct;
    o["active_leakage_thresholded_pct"] = row.thresholded.active_leakage_pct;
    o["decoy_leakage_thresholded_pct"] = row.thresholded.decoy_leakage_pct;
    o["leaked_actives"] = row.any_level.leaked_actives;
    o["leaked_decoys"] = row.any_level.leaked_decoys;
    if (row.bias) {
      o["one_nn_auc"] = row.bias->one_nn_auc;
      o["mean_active_active_nn_sim"] = row.bias->aa_sim;
      o["mean_decoy_active_nn_sim"] = row.bias->da_sim;
      o["gap"] = row.bias->gap;
    }
    rows.push_back(std::move(o));
  }
  j["targets"] = std::move(rows);
  if (r.cross_target) {
    j["cross_target"] = {{"targets", r.cross_target->targets},
                         {"auc", r.cross_target->auc},
                         {"off_diagonal_mean", r.cross_target->off_diagonal_mean()}};
  }
  return j.dump(2) + "\n";
}

std::string audit_report_csv(const AuditReport& r) {
  std::string out =
      "target,n_train,n_train_actives,n_eval_actives,n_eval_decoys,active_leakage_pct,decoy_leakage_pct,"
      "active_leakage_thresholded_pct,decoy_leakage_thresholded_pct,one_nn_auc,mean_active_active_nn_sim,"
      "mean_decoy_active_nn_sim,gap\n";
  using eval::format_number;
  for (const auto& row : r.rows) {
    out += std::to_string(row.target) + "," + std::to_string(row.n_train) + "," +
           std::to_string(row.n_train_actives) + "," + std::to_string(row.n_eval_actives) + "," +
           std::to_string(row.n_eval_decoys) + "," + format_number(row.any_level.active_leakage_pct) + "," +
           format_number(row.any_level.decoy_leakage_pct) + "," +
           format_number(row.thresholded.active_leakage_pct) + "," +
           format_number(row.thresholded.decoy_leakage_pct) + ",";
    if (row.bias) {
      out += format_number(row.bias->one_nn_auc) + "," + format_number(row.bias->aa_sim) + "," +
             format_number(row.bias->da_sim) + "," + format_number(row.bias->gap);
    } else {
      out += ",,,";
    }
    out += "\n";
  }
  return out;
}

std::string cross_target_csv(const CrossTargetMatrix& m) {
  std::string out = "train_target";
  for (int t : m.targets) out += "," + std::to_string(t);
  out += "\n";
  for (std::size_t i = 0; i < m.targets.size(); ++i) {
    out += std::to_string(m.targets[i]);
    for (double v : m.auc[i]) out += "," + eval::format_number(v);
    out += "\n";
  }
  return out;
}

}  // namespace nestdrug::audit
