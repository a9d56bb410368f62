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

#include "nestdrug/cli.hpp"

#include <omp.h>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "nestdrug/attribution.hpp"
#include "nestdrug/audit.hpp"
#include "nestdrug/baselines.hpp"
#include "nestdrug/datasets.hpp"
#include "nestdrug/dmta.hpp"
#include "nestdrug/evalkit.hpp"
#include "nestdrug/fingerprint.hpp"
#include "nestdrug/model.hpp"
#include "nestdrug/optim.hpp"
#include "nestdrug/protocols.hpp"
#include "nestdrug/report.hpp"
#include "nestdrug/rng.hpp"
#include "nestdrug/training.hpp"

namespace nestdrug::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using eval::format_number;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::Config:
    case ErrorKind::Parameter:
      return kUsage;
    case ErrorKind::Internal:
    case ErrorKind::Shape:
    case ErrorKind::NotScalar:
    case ErrorKind::TapeConsumed:
    case ErrorKind::MissingGrad:
      return kInternal;
    default:
      return kData;
  }
}

// ---- hashing ----

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) == 1, ErrorKind::Internal,
          "SHA-256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(report::read_file(path)); }

// ---- config ----

namespace {

bool same_kind(const nlohmann::json& a, const nlohmann::json& b) {
  if (a.is_number() && b.is_number()) return !(a.is_number_integer() && b.is_number_float());
  return a.type() == b.type();
}

}  // namespace

void merge_config(nlohmann::json& base, const nlohmann::json& patch, const std::string& where) {
  require(patch.is_object(), ErrorKind::Config, "config" + (where.empty() ? "" : " '" + where + "'") +
                                                    " must be a JSON object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    require(base.contains(it.key()), ErrorKind::Config, "unknown config key '" + key + "'");
    auto& slot = base[it.key()];
    if (slot.is_object()) {
      merge_config(slot, it.value(), key);
      continue;
    }
    require(same_kind(slot, it.value()), ErrorKind::Config,
            "config key '" + key + "' expects " + std::string(slot.type_name()) + ", got " + it.value().type_name());
    slot = it.value();
  }
}

void apply_override(nlohmann::json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos && eq > 0, ErrorKind::Usage, "--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;
  }
  // Build the nested patch and merge so that type and key checks are shared.
  nlohmann::json patch = value;
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    require(!it->empty(), ErrorKind::Usage, "empty component in --set key '" + key + "'");
    nlohmann::json wrap = nlohmann::json::object();
    wrap[*it] = std::move(patch);
    patch = std::move(wrap);
  }
  merge_config(config, patch);
}

namespace {

// ---- invocation state ----

struct Invocation {
  std::string command;
  std::vector<std::string> argv;
  fs::path out;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 1;
  std::vector<std::pair<std::string, fs::path>> inputs;  // role, path
  std::vector<std::string> outputs;
  std::ostream* log = &std::cout;
  std::ostream* err = &std::cerr;
};

struct Common {
  std::string out;
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, bool needs_out = true) {
  auto* o = cmd->add_option("--out,-o", c.out, "output directory");
  if (needs_out) o->required();
  cmd->add_option("--config,-c", c.config_file, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.sets, "override a config value: dotted.key=value")->take_all();
  cmd->add_option("--seed", c.seed, "root seed");
}

nlohmann::json load_json_file(const fs::path& path) {
  try {
    return nlohmann::json::parse(report::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, path.string() + ": " + e.what());
  }
}

/// defaults ← config file ← flag sugar ← --set overrides.
nlohmann::json resolve(nlohmann::json defaults, const Common& c, const nlohmann::json& sugar) {
  if (!c.config_file.empty()) merge_config(defaults, load_json_file(c.config_file));
  if (!sugar.empty()) merge_config(defaults, sugar);
  for (const auto& s : c.sets) apply_override(defaults, s);
  return defaults;
}

void add_input(Invocation& inv, const std::string& role, const fs::path& path) {
  require(fs::is_regular_file(path), ErrorKind::Io, "cannot read " + role + " file " + path.string());
  inv.inputs.emplace_back(role, path);
}

void emit(Invocation& inv, const std::string& name, const std::string& content) {
  report::write_file_atomic(inv.out / name, content);
  inv.outputs.push_back(name);
}

void write_manifest(const Invocation& inv, double wall_time_s) {
  json m;
  m["tool"] = "nestdrug";
  m["version"] = kVersion;
  m["command"] = inv.command;
  m["argv"] = inv.argv;
  m["cwd"] = fs::current_path().string();
  m["config"] = inv.config;
  m["seeds"] = {{"root", inv.seed}};
  json inputs = json::array();
  for (const auto& [role, path] : inv.inputs)
    inputs.push_back({{"role", role}, {"path", fs::absolute(path).string()}, {"sha256", sha256_file(path)}});
  m["inputs"] = std::move(inputs);
  std::vector<std::string> names = inv.outputs;
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  json outputs = json::array();
  for (const auto& n : names) outputs.push_back({{"file", n}, {"sha256", sha256_file(inv.out / n)}});
  m["outputs"] = std::move(outputs);
  m["artifact_versions"] = {{"checkpoint", "NDCK1"}, {"fingerprint_file", 1}, {"manifest", 1}};
  m["threads"] = omp_get_max_threads();
  m["wall_time_s"] = wall_time_s;
  report::write_file_atomic(inv.out / "manifest.json", m.dump(2) + "\n");
}

Dataset load_dataset(Invocation& inv, const std::string& role, const fs::path& path,
                     const IngestOptions& options = {}) {
  add_input(inv, role, path);
  if (path.extension() == ".jsonl") return read_jsonl(path);
  auto r = ingest_csv(path, options);
  if (!r.rejects.empty())
    *inv.err << "warning: " << role << ": " << r.rejects.size() << " rows rejected (run `ingest` for details)\n";
  return std::move(r.dataset);
}

model::NestModel load_model(Invocation& inv, const fs::path& path) {
  add_input(inv, "model", path);
  return model::NestModel::from_checkpoint(tensor::load_checkpoint(path.string()));
}

std::string checkpoint_bytes(const model::NestModel& m, const std::string& extra) {
  std::ostringstream os(std::ios::binary);
  tensor::write_checkpoint(os, m.to_checkpoint(extra));
  return os.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string p; std::getline(ss, p, sep);)
    if (!p.empty()) parts.push_back(p);
  return parts;
}

train::ContextLevels levels_from(const nlohmann::json& j) {
  return {j.at("l1").get<bool>(), j.at("l2").get<bool>(), j.at("l3").get<bool>()};
}

IngestOptions ingest_options_from(const nlohmann::json& j) {
  IngestOptions o;
  o.active_threshold = j.at("active_threshold").get<double>();
  o.deduplicate = j.at("deduplicate").get<bool>();
  o.strip_stereo = j.at("strip_stereo").get<bool>();
  return o;
}

nlohmann::json ingest_defaults() {
  const IngestOptions o;
  return {{"active_threshold", o.active_threshold}, {"deduplicate", o.deduplicate}, {"strip_stereo", o.strip_stereo}};
}

nlohmann::json forest_defaults() {
  const rf::ForestConfig f;
  return {{"n_trees", f.n_trees}, {"max_depth", f.max_depth}, {"min_leaf", f.min_leaf},
          {"feature_fraction", f.feature_fraction}};
}

rf::ForestConfig forest_from(const nlohmann::json& j, std::uint64_t seed) {
  rf::ForestConfig f;
  f.n_trees = j.at("n_trees").get<int>();
  f.max_depth = j.at("max_depth").get<int>();
  f.min_leaf = j.at("min_leaf").get<int>();
  f.feature_fraction = j.at("feature_fraction").get<double>();
  f.seed = seed;
  f.validate();
  return f;
}

std::vector<int> sorted_targets(const Dataset& d) {
  std::set<int> t;
  for (const auto& r : d.records) t.insert(r.target_id);
  return {t.begin(), t.end()};
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

// ---- commands ----

int cmd_ingest(Invocation& inv, const std::string& input) {
  add_input(inv, "input", input);
  const auto result = ingest_csv(input, ingest_options_from(inv.config));
  emit(inv, "dataset.jsonl", to_jsonl(result.dataset));
  emit(inv, "dataset.csv", to_csv(result.dataset));
  emit(inv, "rejects.csv", rejects_csv(result.rejects));
  for (const auto& w : result.dataset.warnings) *inv.err << "warning: " << w << "\n";
  *inv.log << "ingested " << result.dataset.size() << " records, rejected " << result.rejects.size() << "\n";
  return kOk;
}

int cmd_synth(Invocation& inv) {
  const auto& c = inv.config;
  SynthConfig sc;
  sc.n_targets = c.at("n_targets").get<int>();
  sc.n_per_target = c.at("n_per_target").get<int>();
  sc.shift_strength = c.at("shift_strength").get<double>();
  sc.label_noise = c.at("label_noise").get<double>();
  sc.n_assays = c.at("n_assays").get<int>();
  sc.n_rounds = c.at("n_rounds").get<int>();
  sc.seed = inv.seed;
  const auto s = synth_structured_shift(sc);
  emit(inv, "dataset.csv", to_csv(s.dataset));
  json truth;
  truth["motifs"] = s.truth.motifs;
  truth["w0"] = s.truth.w0;
  truth["u"] = s.truth.u;
  truth["w"] = s.truth.w;
  truth["shift_strength"] = s.truth.shift_strength;
  truth["label_noise"] = s.truth.label_noise;
  emit(inv, "truth.json", truth.dump(2) + "\n");
  *inv.log << "generated " << s.dataset.size() << " records over " << sc.n_targets << " targets\n";
  return kOk;
}

int cmd_featurize(Invocation& inv, const std::string& data) {
  const Dataset d = load_dataset(inv, "data", data, ingest_options_from(inv.config));
  std::vector<mol::MolGraph> mols(d.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(d.size()); ++i) {
    try {
      mols[static_cast<std::size_t>(i)] = mol::parse_smiles(d.records[static_cast<std::size_t>(i)].smiles);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  // Sums are accumulated serially in record order so the output does not depend on threads.
  auto stats = [](const std::string& prefix, std::size_t cols, auto&& matrix_of, const auto& mols_) {
    std::vector<double> sum(cols, 0.0), sq(cols, 0.0), nz(cols, 0.0);
    double rows = 0;
    for (const auto& m : mols_) {
      const mol::FeatureMatrix& f = matrix_of(m);
      for (std::size_t r = 0; r < f.rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          const double v = f(r, c);
          sum[c] += v;
          sq[c] += v * v;
          nz[c] += v != 0.0 ? 1.0 : 0.0;
        }
      }
      rows += static_cast<double>(f.rows);
    }
    std::string body;
    for (std::size_t c = 0; c < cols; ++c) {
      const double mean = rows > 0 ? sum[c] / rows : 0.0;
      const double var = rows > 0 ? std::max(0.0, sq[c] / rows - mean * mean) : 0.0;
      body += prefix + std::to_string(c) + "," + format_number(mean) + "," + format_number(std::sqrt(var)) + "," +
              format_number(rows > 0 ? nz[c] / rows : 0.0) + "\n";
    }
    return body;
  };
  std::string out = "feature,mean,std,nonzero_fraction\n";
  out += stats("atom_", mol::kAtomFeatureDim, [](const mol::MolGraph& m) -> const mol::FeatureMatrix& {
    return m.atom_features();
  }, mols);
  out += stats("bond_", mol::kBondFeatureDim, [](const mol::MolGraph& m) -> const mol::FeatureMatrix& {
    return m.bond_features();
  }, mols);
  emit(inv, "feature_stats.csv", out);

  std::string per_mol = "row,target_id,n_atoms,n_bonds,canonical\n";
  for (std::size_t i = 0; i < d.size(); ++i)
    per_mol += std::to_string(i) + "," + std::to_string(d.records[i].target_id) + "," +
               std::to_string(mols[i].num_atoms()) + "," + std::to_string(mols[i].num_bonds()) + "," +
               d.records[i].canonical + "\n";
  emit(inv, "molecules.csv", per_mol);
  *inv.log << "featurized " << d.size() << " molecules\n";
  return kOk;
}

int cmd_fp(Invocation& inv, const std::string& data) {
  const Dataset d = load_dataset(inv, "data", data);
  const int radius = inv.config.at("radius").get<int>();
  const int nbits = inv.config.at("nbits").get<int>();
  const auto fps = rf::fingerprints(d, radius, nbits);
  std::vector<fp::FingerprintEntry> entries;
  entries.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) entries.push_back({d.records[i].canonical, fps[i]});
  std::ostringstream os;
  fp::write_fingerprint_file(os, entries);
  emit(inv, "fingerprints.tsv", os.str());
  *inv.log << "wrote " << entries.size() << " fingerprints (radius " << radius << ", " << nbits << " bits)\n";
  return kOk;
}

int cmd_audit(Invocation& inv, const std::string& train_path, const std::string& eval_path) {
  const Dataset train = load_dataset(inv, "train", train_path);
  const Dataset evald = load_dataset(inv, "eval", eval_path);
  const auto& c = inv.config;
  audit::AuditConfig ac;
  ac.radius = c.at("radius").get<int>();
  ac.nbits = c.at("nbits").get<int>();
  ac.strip_stereo = c.at("strip_stereo").get<bool>();
  ac.leakage_threshold_pct = c.at("leakage_threshold_pct").get<double>();
  ac.cross_target = c.at("cross_target").get<bool>();
  ac.rf.forest = forest_from(c.at("forest"), derive_seed(inv.seed, "audit-forest"));
  ac.rf.radius = ac.radius;
  ac.rf.nbits = ac.nbits;
  ac.rf.split_seed = derive_seed(inv.seed, "audit-split");
  const auto r = audit::run_audit(train, evald, ac);
  emit(inv, "audit.json", audit::audit_report_json(r));
  emit(inv, "audit.csv", audit::audit_report_csv(r));
  if (r.cross_target) emit(inv, "cross_target.csv", audit::cross_target_csv(*r.cross_target));
  *inv.log << "max active leakage " << format_number(r.max_active_leakage_pct()) << "% (threshold "
           << format_number(ac.leakage_threshold_pct) << "%)\n";
  return r.exceeds_threshold() ? kThresholdExceeded : kOk;
}

nlohmann::json phase_json(const train::PhaseConfig& p) {
  auto j = nlohmann::json::parse(train::phase_config_to_json(p));
  j.erase("seed");   // derived from the root seed
  j.erase("phase");  // chosen by the top-level key
  return j;
}

train::PhaseConfig phase_from(const nlohmann::json& j, train::PhaseConfig base, std::uint64_t seed) {
  base = train::phase_config_from_json(j.dump(), base);
  base.seed = seed;
  base.validate();
  return base;
}

std::string report_csv(const train::TrainReport& r) {
  std::string s = "epoch,train_loss,val_loss,val_auc,selected\n";
  for (const auto& e : r.epochs)
    s += std::to_string(e.epoch) + "," + format_number(e.train_loss) + "," + format_number(e.val_loss) + "," +
         opt_number(e.val_auc) + "," + (e.epoch == r.selected_epoch ? "1" : "0") + "\n";
  return s;
}

int cmd_train(Invocation& inv, const std::string& data, const std::string& init) {
  const auto& c = inv.config;
  const Dataset d = load_dataset(inv, "data", data);
  const std::string phase_name = c.at("phase").get<std::string>();
  const auto levels = levels_from(c.at("levels"));
  const auto kind = c.at("task_kind").get<std::string>() == "regression" ? model::TaskKind::Regression
                                                                           : model::TaskKind::Classification;

  std::optional<model::NestModel> m;
  if (!init.empty()) {
    m.emplace(load_model(inv, init));
    inv.config["model"] = nlohmann::json::parse(model::config_to_json(m->config()));
  } else {
    m.emplace(model::config_from_json(c.at("model").dump()), derive_seed(inv.seed, "model"));
  }
  const std::string extra = json{{"phase", phase_name}, {"seed", inv.seed}}.dump();

  if (phase_name == "continual") {
    const auto pc = phase_from(c.at("continual"), train::continual_defaults(), derive_seed(inv.seed, "fit"));
    std::map<int, std::vector<std::size_t>> by_round;
    for (std::size_t i = 0; i < d.size(); ++i) by_round[d.records[i].round_id].push_back(i);
    std::vector<train::TaskData> rounds;
    for (const auto& [round, rows] : by_round) rounds.push_back(train::from_dataset(d.subset(rows), kind, levels));
    const auto snapshots = train::continual_update(*m, rounds, pc);
    std::size_t k = 0;
    std::string rounds_csv = "round,n_rows,checkpoint\n";
    for (const auto& [round, rows] : by_round) {
      const std::string name = "round_" + std::to_string(round) + ".ndck";
      emit(inv, name, checkpoint_bytes(snapshots[k++], extra));
      rounds_csv += std::to_string(round) + "," + std::to_string(rows.size()) + "," + name + "\n";
    }
    emit(inv, "rounds.csv", rounds_csv);
    emit(inv, "model.ndck", checkpoint_bytes(*m, extra));
    *inv.log << "continual update over " << by_round.size() << " rounds\n";
    return kOk;
  }

  train::PhaseConfig pc;
  if (phase_name == "pretrain")
    pc = phase_from(c.at("pretrain"), train::pretrain_defaults(), derive_seed(inv.seed, "fit"));
  else if (phase_name == "finetune")
    pc = phase_from(c.at("finetune"), train::finetune_defaults(), derive_seed(inv.seed, "fit"));
  else
    fail(ErrorKind::Config, "phase must be pretrain, finetune or continual, got '" + phase_name + "'");
  const auto report = train::fit(*m, train::from_dataset(d, kind, levels), pc);
  emit(inv, "model.ndck", checkpoint_bytes(*m, extra));
  emit(inv, "train_report.csv", report_csv(report));
  *inv.log << phase_name << ": " << report.epochs.size() - 1 << " epochs, selected epoch " << report.selected_epoch
           << " (" << report.selection_metric << ")\n";
  return kOk;
}

int cmd_eval(Invocation& inv, const std::string& model_path, const std::string& data) {
  const auto& c = inv.config;
  const auto m = load_model(inv, model_path);
  const Dataset d = load_dataset(inv, "data", data);
  const auto task = c.at("task").get<std::string>();
  const int folds = c.at("folds").get<int>();
  require(folds >= 2, ErrorKind::Config, "folds must be at least 2");
  const auto& spec = m.config().tasks[m.task_index(task)];
  const bool regression = spec.kind == model::TaskKind::Regression;

  const auto data_t = train::from_dataset(d, spec.kind, levels_from(c.at("levels")));
  const auto raw = train::predict(m, data_t, task);

  struct Cell {
    int target;
    int fold;
    std::vector<std::size_t> rows;
  };
  std::vector<Cell> cells;
  for (int t : sorted_targets(d)) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d.records[i].target_id == t) rows.push_back(i);
    std::vector<int> strata(rows.size(), 0);
    if (!regression)
      for (std::size_t k = 0; k < rows.size(); ++k) strata[k] = static_cast<int>(data_t.targets[rows[k]]);
    require(rows.size() >= static_cast<std::size_t>(folds), ErrorKind::TooFewSamples,
            "target " + std::to_string(t) + " has fewer rows than folds");
    const auto plan = eval::stratified_kfold(strata, folds, derive_seed(inv.seed, "eval-split", static_cast<std::uint64_t>(t)));
    for (int f = 0; f < folds; ++f) {
      Cell cell{t, f, {}};
      for (auto k : plan.test_rows(f)) cell.rows.push_back(rows[k]);
      cells.push_back(std::move(cell));
    }
  }

  // One row per (target, fold); cells are independent and merged in key order.
  std::vector<std::string> lines(cells.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t j = 0; j < static_cast<std::int64_t>(cells.size()); ++j) {
    const auto& cell = cells[static_cast<std::size_t>(j)];
    try {
      std::vector<double> p;
      std::vector<double> y;
      for (auto r : cell.rows) {
        p.push_back(regression ? raw[r] : 1.0 / (1.0 + std::exp(-raw[r])));
        y.push_back(data_t.targets[r]);
      }
      eval::MetricBundle b;
      if (regression) {
        b = eval::regression_bundle(p, y);
      } else {
        std::vector<int> yi(y.begin(), y.end());
        b = eval::classification_bundle(p, yi);
      }
      lines[static_cast<std::size_t>(j)] =
          std::to_string(cell.target) + "," + std::to_string(cell.fold) + "," + eval::metric_bundle_csv_row(b);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  std::string out = "target,fold," + eval::metric_bundle_csv_header() + "\n";
  for (const auto& l : lines) out += l + "\n";
  emit(inv, "metrics.csv", out);
  *inv.log << "evaluated " << cells.size() << " (target, fold) cells\n";
  return kOk;
}

protocol::ProtocolConfig protocol_from(const Invocation& inv) {
  nlohmann::json p = nlohmann::json::object();
  for (const char* k : {"model", "pretrain", "finetune", "folds", "test_fold"}) p[k] = inv.config.at(k);
  p["seed"] = inv.seed;
  return protocol::protocol_config_from_json(p.dump(), protocol::desk_protocol_config(inv.seed));
}

nlohmann::json protocol_defaults() {
  auto j = nlohmann::json::parse(protocol::protocol_config_to_json(protocol::desk_protocol_config(1)));
  j.erase("seed");
  for (const char* phase : {"pretrain", "finetune"}) {
    j[phase].erase("seed");
    j[phase].erase("phase");
  }
  return j;
}

int cmd_ablate(Invocation& inv, const std::string& data) {
  const Dataset d = load_dataset(inv, "data", data);
  const auto pc = protocol_from(inv);
  std::vector<protocol::Level> levels;
  for (const auto& l : inv.config.at("levels")) levels.push_back(protocol::parse_level(l.get<std::string>()));
  std::vector<model::FusionVariant> variants;
  for (const auto& v : inv.config.at("variants")) variants.push_back(model::parse_fusion(v.get<std::string>()));
  require(!levels.empty() || !variants.empty(), ErrorKind::Config, "nothing to ablate: levels and variants are empty");

  const auto run = protocol::prepare(d, pc);
  const std::size_t jobs = levels.size() + variants.size();
  std::vector<protocol::AblationResult> ablations(levels.size());
  std::vector<protocol::VariantResult> sweep(variants.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t j = 0; j < static_cast<std::int64_t>(jobs); ++j) {
    const auto k = static_cast<std::size_t>(j);
    try {
      if (k < levels.size()) {
        ablations[k] = protocol::context_ablation(run, levels[k], pc);
      } else {
        const auto v = variants[k - levels.size()];
        sweep[k - levels.size()] = protocol::fusion_sweep(run, std::span(&v, 1), pc).front();
      }
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  if (!levels.empty()) {
    std::string out = "level,target,n_test,auc_correct,auc_generic,delta\n";
    for (const auto& a : ablations) {
      for (const auto& r : a.rows)
        out += std::string(protocol::to_string(a.level)) + "," + std::to_string(r.target) + "," +
               std::to_string(r.n_test) + "," + format_number(r.auc_correct) + "," + format_number(r.auc_generic) +
               "," + format_number(r.delta) + "\n";
      *inv.log << protocol::to_string(a.level) << ": correct " << format_number(a.mean_correct) << ", generic "
               << format_number(a.mean_generic) << ", delta " << format_number(a.mean_delta) << "\n";
    }
    emit(inv, "ablation.csv", out);
  }
  if (!variants.empty()) {
    std::string out = "variant,n_targets,mean_auc,selected_epoch\n";
    for (const auto& v : sweep)
      out += std::string(model::to_string(v.variant)) + "," + std::to_string(v.aucs.per_target.size()) + "," +
             format_number(v.aucs.mean) + "," + std::to_string(v.selected_epoch) + "\n";
    emit(inv, "fusion.csv", out);
  }
  return kOk;
}

int cmd_fewshot(Invocation& inv, const std::string& data) {
  const Dataset d = load_dataset(inv, "data", data);
  const auto pc = protocol_from(inv);
  train::FewShotConfig fc;
  fc.steps = inv.config.at("steps").get<int>();
  fc.lr = inv.config.at("lr").get<double>();
  fc.seed = derive_seed(inv.seed, "adapt");
  const auto shots = inv.config.at("shots").get<std::vector<int>>();
  const int target = inv.config.at("target").get<int>();
  const auto rows = protocol::few_shot_protocol(d, target, shots, pc, fc);
  std::string out = "target,shots,zero_shot_auc,adapted_auc,delta,generic_auc\n";
  for (const auto& r : rows)
    out += std::to_string(r.target) + "," + std::to_string(r.shots) + "," + format_number(r.zero_shot_auc) + "," +
           format_number(r.adapted_auc) + "," + format_number(r.delta) + "," + format_number(r.generic_auc) + "\n";
  emit(inv, "fewshot.csv", out);
  *inv.log << "few-shot on target " << target << ": " << rows.size() << " shot counts\n";
  return kOk;
}

int cmd_replay(Invocation& inv, const std::string& pool, const std::string& known, const std::string& model_path) {
  dmta::Campaign c;
  c.pool = load_dataset(inv, "pool", pool);
  nlohmann::json settings = inv.config;
  settings.erase("n_hits");
  settings["seed"] = inv.seed;
  dmta::apply(dmta::campaign_settings_from_json(settings.dump()), c);
  if (!known.empty()) {
    const Dataset k = load_dataset(inv, "known", known);
    const auto fps = rf::fingerprints(k, c.radius, c.nbits);
    for (std::size_t i = 0; i < k.size(); ++i)
      if (k.records[i].label == 1) c.known_actives.push_back(fps[i]);
  }
  if (!model_path.empty()) c.model.emplace(load_model(inv, model_path));
  require(c.scorer != dmta::ScorerKind::Model || c.model, ErrorKind::Usage, "the model scorer needs --model");
  require(c.scorer != dmta::ScorerKind::FingerprintNN || !known.empty(), ErrorKind::Usage,
          "the fingerprint-nn scorer needs --known");
  const auto r = dmta::replay_campaign(c);
  const std::vector<dmta::CampaignResult> all = {r};
  emit(inv, "campaign.json", dmta::campaign_result_json(r));
  emit(inv, "rounds.csv", dmta::campaign_rounds_csv(r));
  emit(inv, "summary.csv", dmta::enrichment_summary_csv(dmta::enrichment_summary(all, inv.config.at("n_hits").get<int>())));
  *inv.log << to_string(r.scorer) << ": " << r.hits() << " hits in " << r.revealed() << " reveals, enrichment "
           << opt_number(r.enrichment) << "\n";
  return kOk;
}

int cmd_attribute(Invocation& inv, const std::string& model_path, const std::string& data,
                  const std::vector<std::string>& smiles) {
  const auto m = load_model(inv, model_path);
  require(data.empty() != smiles.empty(), ErrorKind::Usage, "attribute needs exactly one of --data or --smiles");
  std::vector<std::string> inputs = smiles;
  if (!data.empty())
    for (const auto& r : load_dataset(inv, "data", data).records) inputs.push_back(r.smiles);
  const auto limit = inv.config.at("max_molecules").get<std::size_t>();
  if (limit > 0 && inputs.size() > limit) inputs.resize(limit);
  std::vector<mol::MolGraph> mols;
  for (const auto& s : inputs) mols.push_back(mol::parse_smiles(s));

  std::vector<model::ContextTuple> contexts;
  for (const auto& t : inv.config.at("contexts")) {
    const auto v = t.get<std::vector<int>>();
    require(v.size() == 3, ErrorKind::Config, "each context is [program, assay, round]");
    contexts.push_back({v[0], v[1], v[2]});
  }
  require(!contexts.empty(), ErrorKind::Config, "no contexts given");
  const int steps = inv.config.at("steps").get<int>();
  const auto task = inv.config.at("task").get<std::string>();
  const auto top_k = inv.config.at("top_k").get<std::size_t>();
  const auto res = attr::attribute_all(m, mols, contexts, steps, task);

  auto ctx_label = [](const model::ContextTuple& c) {
    return std::to_string(c.program) + "/" + std::to_string(c.assay) + "/" + std::to_string(c.round);
  };
  json all = json::array();
  std::string stats = "molecule,context,n_atoms,mean,max,std,top_atoms,residual\n";
  std::string sim = "molecule,context_a,context_b,cosine\n";
  for (std::size_t i = 0; i < mols.size(); ++i) {
    std::vector<std::string> symbols;
    for (const auto& a : mols[i].atoms()) symbols.emplace_back(mol::element_by_number(a.atomic_number).symbol);
    for (std::size_t c = 0; c < contexts.size(); ++c) {
      const auto& r = res[i][c];
      json entry;
      entry["molecule"] = i;
      entry["smiles"] = inputs[i];
      entry["context"] = {contexts[c].program, contexts[c].assay, contexts[c].round};
      entry["attribution"] = json::parse(attr::attribution_json(r, symbols));
      all.push_back(std::move(entry));
      const auto s = attr::attribution_stats(r.atom_importance, top_k);
      std::string top;
      for (auto a : s.top_atoms) top += (top.empty() ? "" : " ") + std::to_string(a);
      stats += std::to_string(i) + "," + ctx_label(contexts[c]) + "," + std::to_string(mols[i].num_atoms()) + "," +
               format_number(s.mean) + "," + format_number(s.max) + "," + format_number(s.std) + "," + top + "," +
               format_number(r.residual) + "\n";
      emit(inv, "mol" + std::to_string(i) + "_ctx" + std::to_string(c) + ".svg",
           report::svg_molecule_heatmap(mols[i], r.atom_importance, inputs[i] + " @ " + ctx_label(contexts[c])));
      for (std::size_t c2 = c + 1; c2 < contexts.size(); ++c2) {
        std::string cos;
        try {
          cos = format_number(attr::cosine(r.atom_importance, res[i][c2].atom_importance));
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::ZeroVector) throw;
        }
        sim += std::to_string(i) + "," + ctx_label(contexts[c]) + "," + ctx_label(contexts[c2]) + "," + cos + "\n";
      }
    }
  }
  emit(inv, "attributions.json", all.dump(2) + "\n");
  emit(inv, "stats.csv", stats);
  if (contexts.size() > 1) emit(inv, "similarity.csv", sim);
  *inv.log << "attributed " << mols.size() << " molecules under " << contexts.size() << " contexts\n";
  return kOk;
}

int cmd_report(Invocation& inv, const std::string& results) {
  require(fs::is_directory(results), ErrorKind::Io, "results directory not found: " + results);
  require(!fs::exists(inv.out) || !fs::equivalent(results, inv.out), ErrorKind::Usage,
          "report output must differ from the results directory");
  std::vector<fs::path> csvs;
  for (const auto& e : fs::directory_iterator(results))
    if (e.is_regular_file() && e.path().extension() == ".csv") csvs.push_back(e.path());
  std::sort(csvs.begin(), csvs.end());
  for (const auto& p : csvs) add_input(inv, "results", p);
  const auto r = report::emit_report(results, inv.out);
  for (const auto& f : r.files) inv.outputs.push_back(f);
  for (const auto& w : r.warnings) *inv.err << "warning: " << w << "\n";
  *inv.log << "report: " << r.files.size() << " files\n";
  return kOk;
}

int cmd_selftest(std::ostream& out) {
  const auto checks = selftest();
  std::size_t failed = 0;
  for (const auto& c : checks) {
    out << (c.ok ? "ok    " : "FAIL  ") << c.name;
    if (!c.detail.empty()) out << "  (" << c.detail << ")";
    out << "\n";
    failed += c.ok ? 0 : 1;
  }
  out << checks.size() - failed << "/" << checks.size() << " checks passed\n";
  return failed == 0 ? kOk : kInternal;
}

// ---- rerun ----

/// Drops --config/--set (replaced by the recorded snapshot) and --out (replaced by the new directory).
std::vector<std::string> rerun_args(const std::vector<std::string>& argv, const fs::path& snapshot,
                                    const fs::path& out) {
  std::vector<std::string> args = {"nestdrug"};
  const std::set<std::string> drop = {"--config", "-c", "--set", "--out", "-o"};
  for (std::size_t i = 0; i < argv.size(); ++i) {
    const std::string& a = argv[i];
    const auto eq = a.find('=');
    const std::string flag = a.rfind("--", 0) == 0 && eq != std::string::npos ? a.substr(0, eq) : a;
    if (!drop.count(flag)) {
      args.push_back(a);
      continue;
    }
    if (flag != a) continue;  // --flag=value form
    // Skip the flag's values (--set takes every following non-flag token).
    while (i + 1 < argv.size() && argv[i + 1].rfind("-", 0) != 0) {
      ++i;
      if (flag != "--set") break;
    }
  }
  args.push_back("--config");
  args.push_back(snapshot.string());
  args.push_back("--out");
  args.push_back(out.string());
  return args;
}

int cmd_rerun(const std::string& manifest_path, const std::string& out, int threads, bool verify, std::ostream& log,
              std::ostream& err) {
  const auto m = load_json_file(manifest_path);
  for (const char* k : {"argv", "config", "inputs", "outputs", "cwd"})
    require(m.contains(k), ErrorKind::Data, std::string("manifest lacks '") + k + "'");
  for (const auto& in : m["inputs"]) {
    const fs::path p = in["path"].get<std::string>();
    require(fs::is_regular_file(p), ErrorKind::Io, "input missing: " + p.string());
    require(sha256_file(p) == in["sha256"].get<std::string>(), ErrorKind::Data,
            "input changed since the manifest was written: " + p.string());
  }
  const fs::path out_dir = fs::absolute(out);
  const fs::path snapshot =
      fs::temp_directory_path() / ("nestdrug_rerun_" + sha256_hex(out_dir.string()).substr(0, 16) + ".json");
  report::write_file_atomic(snapshot, m["config"].dump(2));

  const fs::path cwd = fs::current_path();
  const int saved_threads = omp_get_max_threads();
  int code = kOk;
  try {
    fs::current_path(m["cwd"].get<std::string>());
    omp_set_num_threads(std::max(1, threads));
    code = run(rerun_args(m["argv"].get<std::vector<std::string>>(), snapshot, out_dir), log, err);
  } catch (...) {
    fs::current_path(cwd);
    omp_set_num_threads(saved_threads);
    fs::remove(snapshot);
    throw;
  }
  fs::current_path(cwd);
  omp_set_num_threads(saved_threads);
  fs::remove(snapshot);
  if (!verify || code == kUsage || code == kData || code == kInternal) return code;

  std::size_t mismatches = 0;
  for (const auto& o : m["outputs"]) {
    const fs::path p = out_dir / o["file"].get<std::string>();
    const bool same = fs::exists(p) && sha256_file(p) == o["sha256"].get<std::string>();
    log << (same ? "identical  " : "DIFFERENT  ") << o["file"].get<std::string>() << "\n";
    mismatches += same ? 0 : 1;
  }
  if (mismatches > 0) {
    err << "error: " << mismatches << " primary outputs differ from the manifest\n";
    return kData;
  }
  return code;
}

void apply_thread_cap(std::ostream& err) {
  const char* env = std::getenv("NESTDRUG_THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1) {
    err << "warning: ignoring NESTDRUG_THREADS='" << env << "' (expected a positive integer)\n";
    return;
  }
  omp_set_num_threads(static_cast<int>(std::min<long>(n, omp_get_max_threads())));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"nestdrug: context-conditioned molecular activity modelling"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Common common;
  std::string input, data, train_path, eval_path, model_path, init, known, results, manifest;
  std::vector<std::string> smiles;
  std::optional<double> threshold;
  bool strip_stereo = false, cross_target = false, verify = false;
  std::string phase, levels, variants, scorer, shots, contexts;
  std::optional<int> target, steps, radius, nbits, rerun_threads;

  auto* ingest = app.add_subcommand("ingest", "CSV -> dataset (JSONL + normalized CSV + rejects)");
  add_common(ingest, common);
  ingest->add_option("--input,-i", input, "activity CSV")->required();
  ingest->add_option("--threshold", threshold, "pIC50 activity threshold");
  ingest->add_flag("--strip-stereo", strip_stereo, "canonical forms without E/Z");

  auto* synth = app.add_subcommand("synth", "generate a synthetic structured-shift dataset");
  add_common(synth, common);

  auto* featurize = app.add_subcommand("featurize", "dataset -> feature statistics");
  add_common(featurize, common);
  featurize->add_option("--data,-d", data, "dataset (.csv or .jsonl)")->required();

  auto* fpc = app.add_subcommand("fp", "dataset -> fingerprint file");
  add_common(fpc, common);
  fpc->add_option("--data,-d", data, "dataset")->required();
  fpc->add_option("--radius", radius);
  fpc->add_option("--nbits", nbits);

  auto* auditc = app.add_subcommand("audit", "train + eval -> leakage and bias report (exit 2 above threshold)");
  add_common(auditc, common);
  auditc->add_option("--train", train_path, "training dataset")->required();
  auditc->add_option("--eval", eval_path, "evaluation dataset (label 1 actives, 0 decoys)")->required();
  auditc->add_option("--threshold", threshold, "active leakage threshold in percent");
  auditc->add_flag("--strip-stereo", strip_stereo);
  auditc->add_flag("--cross-target", cross_target, "also compute the cross-target RF transfer matrix");

  auto* trainc = app.add_subcommand("train", "train a model (pretrain, finetune or continual)");
  add_common(trainc, common);
  trainc->add_option("--data,-d", data, "dataset")->required();
  trainc->add_option("--phase", phase)->check(CLI::IsMember({"pretrain", "finetune", "continual"}));
  trainc->add_option("--init", init, "start from this checkpoint");

  auto* evalc = app.add_subcommand("eval", "checkpoint + dataset -> per target/fold metric grid");
  add_common(evalc, common);
  evalc->add_option("--model,-m", model_path, "checkpoint")->required();
  evalc->add_option("--data,-d", data, "dataset")->required();

  auto* ablate = app.add_subcommand("ablate", "context-level ablation and fusion-variant sweep");
  add_common(ablate, common);
  ablate->add_option("--data,-d", data, "dataset")->required();
  ablate->add_option("--levels", levels, "comma-separated levels: l1,l2,l3");
  ablate->add_option("--variants", variants, "comma-separated fusion variants");

  auto* fewshot = app.add_subcommand("fewshot", "held-out target L1 adaptation");
  add_common(fewshot, common);
  fewshot->add_option("--data,-d", data, "dataset")->required();
  fewshot->add_option("--target", target);
  fewshot->add_option("--shots", shots, "comma-separated shot counts");
  fewshot->add_option("--steps", steps);

  auto* replay = app.add_subcommand("replay", "replay a DMTA campaign over a labelled pool");
  add_common(replay, common);
  replay->add_option("--pool", data, "labelled pool")->required();
  replay->add_option("--known", known, "dataset whose label-1 rows seed the fingerprint-nn scorer");
  replay->add_option("--model,-m", model_path, "checkpoint for the model scorer");
  replay->add_option("--scorer", scorer)->check(CLI::IsMember({"random", "oracle", "fingerprint-nn", "model"}));

  auto* attribute = app.add_subcommand("attribute", "integrated-gradients atom attributions + SVG heatmaps");
  add_common(attribute, common);
  attribute->add_option("--model,-m", model_path, "checkpoint")->required();
  attribute->add_option("--data,-d", data, "dataset");
  attribute->add_option("--smiles", smiles, "molecules")->take_all();
  attribute->add_option("--contexts", contexts, "program,assay,round;...");
  attribute->add_option("--steps", steps);

  auto* reportc = app.add_subcommand("report", "aggregate metric CSVs into summary + SVG charts");
  add_common(reportc, common);
  reportc->add_option("--results,-r", results, "directory of CSVs")->required();

  auto* selftestc = app.add_subcommand("selftest", "run the built-in oracle checks");

  auto* rerun = app.add_subcommand("rerun", "re-run a command from its manifest");
  rerun->add_option("--manifest", manifest, "manifest.json")->required()->check(CLI::ExistingFile);
  rerun->add_option("--out,-o", common.out, "output directory")->required();
  rerun->add_option("--threads", rerun_threads, "threads for the re-run (default 1)");
  rerun->add_flag("--verify", verify, "compare output digests with the manifest");

  std::vector<const char*> cargv;
  for (const auto& a : args) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::Success& e) {
    app.exit(e, out, err);  // --help and --version
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return kUsage;
  }

  try {
    apply_thread_cap(err);
    if (selftestc->parsed()) return cmd_selftest(out);
    if (rerun->parsed()) return cmd_rerun(manifest, common.out, rerun_threads.value_or(1), verify, out, err);

    const auto start = std::chrono::steady_clock::now();
    Invocation inv;
    inv.log = &out;
    inv.err = &err;
    inv.argv.assign(args.begin() + 1, args.end());
    inv.out = common.out;

    nlohmann::json defaults = nlohmann::json::object();
    nlohmann::json sugar = nlohmann::json::object();
    std::function<int()> body;
    if (ingest->parsed()) {
      inv.command = "ingest";
      defaults = ingest_defaults();
      if (threshold) sugar["active_threshold"] = *threshold;
      if (strip_stereo) sugar["strip_stereo"] = true;
      body = [&] { return cmd_ingest(inv, input); };
    } else if (synth->parsed()) {
      inv.command = "synth";
      const SynthConfig sc;
      defaults = {{"n_targets", sc.n_targets},         {"n_per_target", sc.n_per_target},
                  {"shift_strength", sc.shift_strength}, {"label_noise", sc.label_noise},
                  {"n_assays", sc.n_assays},           {"n_rounds", sc.n_rounds}};
      body = [&] { return cmd_synth(inv); };
    } else if (featurize->parsed()) {
      inv.command = "featurize";
      defaults = ingest_defaults();
      body = [&] { return cmd_featurize(inv, data); };
    } else if (fpc->parsed()) {
      inv.command = "fp";
      defaults = {{"radius", fp::kDefaultRadius}, {"nbits", fp::kDefaultBits}};
      if (radius) sugar["radius"] = *radius;
      if (nbits) sugar["nbits"] = *nbits;
      body = [&] { return cmd_fp(inv, data); };
    } else if (auditc->parsed()) {
      inv.command = "audit";
      const audit::AuditConfig a;
      defaults = {{"radius", a.radius},
                  {"nbits", a.nbits},
                  {"strip_stereo", a.strip_stereo},
                  {"leakage_threshold_pct", a.leakage_threshold_pct},
                  {"cross_target", a.cross_target},
                  {"forest", forest_defaults()}};
      if (threshold) sugar["leakage_threshold_pct"] = *threshold;
      if (strip_stereo) sugar["strip_stereo"] = true;
      if (cross_target) sugar["cross_target"] = true;
      body = [&] { return cmd_audit(inv, train_path, eval_path); };
    } else if (trainc->parsed()) {
      inv.command = "train";
      const auto desk = protocol::desk_protocol_config(1);
      defaults = {{"phase", "finetune"},
                  {"task_kind", "classification"},
                  {"levels", {{"l1", true}, {"l2", true}, {"l3", true}}},
                  {"model", nlohmann::json::parse(model::config_to_json(desk.model))},
                  {"pretrain", phase_json(train::pretrain_defaults())},
                  {"finetune", phase_json(train::finetune_defaults())},
                  {"continual", phase_json(train::continual_defaults())}};
      if (!phase.empty()) sugar["phase"] = phase;
      body = [&] { return cmd_train(inv, data, init); };
    } else if (evalc->parsed()) {
      inv.command = "eval";
      defaults = {{"folds", 5}, {"task", "activity"}, {"levels", {{"l1", true}, {"l2", true}, {"l3", true}}}};
      body = [&] { return cmd_eval(inv, model_path, data); };
    } else if (ablate->parsed()) {
      inv.command = "ablate";
      defaults = protocol_defaults();
      defaults["levels"] = nlohmann::json::array({"l1"});
      defaults["variants"] = nlohmann::json::array();
      if (!levels.empty()) sugar["levels"] = split(levels, ',');
      if (!variants.empty()) sugar["variants"] = split(variants, ',');
      body = [&] { return cmd_ablate(inv, data); };
    } else if (fewshot->parsed()) {
      inv.command = "fewshot";
      const train::FewShotConfig f;
      defaults = protocol_defaults();
      defaults["target"] = 1;
      defaults["shots"] = {1, 5, 10};
      defaults["steps"] = f.steps;
      defaults["lr"] = f.lr;
      if (target) sugar["target"] = *target;
      if (steps) sugar["steps"] = *steps;
      if (!shots.empty()) {
        std::vector<int> s;
        for (const auto& t : split(shots, ',')) s.push_back(std::stoi(t));
        sugar["shots"] = s;
      }
      body = [&] { return cmd_fewshot(inv, data); };
    } else if (replay->parsed()) {
      inv.command = "replay";
      defaults = nlohmann::json::parse(dmta::campaign_settings_to_json({}));
      defaults.erase("seed");
      defaults["n_hits"] = 50;
      if (!scorer.empty()) sugar["scorer"] = scorer;
      body = [&] { return cmd_replay(inv, data, known, model_path); };
    } else if (attribute->parsed()) {
      inv.command = "attribute";
      defaults = {{"steps", attr::kDefaultSteps},
                  {"task", "activity"},
                  {"contexts", nlohmann::json::array({nlohmann::json::array({1, 0, 0})})},
                  {"top_k", 5},
                  {"max_molecules", 0}};
      if (steps) sugar["steps"] = *steps;
      if (!contexts.empty()) {
        nlohmann::json cs = nlohmann::json::array();
        for (const auto& t : split(contexts, ';')) {
          std::vector<int> v;
          for (const auto& x : split(t, ',')) v.push_back(std::stoi(x));
          cs.push_back(v);
        }
        sugar["contexts"] = cs;
      }
      body = [&] { return cmd_attribute(inv, model_path, data, smiles); };
    } else if (reportc->parsed()) {
      inv.command = "report";
      body = [&] { return cmd_report(inv, results); };
    } else {
      fail(ErrorKind::Internal, "no subcommand handler");
    }

    inv.config = resolve(defaults, common, sugar);
    inv.seed = common.seed.value_or(1);
    fs::create_directories(inv.out);
    const int code = body();
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(inv, wall);
    return code;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}

int run(const std::vector<std::string>& args) { return run(args, std::cout, std::cerr); }

}  // namespace nestdrug::cli
