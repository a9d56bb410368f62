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

#include "nestdrug/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "json.hpp"
#include "nestdrug/errors.hpp"
#include "nestdrug/evalkit.hpp"
#include "nestdrug/rng.hpp"

namespace nestdrug::model {

namespace {

enum Init { kUniformFanIn = 0, kZeros = 1, kOnes = 2, kEmbedding = 3 };

constexpr double kStandardizeEps = 1e-5;

constexpr std::pair<FusionVariant, std::string_view> kFusionNames[] = {
    {FusionVariant::None, "None"},
    {FusionVariant::ConcatFrozen, "ConcatFrozen"},
    {FusionVariant::ConcatTrained, "ConcatTrained"},
    {FusionVariant::Additive, "Additive"},
    {FusionVariant::Multiplicative, "Multiplicative"},
    {FusionVariant::FiLM, "FiLM"},
    {FusionVariant::Hypernetwork, "Hypernetwork"},
};

bool has_gamma(FusionVariant v) { return v == FusionVariant::FiLM || v == FusionVariant::Multiplicative; }
bool has_beta(FusionVariant v) { return v == FusionVariant::FiLM || v == FusionVariant::Additive; }
bool is_concat(FusionVariant v) { return v == FusionVariant::ConcatFrozen || v == FusionVariant::ConcatTrained; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view to_string(FusionVariant v) {
  for (const auto& [variant, name] : kFusionNames) {
    if (variant == v) return name;
  }
  return "?";
}

FusionVariant parse_fusion(std::string_view name) {
  for (const auto& [variant, n] : kFusionNames) {
    if (lower(n) == lower(name)) return variant;
  }
  fail(ErrorKind::Config, "unknown fusion variant '" + std::string(name) + "'");
}

std::string_view to_string(Group g) {
  switch (g) {
    case Group::Backbone: return "backbone";
    case Group::ContextL1: return "context_l1";
    case Group::ContextL2: return "context_l2";
    case Group::ContextL3: return "context_l3";
    case Group::ContextProj: return "context_proj";
    case Group::Fusion: return "fusion";
    case Group::FrozenProjection: return "frozen_projection";
    case Group::Head: return "head";
  }
  return "?";
}

void ModelConfig::validate() const {
  auto check = [](bool ok, const std::string& what) { require(ok, ErrorKind::Config, "model config: " + what); };
  check(hidden >= 1, "hidden must be positive");
  check(l1_dim >= 1 && l2_dim >= 1 && l3_dim >= 1, "context dims must be positive");
  check(n_programs >= 1 && n_assays >= 1 && n_rounds >= 1, "table capacities must include the generic row");
  check(film_hidden >= 1, "film_hidden must be positive");
  check(dropout >= 0 && dropout < 1, "dropout must be in [0, 1)");
  check(hyper_rank >= 1, "hyper_rank must be positive");
  check(!tasks.empty(), "at least one task is required");
  for (std::size_t w : head_hidden) check(w >= 1, "head widths must be positive");
  std::set<std::string> names;
  for (const auto& t : tasks) check(!t.name.empty() && names.insert(t.name).second, "task names must be unique");
}

std::string config_to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["hidden"] = c.hidden;
  j["mpnn_layers"] = c.mpnn_layers;
  j["l1_dim"] = c.l1_dim;
  j["l2_dim"] = c.l2_dim;
  j["l3_dim"] = c.l3_dim;
  j["n_programs"] = c.n_programs;
  j["n_assays"] = c.n_assays;
  j["n_rounds"] = c.n_rounds;
  j["film_hidden"] = c.film_hidden;
  j["head_hidden"] = c.head_hidden;
  j["dropout"] = c.dropout;
  j["head_standardize"] = c.head_standardize;
  j["fusion"] = std::string(to_string(c.fusion));
  j["hyper_rank"] = c.hyper_rank;
  auto tasks = nlohmann::ordered_json::array();
  for (const auto& t : c.tasks) {
    tasks.push_back({{"name", t.name}, {"kind", t.kind == TaskKind::Classification ? "classification" : "regression"}});
  }
  j["tasks"] = tasks;
  return j.dump();
}

ModelConfig config_from_json(const std::string& text) {
  ModelConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("hidden", c.hidden);
    get("mpnn_layers", c.mpnn_layers);
    get("l1_dim", c.l1_dim);
    get("l2_dim", c.l2_dim);
    get("l3_dim", c.l3_dim);
    get("n_programs", c.n_programs);
    get("n_assays", c.n_assays);
    get("n_rounds", c.n_rounds);
    get("film_hidden", c.film_hidden);
    get("head_hidden", c.head_hidden);
    get("dropout", c.dropout);
    get("head_standardize", c.head_standardize);
    get("hyper_rank", c.hyper_rank);
    if (j.contains("fusion")) c.fusion = parse_fusion(j.at("fusion").get<std::string>());
    if (j.contains("tasks")) {
      c.tasks.clear();
      for (const auto& t : j.at("tasks")) {
        const std::string kind = t.value("kind", "classification");
        require(kind == "classification" || kind == "regression", ErrorKind::Config, "unknown task kind " + kind);
        c.tasks.push_back({t.at("name").get<std::string>(),
                           kind == "classification" ? TaskKind::Classification : TaskKind::Regression});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("model config JSON: ") + e.what());
  }
  c.validate();
  return c;
}

// ---- batching ----

MolBatch make_batch(std::span<const mol::MolGraph* const> mols) {
  MolBatch b;
  b.n_mols = mols.size();
  std::size_t n_atoms = 0, n_edges = 0;
  for (const auto* m : mols) {
    require(m->num_atoms() > 0, ErrorKind::EmptyMolecule, "molecule has no atoms");
    n_atoms += m->num_atoms();
    n_edges += 2 * m->num_bonds();
  }
  std::vector<double> atoms, edges;
  atoms.reserve(n_atoms * mol::kAtomFeatureDim);
  edges.reserve(n_edges * mol::kBondFeatureDim);
  b.atom_mol.reserve(n_atoms);
  b.edge_src.reserve(n_edges);
  b.edge_dst.reserve(n_edges);
  std::size_t offset = 0;
  for (std::size_t mi = 0; mi < mols.size(); ++mi) {
    const auto& m = *mols[mi];
    const auto& af = m.atom_features().values;
    atoms.insert(atoms.end(), af.begin(), af.end());
    b.atom_mol.insert(b.atom_mol.end(), m.num_atoms(), mi);
    for (std::size_t e = 0; e < m.num_bonds(); ++e) {
      const auto& bond = m.bond(e);
      const auto row = m.bond_features().row(e);
      for (int dir = 0; dir < 2; ++dir) {
        b.edge_src.push_back(offset + static_cast<std::size_t>(dir == 0 ? bond.begin : bond.end));
        b.edge_dst.push_back(offset + static_cast<std::size_t>(dir == 0 ? bond.end : bond.begin));
        edges.insert(edges.end(), row.begin(), row.end());
      }
    }
    offset += m.num_atoms();
  }
  b.atom_features = Tensor::from(n_atoms, mol::kAtomFeatureDim, std::move(atoms));
  b.edge_features = Tensor::from(n_edges, mol::kBondFeatureDim, std::move(edges));
  return b;
}

MolBatch make_batch(const mol::MolGraph& m) {
  const mol::MolGraph* p = &m;
  return make_batch(std::span<const mol::MolGraph* const>(&p, 1));
}

// ---- construction ----

Tensor NestModel::add_param(const std::string& name, Group group, std::size_t rows, std::size_t cols,
                            std::uint64_t seed, int init) {
  std::vector<double> v(rows * cols, 0.0);
  Rng rng(derive_seed(seed, name));
  switch (init) {
    case kUniformFanIn: {
      const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
      for (double& x : v) x = rng.uniform(-bound, bound);
      break;
    }
    case kOnes: std::fill(v.begin(), v.end(), 1.0); break;
    case kEmbedding:
      for (double& x : v) x = rng.normal();
      break;
    default: break;
  }
  Tensor t = Tensor::param(rows, cols, std::move(v));
  index_[name] = params_.size();
  params_.push_back({name, group, t});
  return t;
}

NestModel::NestModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  const std::size_t H = config_.hidden, D = config_.mol_dim(), C = config_.context_dim(), F = config_.film_hidden;
  add_param("mpnn.input.W", Group::Backbone, mol::kAtomFeatureDim, H, seed, kUniformFanIn);
  add_param("mpnn.input.b", Group::Backbone, 1, H, seed, kZeros);
  for (std::size_t t = 0; t < config_.mpnn_layers; ++t) {
    const std::string p = "mpnn." + std::to_string(t) + ".";
    add_param(p + "msg.Wh", Group::Backbone, H, H, seed, kUniformFanIn);
    add_param(p + "msg.We", Group::Backbone, mol::kBondFeatureDim, H, seed, kUniformFanIn);
    add_param(p + "msg.b", Group::Backbone, 1, H, seed, kZeros);
    add_param(p + "gru.Wm", Group::Backbone, H, 3 * H, seed, kUniformFanIn);
    add_param(p + "gru.Uzr", Group::Backbone, H, 2 * H, seed, kUniformFanIn);
    add_param(p + "gru.Un", Group::Backbone, H, H, seed, kUniformFanIn);
    add_param(p + "gru.b", Group::Backbone, 1, 3 * H, seed, kZeros);
  }
  add_param("context.l1", Group::ContextL1, config_.n_programs, config_.l1_dim, seed, kEmbedding);
  add_param("context.l2", Group::ContextL2, config_.n_assays, config_.l2_dim, seed, kEmbedding);
  add_param("context.l3", Group::ContextL3, config_.n_rounds, config_.l3_dim, seed, kEmbedding);
  add_param("context.proj.W", Group::ContextProj, C, C, seed, kUniformFanIn);
  add_param("context.proj.b", Group::ContextProj, 1, C, seed, kZeros);

  const FusionVariant v = config_.fusion;
  // Final layers start at zero with γ bias one, so every conditioned variant starts as the identity.
  for (const char* which : {"gamma", "beta"}) {
    const bool wanted = std::string(which) == "gamma" ? has_gamma(v) : has_beta(v);
    if (!wanted) continue;
    const std::string p = std::string("film.") + which + ".";
    add_param(p + "W1", Group::Fusion, C, F, seed, kUniformFanIn);
    add_param(p + "b1", Group::Fusion, 1, F, seed, kZeros);
    add_param(p + "W2", Group::Fusion, F, D, seed, kZeros);
    add_param(p + "b2", Group::Fusion, 1, D, seed, std::string(which) == "gamma" ? kOnes : kZeros);
  }
  if (is_concat(v)) {
    const Group g = v == FusionVariant::ConcatFrozen ? Group::FrozenProjection : Group::Fusion;
    add_param("fusion.concat.W", g, D + C, D, seed, kUniformFanIn);
    add_param("fusion.concat.b", g, 1, D, seed, kZeros);
  }
  if (v == FusionVariant::Hypernetwork) {
    const std::size_t r = config_.hyper_rank;
    add_param("hyper.A", Group::Fusion, D, r, seed, kUniformFanIn);
    add_param("hyper.B", Group::Fusion, D, r, seed, kUniformFanIn);
    add_param("hyper.W1", Group::Fusion, C, F, seed, kUniformFanIn);
    add_param("hyper.b1", Group::Fusion, 1, F, seed, kZeros);
    add_param("hyper.core.W", Group::Fusion, F, r * r, seed, kZeros);
    add_param("hyper.core.b", Group::Fusion, 1, r * r, seed, kZeros);
    add_param("hyper.bias.W", Group::Fusion, F, D, seed, kZeros);
    add_param("hyper.bias.b", Group::Fusion, 1, D, seed, kZeros);
  }
  for (const auto& task : config_.tasks) {
    const std::string p = "head." + task.name + ".";
    std::size_t in = D;
    for (std::size_t i = 0; i < config_.head_hidden.size(); ++i) {
      const std::size_t out = config_.head_hidden[i];
      const std::string l = p + std::to_string(i) + ".";
      add_param(l + "W", Group::Head, in, out, seed, kUniformFanIn);
      add_param(l + "b", Group::Head, 1, out, seed, kZeros);
      if (config_.head_standardize) {
        add_param(l + "g", Group::Head, 1, out, seed, kOnes);
        add_param(l + "s", Group::Head, 1, out, seed, kZeros);
      }
      in = out;
    }
    add_param(p + "out.W", Group::Head, in, 1, seed, kUniformFanIn);
    add_param(p + "out.b", Group::Head, 1, 1, seed, kZeros);
  }
}

std::size_t NestModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::vector<Tensor> NestModel::group_params(Group g) const {
  std::vector<Tensor> out;
  for (const auto& p : params_) {
    if (p.group == g) out.push_back(p.value);
  }
  return out;
}

const Tensor& NestModel::param(const std::string& name) const {
  const auto it = index_.find(name);
  require(it != index_.end(), ErrorKind::Internal, "no parameter named " + name);
  return params_[it->second].value;
}

std::size_t NestModel::task_index(const std::string& name) const {
  for (std::size_t i = 0; i < config_.tasks.size(); ++i) {
    if (config_.tasks[i].name == name) return i;
  }
  fail(ErrorKind::UnknownTask, "no head for task '" + name + "'");
}

// ---- forward pieces ----

Tensor NestModel::linear(const Tensor& x, const std::string& prefix) const {
  return tensor::matmul(x, param(prefix + "W")) + param(prefix + "b");
}

Tensor NestModel::mlp2(const Tensor& x, const std::string& prefix) const {
  const Tensor hidden = tensor::relu(tensor::matmul(x, param(prefix + "W1")) + param(prefix + "b1"));
  return tensor::matmul(hidden, param(prefix + "W2")) + param(prefix + "b2");
}

Tensor NestModel::encode(const MolBatch& b) const {
  using namespace tensor;
  require(b.n_mols > 0, ErrorKind::EmptyMolecule, "encode: empty batch");
  const std::size_t H = config_.hidden;
  const std::size_t n_atoms = b.atom_features.rows();
  Tensor h = relu(linear(b.atom_features, "mpnn.input."));
  for (std::size_t t = 0; t < config_.mpnn_layers; ++t) {
    const std::string p = "mpnn." + std::to_string(t) + ".";
    // Linear message on [h_u ‖ e_uv], split so the state product is computed per atom, not per edge.
    const Tensor per_edge = gather_rows(matmul(h, param(p + "msg.Wh")), b.edge_src) +
                            matmul(b.edge_features, param(p + "msg.We")) + param(p + "msg.b");
    const Tensor m = scatter_add_rows(per_edge, b.edge_dst, n_atoms);
    const Tensor gm = matmul(m, param(p + "gru.Wm")) + param(p + "gru.b");
    const Tensor gh = matmul(h, param(p + "gru.Uzr"));
    const Tensor z = sigmoid(slice(gm, 1, 0, H) + slice(gh, 1, 0, H));
    const Tensor r = sigmoid(slice(gm, 1, H, H) + slice(gh, 1, H, H));
    const Tensor n = tanh(slice(gm, 1, 2 * H, H) + matmul(r * h, param(p + "gru.Un")));
    h = n + z * (h - n);
  }
  return concat({segment_mean(h, b.atom_mol, b.n_mols), segment_max(h, b.atom_mol, b.n_mols)}, 1);
}

Tensor NestModel::embed_context(std::span<const ContextTuple> contexts) const {
  std::vector<std::size_t> p, a, r;
  for (const auto& c : contexts) {
    auto check = [](int id, std::size_t cap, const char* level) {
      require(id >= 0 && static_cast<std::size_t>(id) < cap, ErrorKind::IdOutOfRange,
              std::string(level) + " id " + std::to_string(id) + " outside table of " + std::to_string(cap) + " rows");
    };
    check(c.program, config_.n_programs, "program");
    check(c.assay, config_.n_assays, "assay");
    check(c.round, config_.n_rounds, "round");
    p.push_back(static_cast<std::size_t>(c.program));
    a.push_back(static_cast<std::size_t>(c.assay));
    r.push_back(static_cast<std::size_t>(c.round));
  }
  const Tensor joined = tensor::concat({tensor::gather_rows(param("context.l1"), p),
                                        tensor::gather_rows(param("context.l2"), a),
                                        tensor::gather_rows(param("context.l3"), r)},
                                       1);
  return linear(joined, "context.proj.");
}

std::pair<Tensor, Tensor> NestModel::film_parameters(const Tensor& c_vec) const {
  const std::size_t B = c_vec.rows(), D = config_.mol_dim();
  const FusionVariant v = config_.fusion;
  Tensor gamma = has_gamma(v) ? mlp2(c_vec, "film.gamma.") : Tensor::full(B, D, 1.0);
  Tensor beta = has_beta(v) ? mlp2(c_vec, "film.beta.") : Tensor::zeros(B, D);
  return {gamma, beta};
}

Tensor NestModel::fuse(const Tensor& h, const Tensor& c_vec) const {
  using namespace tensor;
  switch (config_.fusion) {
    case FusionVariant::None: return h;
    case FusionVariant::Additive: return h + mlp2(c_vec, "film.beta.");
    case FusionVariant::Multiplicative: return h * mlp2(c_vec, "film.gamma.");
    case FusionVariant::FiLM: return h * mlp2(c_vec, "film.gamma.") + mlp2(c_vec, "film.beta.");
    case FusionVariant::ConcatFrozen:
    case FusionVariant::ConcatTrained: return linear(concat({h, c_vec}, 1), "fusion.concat.");
    case FusionVariant::Hypernetwork: {
      // W(c) = I + A·G(c)·Bᵀ with a per-sample r×r core G(c), plus a context bias.
      const std::size_t r = config_.hyper_rank;
      const Tensor hidden = relu(matmul(c_vec, param("hyper.W1")) + param("hyper.b1"));
      const Tensor core = matmul(hidden, param("hyper.core.W")) + param("hyper.core.b");
      const Tensor bias = matmul(hidden, param("hyper.bias.W")) + param("hyper.bias.b");
      const Tensor t = matmul(h, param("hyper.B"));
      Tensor s;
      for (std::size_t k = 0; k < r; ++k) {
        const Tensor term = slice(t, 1, k, 1) * slice(core, 1, k * r, r);
        s = k == 0 ? term : s + term;
      }
      return h + matmul_nt(s, param("hyper.A")) + bias;
    }
  }
  fail(ErrorKind::Internal, "unhandled fusion variant");
}

Tensor NestModel::head(std::size_t task, const Tensor& x, Mode mode, Rng* rng) const {
  using namespace tensor;
  require(task < config_.tasks.size(), ErrorKind::UnknownTask, "task index " + std::to_string(task) + " has no head");
  const std::string p = "head." + config_.tasks[task].name + ".";
  Tensor a = x;
  for (std::size_t i = 0; i < config_.head_hidden.size(); ++i) {
    const std::string l = p + std::to_string(i) + ".";
    a = linear(a, l);
    if (config_.head_standardize) {
      const Tensor centered = a - mean(a, 1);
      const Tensor sd = sqrt(add_scalar(mean(square(centered), 1), kStandardizeEps));
      a = centered / sd * param(l + "g") + param(l + "s");
    }
    a = relu(a);
    if (mode == Mode::Train && config_.dropout > 0) {
      require(rng != nullptr, ErrorKind::Internal, "training-mode forward needs a dropout generator");
      a = dropout(a, config_.dropout, *rng);
    }
  }
  return linear(a, p + "out.");
}

Tensor NestModel::forward(const MolBatch& batch, std::span<const ContextTuple> contexts, std::size_t task, Mode mode,
                          Rng* rng) const {
  return forward_embedded(encode(batch), contexts, task, mode, rng);
}

Tensor NestModel::forward_embedded(const Tensor& h_mol, std::span<const ContextTuple> contexts, std::size_t task,
                                   Mode mode, Rng* rng) const {
  require(h_mol.rows() == contexts.size(), ErrorKind::Shape,
          std::to_string(h_mol.rows()) + " molecules but " + std::to_string(contexts.size()) + " contexts");
  const Tensor h_mod =
      config_.fusion == FusionVariant::None ? h_mol : fuse(h_mol, embed_context(contexts));
  return head(task, h_mod, mode, rng);
}

double NestModel::predict(const mol::MolGraph& m, const ContextTuple& c, const std::string& task) const {
  const std::size_t t = task_index(task);
  return forward(make_batch(m), std::span<const ContextTuple>(&c, 1), t).item();
}

FilmStatistics NestModel::film_statistics(std::span<const ContextTuple> contexts, std::span<const int> families) const {
  FilmStatistics out;
  if (contexts.empty()) return out;
  const auto [gamma, beta] = film_parameters(embed_context(contexts));
  const std::size_t D = config_.mol_dim();
  auto moments = [D](std::span<const double> row) {
    double m = 0;
    for (double v : row) m += v;
    m /= static_cast<double>(D);
    double ss = 0;
    for (double v : row) ss += (v - m) * (v - m);
    return std::pair{m, std::sqrt(ss / static_cast<double>(D))};
  };
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    ContextFilmStats s;
    std::tie(s.gamma_mean, s.gamma_std) = moments(gamma.data().subspan(i * D, D));
    std::tie(s.beta_mean, s.beta_std) = moments(beta.data().subspan(i * D, D));
    out.per_context.push_back(s);
  }
  if (!families.empty()) {
    require(families.size() == contexts.size(), ErrorKind::Shape, "one family label per context is required");
    std::map<int, std::vector<double>> groups;
    for (std::size_t i = 0; i < contexts.size(); ++i) groups[families[i]].push_back(out.per_context[i].gamma_mean);
    std::vector<std::vector<double>> g;
    for (auto& [f, values] : groups) g.push_back(std::move(values));
    out.family_f = eval::one_way_anova_f(g);
  }
  return out;
}

// ---- persistence ----

tensor::Checkpoint NestModel::to_checkpoint(const std::string& extra_manifest) const {
  tensor::Checkpoint ck;
  nlohmann::ordered_json manifest;
  manifest["format"] = "nestdrug-model";
  manifest["model_config"] = nlohmann::ordered_json::parse(config_to_json(config_));
  manifest["parameter_count"] = parameter_count();
  manifest["extra"] = nlohmann::ordered_json::parse(extra_manifest);
  ck.manifest_json = manifest.dump();
  for (const auto& p : params_) {
    ck.arrays[p.name] = Tensor::from(p.value.rows(), p.value.cols(),
                                     std::vector<double>(p.value.data().begin(), p.value.data().end()));
  }
  return ck;
}

NestModel NestModel::from_checkpoint(const tensor::Checkpoint& ck) {
  std::string config_json;
  try {
    const auto manifest = nlohmann::json::parse(ck.manifest_json);
    config_json = manifest.at("model_config").dump();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Data, std::string("checkpoint manifest: ") + e.what());
  }
  NestModel m(config_from_json(config_json), 0);
  for (auto& p : m.params_) {
    const auto it = ck.arrays.find(p.name);
    require(it != ck.arrays.end(), ErrorKind::Data, "checkpoint lacks parameter " + p.name);
    require(it->second.rows() == p.value.rows() && it->second.cols() == p.value.cols(), ErrorKind::Shape,
            "checkpoint parameter " + p.name + " has shape " + it->second.shape_string() + ", expected " +
                p.value.shape_string());
    std::copy(it->second.data().begin(), it->second.data().end(), p.value.mutable_data().begin());
  }
  return m;
}

NestModel NestModel::clone() const {
  NestModel copy = *this;
  for (auto& p : copy.params_) {
    p.value = Tensor::param(p.value.rows(), p.value.cols(),
                            std::vector<double>(p.value.data().begin(), p.value.data().end()));
  }
  return copy;
}

std::size_t NestModel::load_matching(const NestModel& other) {
  std::size_t copied = 0;
  for (auto& p : params_) {
    const auto it = other.index_.find(p.name);
    if (it == other.index_.end()) continue;
    const Tensor& src = other.params_[it->second].value;
    if (src.rows() != p.value.rows() || src.cols() != p.value.cols()) continue;
    std::copy(src.data().begin(), src.data().end(), p.value.mutable_data().begin());
    ++copied;
  }
  return copied;
}

}  // namespace nestdrug::model
