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

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nestdrug/molgraph.hpp"
#include "nestdrug/optim.hpp"
#include "nestdrug/tensor.hpp"

namespace nestdrug {
class Rng;
}

namespace nestdrug::model {

using tensor::Tensor;

enum class FusionVariant { None, ConcatFrozen, ConcatTrained, Additive, Multiplicative, FiLM, Hypernetwork };

std::string_view to_string(FusionVariant v);
/// Case-insensitive name lookup; throws Config for unknown names.
FusionVariant parse_fusion(std::string_view name);

enum class TaskKind { Classification, Regression };

struct TaskSpec {
  std::string name;
  TaskKind kind = TaskKind::Classification;
};

/// Parameter groups used by the optimizer phases.
enum class Group { Backbone, ContextL1, ContextL2, ContextL3, ContextProj, Fusion, FrozenProjection, Head };
std::string_view to_string(Group g);

struct ModelConfig {
  std::size_t hidden = 256;  // MPNN state width d; the pooled molecule vector is 2d
  std::size_t mpnn_layers = 6;
  std::size_t l1_dim = 128;
  std::size_t l2_dim = 64;
  std::size_t l3_dim = 32;
  std::size_t n_programs = 16;  // table capacities including the generic row 0
  std::size_t n_assays = 8;
  std::size_t n_rounds = 8;
  std::size_t film_hidden = 256;
  std::vector<std::size_t> head_hidden = {256, 128};
  double dropout = 0.1;
  bool head_standardize = true;  // per-sample standardization in place of batch norm
  FusionVariant fusion = FusionVariant::FiLM;
  std::size_t hyper_rank = 16;
  std::vector<TaskSpec> tasks = {{"activity", TaskKind::Classification}};

  [[nodiscard]] std::size_t context_dim() const { return l1_dim + l2_dim + l3_dim; }
  [[nodiscard]] std::size_t mol_dim() const { return 2 * hidden; }
  void validate() const;
};

std::string config_to_json(const ModelConfig& c);
ModelConfig config_from_json(const std::string& json);

struct ContextTuple {
  int program = 0;
  int assay = 0;
  int round = 0;
  bool operator==(const ContextTuple&) const = default;
};

/// Several molecules flattened into one disjoint graph.
struct MolBatch {
  Tensor atom_features;  // N×70
  Tensor edge_features;  // 2E×9, one row per directed edge
  std::vector<std::size_t> edge_src;
  std::vector<std::size_t> edge_dst;
  std::vector<std::size_t> atom_mol;  // molecule index of each atom
  std::size_t n_mols = 0;
};

/// Throws EmptyMolecule for a molecule without atoms.
MolBatch make_batch(std::span<const mol::MolGraph* const> mols);
MolBatch make_batch(const mol::MolGraph& m);

struct NamedParam {
  std::string name;
  Group group;
  Tensor value;
};

struct ContextFilmStats {
  double gamma_mean = 1, gamma_std = 0, beta_mean = 0, beta_std = 0;
};

struct FilmStatistics {
  std::vector<ContextFilmStats> per_context;
  std::optional<double> family_f;  // one-way F of γ means across families
};

enum class Mode { Eval, Train };

class NestModel {
 public:
  /// Every parameter is initialized from its own stream derived from (seed, name), so
  /// models sharing a seed share every parameter they have in common.
  NestModel(ModelConfig config, std::uint64_t seed);

  [[nodiscard]] const ModelConfig& config() const { return config_; }
  [[nodiscard]] const std::vector<NamedParam>& params() const { return params_; }
  [[nodiscard]] std::size_t parameter_count() const;
  [[nodiscard]] std::vector<Tensor> group_params(Group g) const;
  [[nodiscard]] const Tensor& param(const std::string& name) const;
  [[nodiscard]] std::size_t task_index(const std::string& name) const;

  /// MPNN with concat(mean, max) pooling: n_mols × 2d.
  Tensor encode(const MolBatch& batch) const;
  /// W_c·[e_p ‖ e_a ‖ e_r] + b_c per context: B × context_dim.
  Tensor embed_context(std::span<const ContextTuple> contexts) const;
  Tensor fuse(const Tensor& h_mol, const Tensor& c_vec) const;
  /// Per-context γ(c), β(c) (B × 2d each); identity values for variants without them.
  std::pair<Tensor, Tensor> film_parameters(const Tensor& c_vec) const;
  /// Task head: B × 1 logits (classification) or values (regression).
  Tensor head(std::size_t task, const Tensor& h_mod, Mode mode, Rng* rng) const;

  /// head(fuse(encode, embed)); rng is required in Train mode when dropout > 0.
  Tensor forward(const MolBatch& batch, std::span<const ContextTuple> contexts, std::size_t task,
                 Mode mode = Mode::Eval, Rng* rng = nullptr) const;
  /// Same, starting from precomputed molecule embeddings.
  Tensor forward_embedded(const Tensor& h_mol, std::span<const ContextTuple> contexts, std::size_t task,
                          Mode mode = Mode::Eval, Rng* rng = nullptr) const;

  double predict(const mol::MolGraph& m, const ContextTuple& c, const std::string& task) const;

  /// γ/β summary per context; family_f when families are given (one label per context).
  FilmStatistics film_statistics(std::span<const ContextTuple> contexts,
                                 std::span<const int> families = {}) const;

  [[nodiscard]] tensor::Checkpoint to_checkpoint(const std::string& extra_manifest = "{}") const;
  static NestModel from_checkpoint(const tensor::Checkpoint& ckpt);
  /// Deep copy of all parameter values.
  [[nodiscard]] NestModel clone() const;
  /// Copies every parameter whose name and shape match one in `other`; returns how many.
  /// Used to start a fusion variant from a checkpoint trained under another variant.
  std::size_t load_matching(const NestModel& other);

 private:
  Tensor add_param(const std::string& name, Group group, std::size_t rows, std::size_t cols, std::uint64_t seed,
                   int init);
  Tensor linear(const Tensor& x, const std::string& prefix) const;
  Tensor mlp2(const Tensor& x, const std::string& prefix) const;

  ModelConfig config_;
  std::vector<NamedParam> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace nestdrug::model
