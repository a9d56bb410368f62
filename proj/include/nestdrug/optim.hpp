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
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nestdrug/tensor.hpp"

namespace nestdrug::tensor {

struct ParamGroup {
  std::string name;
  std::vector<Tensor> params;
  double lr = 1e-3;
  double weight_decay = 0.0;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// AdamW: decoupled weight decay (p -= lr·wd·p) followed by the bias-corrected Adam update.
/// Groups with lr = 0 are skipped entirely, so their parameters stay bitwise unchanged.
class AdamW {
 public:
  explicit AdamW(std::vector<ParamGroup> groups, AdamConfig config = {});

  void step();
  void zero_grad();

  std::vector<ParamGroup>& groups() { return groups_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }
  ParamGroup* group(const std::string& name);
  std::int64_t step_count() const { return step_; }
  const AdamConfig& config() const { return config_; }

  /// Moment arrays per group/param, for inspection and tests.
  const std::vector<double>& first_moment(std::size_t group, std::size_t param) const { return m_[group][param]; }
  const std::vector<double>& second_moment(std::size_t group, std::size_t param) const { return v_[group][param]; }

 private:
  std::vector<ParamGroup> groups_;
  AdamConfig config_;
  std::int64_t step_ = 0;
  std::vector<std::vector<std::vector<double>>> m_;
  std::vector<std::vector<std::vector<double>>> v_;
};

/// lr_min + ½(lr_max − lr_min)(1 + cos(π·step/total)).
double cosine_lr(std::int64_t step, std::int64_t total, double lr_max, double lr_min);

// ---- NDCK1 checkpoint container ----
// Layout (little-endian): "NDCK1\0\0\0", u64 manifest length, manifest JSON bytes,
// u64 array count, then per array: u32 name length, name bytes, u32 rank (2),
// u64 rows, u64 cols, rows·cols IEEE-754 doubles.
struct Checkpoint {
  std::string manifest_json = "{}";
  std::map<std::string, Tensor> arrays;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace nestdrug::tensor
