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

#include "nestdrug/optim.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "nestdrug/errors.hpp"

namespace nestdrug::tensor {

AdamW::AdamW(std::vector<ParamGroup> groups, AdamConfig config) : groups_(std::move(groups)), config_(config) {
  m_.resize(groups_.size());
  v_.resize(groups_.size());
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    require(groups_[g].lr >= 0.0 && groups_[g].weight_decay >= 0.0, ErrorKind::Parameter,
            "param group '" + groups_[g].name + "' has a negative rate");
    for (const auto& p : groups_[g].params) {
      m_[g].emplace_back(p.size(), 0.0);
      v_[g].emplace_back(p.size(), 0.0);
    }
  }
}

ParamGroup* AdamW::group(const std::string& name) {
  for (auto& g : groups_) {
    if (g.name == name) return &g;
  }
  return nullptr;
}

void AdamW::zero_grad() {
  for (auto& g : groups_) {
    for (auto& p : g.params) p.zero_grad();
  }
}

void AdamW::step() {
  ++step_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    auto& group = groups_[gi];
    for (std::size_t pi = 0; pi < group.params.size(); ++pi) {
      auto& p = group.params[pi];
      require(p.has_grad(), ErrorKind::MissingGrad,
              "parameter " + std::to_string(pi) + " of group '" + group.name + "' has no gradient");
    }
    if (group.lr == 0.0) continue;
    for (std::size_t pi = 0; pi < group.params.size(); ++pi) {
      auto& p = group.params[pi];
      auto value = p.mutable_data();
      const auto grad = p.grad();
      auto& m = m_[gi][pi];
      auto& v = v_[gi][pi];
      const double decay = group.lr * group.weight_decay;
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (decay != 0.0) value[i] -= decay * value[i];
        const double g = grad[i];
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        value[i] -= group.lr * mhat / (std::sqrt(vhat) + config_.eps);
      }
    }
  }
}

double cosine_lr(std::int64_t step, std::int64_t total, double lr_max, double lr_min) {
  require(total > 0, ErrorKind::Parameter, "cosine_lr: total must be positive");
  require(step >= 0 && step <= total, ErrorKind::Parameter,
          "cosine_lr: step " + std::to_string(step) + " outside [0, " + std::to_string(total) + "]");
  if (step == total) return lr_min;
  return lr_min + 0.5 * (lr_max - lr_min) *
                      (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / static_cast<double>(total)));
}

namespace {

constexpr char kMagic[8] = {'N', 'D', 'C', 'K', '1', 0, 0, 0};

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(static_cast<bool>(in), ErrorKind::Data, "truncated checkpoint");
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, ckpt.manifest_json.size());
  out.write(ckpt.manifest_json.data(), static_cast<std::streamsize>(ckpt.manifest_json.size()));
  put<std::uint64_t>(out, ckpt.arrays.size());
  for (const auto& [name, t] : ckpt.arrays) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, t.rows());
    put<std::uint64_t>(out, t.cols());
    for (double v : t.data()) put<double>(out, v);
  }
  require(static_cast<bool>(out), ErrorKind::Io, "failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  require(static_cast<bool>(in) && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0, ErrorKind::Data,
          "not an NDCK1 checkpoint");
  Checkpoint ckpt;
  const auto manifest_len = get<std::uint64_t>(in);
  require(manifest_len < (1ull << 32), ErrorKind::Data, "checkpoint manifest length is implausible");
  ckpt.manifest_json.resize(manifest_len);
  in.read(ckpt.manifest_json.data(), static_cast<std::streamsize>(manifest_len));
  require(static_cast<bool>(in), ErrorKind::Data, "truncated checkpoint manifest");
  const auto count = get<std::uint64_t>(in);
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto name_len = get<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rank = get<std::uint32_t>(in);
    require(rank == 2, ErrorKind::Data, "checkpoint array '" + name + "' has unsupported rank");
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    require(rows * cols < (1ull << 32), ErrorKind::Data, "checkpoint array '" + name + "' is implausibly large");
    std::vector<double> values(rows * cols);
    for (double& v : values) v = get<double>(in);
    ckpt.arrays.emplace(name, Tensor::from(rows, cols, std::move(values)));
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot open " + path + " for writing");
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open " + path);
  return read_checkpoint(in);
}

}  // namespace nestdrug::tensor
