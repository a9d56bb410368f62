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

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nestdrug {

enum class ErrorKind {
  // molgraph
  Syntax,
  UnsupportedFeature,
  Valence,
  Aromaticity,
  // generic argument / shape problems
  Parameter,
  Shape,
  Data,
  Config,
  // autodiff
  NotScalar,
  TapeConsumed,
  MissingGrad,
  // model
  EmptyMolecule,
  IdOutOfRange,
  UnknownTask,
  // training
  EmptyDataset,
  EmptyBatch,
  NonFiniteLoss,
  InsufficientSupport,
  // evaluation
  OneClassOnly,
  NoPositives,
  DegenerateVariance,
  TooFewSamples,
  MissingYear,
  NotNormalized,
  // baselines / audit / dmta / attribution
  EmptyData,
  InsufficientData,
  EmptyPool,
  EmptySet,
  ScorerFailure,
  StepsTooFew,
  ZeroVector,
  // ingestion
  Schema,
  Io,
  NonPositive,
  // cli
  Usage,
  Internal,
};

std::string_view to_string(ErrorKind kind);

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// SMILES grammar violation; carries the 0-based offset into the input.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t position, const std::string& reason);

  [[nodiscard]] std::size_t position() const noexcept { return position_; }
  [[nodiscard]] const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t position_;
  std::string reason_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

/// True for error kinds caused by bad input data (CLI exit code 65).
bool is_data_error(ErrorKind kind);

}  // namespace nestdrug
