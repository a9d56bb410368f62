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

#include "nestdrug/errors.hpp"

namespace nestdrug {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Syntax: return "SyntaxError";
    case ErrorKind::UnsupportedFeature: return "UnsupportedFeature";
    case ErrorKind::Valence: return "ValenceError";
    case ErrorKind::Aromaticity: return "AromaticityError";
    case ErrorKind::Parameter: return "ParameterError";
    case ErrorKind::Shape: return "ShapeError";
    case ErrorKind::Data: return "DataError";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::NotScalar: return "NotScalar";
    case ErrorKind::TapeConsumed: return "TapeConsumed";
    case ErrorKind::MissingGrad: return "MissingGrad";
    case ErrorKind::EmptyMolecule: return "EmptyMolecule";
    case ErrorKind::IdOutOfRange: return "IdOutOfRange";
    case ErrorKind::UnknownTask: return "UnknownTask";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::InsufficientSupport: return "InsufficientSupport";
    case ErrorKind::OneClassOnly: return "OneClassOnly";
    case ErrorKind::NoPositives: return "NoPositives";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::MissingYear: return "MissingYear";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::EmptyData: return "EmptyData";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::EmptyPool: return "EmptyPool";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::ScorerFailure: return "ScorerFailure";
    case ErrorKind::StepsTooFew: return "StepsTooFew";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::Io: return "IoError";
    case ErrorKind::NonPositive: return "NonPositive";
    case ErrorKind::Usage: return "UsageError";
    case ErrorKind::Internal: return "InternalError";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

SyntaxError::SyntaxError(std::size_t position, const std::string& reason)
    : Error(ErrorKind::Syntax, "at position " + std::to_string(position) + ": " + reason),
      position_(position),
      reason_(reason) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

bool is_data_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::Internal:
    case ErrorKind::NotScalar:
    case ErrorKind::TapeConsumed:
    case ErrorKind::MissingGrad:
      return false;
    default:
      return true;
  }
}

}  // namespace nestdrug
