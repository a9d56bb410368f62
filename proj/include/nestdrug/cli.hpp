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

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "nestdrug/errors.hpp"

namespace nestdrug::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kThresholdExceeded = 2;
inline constexpr int kUsage = 64;
inline constexpr int kData = 65;
inline constexpr int kInternal = 70;

int exit_code(ErrorKind kind);

/// Runs one command line (args[0] is the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args);

/// Lower-case hex SHA-256 of a file's bytes / of a string.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

/// Merges `patch` into `base`. Every key in the patch must already exist in the base
/// with a compatible JSON type; otherwise Config.
void merge_config(nlohmann::json& base, const nlohmann::json& patch, const std::string& where = "");
/// Applies one `dotted.key=value` override. The value is parsed as JSON, falling back to a string.
void apply_override(nlohmann::json& config, const std::string& assignment);

struct SelftestCheck {
  std::string name;
  bool ok = false;
  std::string detail;
};
/// Fast in-process oracle and property checks.
std::vector<SelftestCheck> selftest();

}  // namespace nestdrug::cli
