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

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#ifndef NESTDRUG_TEST_DATA_DIR
#define NESTDRUG_TEST_DATA_DIR "tests/data"
#endif

namespace nestdrug::testing {

inline std::string data_path(const std::string& name) { return std::string(NESTDRUG_TEST_DATA_DIR) + "/" + name; }

/// (smiles, name) pairs from the tab-separated molecule corpus.
inline std::vector<std::pair<std::string, std::string>> load_corpus() {
  std::ifstream in(data_path("corpus.smi"));
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    out.emplace_back(line.substr(0, tab), tab == std::string::npos ? "" : line.substr(tab + 1));
  }
  return out;
}

}  // namespace nestdrug::testing
