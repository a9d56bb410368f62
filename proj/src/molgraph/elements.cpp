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

#include <array>

#include "nestdrug/errors.hpp"
#include "nestdrug/molgraph.hpp"

namespace nestdrug::mol {

namespace {

// Standard atomic weights and Pauling electronegativities.
constexpr std::array<ElementInfo, 35> kElements{{
    {"H", 1, 1.008, 2.20, 1, 1},      {"Li", 3, 6.94, 0.98, 2, 1},
    {"B", 5, 10.81, 2.04, 2, 13},     {"C", 6, 12.011, 2.55, 2, 14},
    {"N", 7, 14.007, 3.04, 2, 15},    {"O", 8, 15.999, 3.44, 2, 16},
    {"F", 9, 18.998, 3.98, 2, 17},    {"Na", 11, 22.990, 0.93, 3, 1},
    {"Mg", 12, 24.305, 1.31, 3, 2},   {"Al", 13, 26.982, 1.61, 3, 13},
    {"Si", 14, 28.085, 1.90, 3, 14},  {"P", 15, 30.974, 2.19, 3, 15},
    {"S", 16, 32.06, 2.58, 3, 16},    {"Cl", 17, 35.45, 3.16, 3, 17},
    {"K", 19, 39.098, 0.82, 4, 1},    {"Ca", 20, 40.078, 1.00, 4, 2},
    {"Cr", 24, 51.996, 1.66, 4, 6},   {"Mn", 25, 54.938, 1.55, 4, 7},
    {"Fe", 26, 55.845, 1.83, 4, 8},   {"Co", 27, 58.933, 1.88, 4, 9},
    {"Ni", 28, 58.693, 1.91, 4, 10},  {"Cu", 29, 63.546, 1.90, 4, 11},
    {"Zn", 30, 65.38, 1.65, 4, 12},   {"Ge", 32, 72.630, 2.01, 4, 14},
    {"As", 33, 74.922, 2.18, 4, 15},  {"Se", 34, 78.971, 2.55, 4, 16},
    {"Br", 35, 79.904, 2.96, 4, 17},  {"Ag", 47, 107.868, 1.93, 5, 11},
    {"Sn", 50, 118.710, 1.96, 5, 14}, {"Te", 52, 127.60, 2.10, 5, 16},
    {"I", 53, 126.904, 2.66, 5, 17},  {"Pt", 78, 195.084, 2.28, 6, 10},
    {"Au", 79, 196.967, 2.54, 6, 11}, {"Hg", 80, 200.592, 2.00, 6, 12},
    {"Bi", 83, 208.980, 2.02, 6, 15},
}};

}  // namespace

const ElementInfo* element_by_symbol(std::string_view symbol) {
  for (const auto& e : kElements) {
    if (e.symbol == symbol) return &e;
  }
  return nullptr;
}

const ElementInfo& element_by_number(int atomic_number) {
  for (const auto& e : kElements) {
    if (e.atomic_number == atomic_number) return e;
  }
  fail(ErrorKind::Data, "unknown atomic number " + std::to_string(atomic_number));
}

}  // namespace nestdrug::mol
