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

#include "valence.hpp"

#include <array>
#include <cstdlib>

namespace nestdrug::mol::detail {

namespace {
constexpr std::array<int, 1> kOne{1};
constexpr std::array<int, 1> kTwo{2};
constexpr std::array<int, 1> kThree{3};
constexpr std::array<int, 1> kFour{4};
constexpr std::array<int, 2> kThreeFive{3, 5};
constexpr std::array<int, 3> kChalcogen{2, 4, 6};
}  // namespace

std::span<const int> neutral_valences(int atomic_number) {
  switch (atomic_number) {
    case 5: return kThree;
    case 6:
    case 14:
    case 32:
    case 50: return kFour;
    case 7:
    case 15:
    case 33: return kThreeFive;
    case 8: return kTwo;
    case 16:
    case 34:
    case 52: return kChalcogen;
    case 9:
    case 17:
    case 35:
    case 53: return kOne;
    default: return {};
  }
}

int target_valence(int atomic_number, int charge, int used) {
  const auto& info = element_by_number(atomic_number);
  for (int v : neutral_valences(atomic_number)) {
    int adjusted = v;
    if (info.group == 13) {
      adjusted = v - charge;
    } else if (info.group == 14) {
      adjusted = v - std::abs(charge);
    } else {
      adjusted = v + charge;
    }
    if (adjusted >= used) return adjusted;
  }
  return -1;
}

int valence_contribution(BondOrder order) {
  switch (order) {
    case BondOrder::Single: return 1;
    case BondOrder::Double: return 2;
    case BondOrder::Triple: return 3;
    case BondOrder::Aromatic: return 1;
  }
  return 1;
}

}  // namespace nestdrug::mol::detail
