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

#include <span>

#include "nestdrug/molgraph.hpp"

namespace nestdrug::mol::detail {

/// Neutral-atom valence list for the main-group elements we model; empty for metals.
std::span<const int> neutral_valences(int atomic_number);

/// Smallest charge-adjusted valence >= used, or -1 if none exists.
int target_valence(int atomic_number, int charge, int used);

/// Bond order contribution to valence (aromatic bonds count 1).
int valence_contribution(BondOrder order);

}  // namespace nestdrug::mol::detail
