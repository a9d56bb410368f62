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
#include <span>
#include <string>
#include <vector>

#include "nestdrug/molgraph.hpp"

namespace nestdrug::fp {

inline constexpr int kDefaultRadius = 2;
inline constexpr int kDefaultBits = 2048;

/// Binary circular fingerprint. Bits are stored in 64-bit words, bit i in word i/64 at position i%64.
class Fingerprint {
 public:
  Fingerprint() = default;
  Fingerprint(int nbits, int radius);

  int nbits() const { return nbits_; }
  int radius() const { return radius_; }
  std::size_t set_count() const { return set_count_; }
  std::span<const std::uint64_t> words() const { return words_; }

  bool test(int bit) const { return (words_[bit >> 6] >> (bit & 63)) & 1u; }
  void set(int bit);

  /// Lowercase hex, byte i holding bits 8i..8i+7 with the lowest bit first.
  std::string to_hex() const;
  static Fingerprint from_hex(const std::string& hex, int nbits, int radius);

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;

 private:
  int nbits_ = 0;
  int radius_ = 0;
  std::size_t set_count_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Environment identifiers for every atom at radius 0..radius, outer index = radius.
std::vector<std::vector<std::uint64_t>> environment_ids(const mol::MolGraph& m, int radius);

Fingerprint morgan_fingerprint(const mol::MolGraph& m, int radius = kDefaultRadius, int nbits = kDefaultBits);

std::size_t intersection_count(const Fingerprint& a, const Fingerprint& b);

/// |a & b| / |a | b|; 1.0 when both are empty.
double tanimoto(const Fingerprint& a, const Fingerprint& b);

struct Neighbor {
  double similarity = 0.0;
  std::size_t index = 0;
};

/// Most similar pool member; ties go to the lowest index.
Neighbor nn_similarity(const Fingerprint& query, std::span<const Fingerprint> pool);

/// Best-neighbour similarity of each test item against the training actives (OpenMP over queries).
std::vector<double> one_nn_scores(std::span<const Fingerprint> train_actives, std::span<const Fingerprint> test);

/// Single-threaded reference for one_nn_scores.
std::vector<double> one_nn_scores_serial(std::span<const Fingerprint> train_actives,
                                         std::span<const Fingerprint> test);

/// Full nearest-neighbour search (OpenMP over queries; output order follows the queries).
std::vector<Neighbor> nn_search(std::span<const Fingerprint> queries, std::span<const Fingerprint> pool);
std::vector<Neighbor> nn_search_serial(std::span<const Fingerprint> queries, std::span<const Fingerprint> pool);

// Fingerprint cache file: optional "# radius=R nbits=N" line, then "<canonical>\t<hex>" per molecule.
struct FingerprintEntry {
  std::string canonical;
  Fingerprint fingerprint;
};

void write_fingerprint_file(std::ostream& out, std::span<const FingerprintEntry> entries);
std::vector<FingerprintEntry> read_fingerprint_file(std::istream& in, int default_radius = kDefaultRadius,
                                                    int default_nbits = kDefaultBits);

}  // namespace nestdrug::fp
