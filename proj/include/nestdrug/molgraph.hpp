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
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nestdrug::mol {

inline constexpr std::size_t kAtomFeatureDim = 70;
inline constexpr std::size_t kBondFeatureDim = 9;

enum class BondOrder : std::uint8_t { Single = 0, Double = 1, Triple = 2, Aromatic = 3 };
enum class BondStereo : std::uint8_t { None = 0, E = 1, Z = 2 };
enum class Hybridization : std::uint8_t { SP = 0, SP2 = 1, SP3 = 2, SP3D = 3, SP3D2 = 4 };

struct Atom {
  int atomic_number = 6;
  int formal_charge = 0;
  int hydrogen_count = 0;  // implicit + bracket hydrogens; never graph nodes
  bool aromatic = false;
  bool chiral = false;  // tetrahedral tag present; parity is not tracked

  // Derived by MolGraph from the bond list.
  int degree = 0;  // heavy-atom neighbours
  bool in_ring = false;
  int radical_electrons = 0;
  Hybridization hybridization = Hybridization::SP3;
  std::uint8_t ring_size_mask = 0;  // bit (k - 3) set if on a smallest cycle of size k, k in [3, 8]
};

struct Bond {
  int begin = 0;
  int end = 0;
  BondOrder order = BondOrder::Single;
  BondStereo stereo = BondStereo::None;
  // Neighbours of begin / end that the E/Z label refers to (-1 when no stereo).
  int stereo_begin_ref = -1;
  int stereo_end_ref = -1;

  // Derived.
  bool conjugated = false;
  bool in_ring = false;
};

/// Dense row-major feature matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  [[nodiscard]] double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  [[nodiscard]] std::span<const double> row(std::size_t r) const {
    return {values.data() + r * cols, cols};
  }
  bool operator==(const FeatureMatrix&) const = default;
};

struct Neighbor {
  int atom;
  int bond;
};

/// Undirected molecular graph with perceived ring/conjugation flags and the
/// fixed 70/9-dim featurization. Immutable after construction.
class MolGraph {
 public:
  MolGraph() = default;

  /// Atoms must carry element, charge, hydrogen count, aromatic and chiral
  /// flags; every other field is recomputed. Throws Data/Aromaticity errors.
  MolGraph(std::vector<Atom> atoms, std::vector<Bond> bonds);

  [[nodiscard]] std::size_t num_atoms() const { return atoms_.size(); }
  [[nodiscard]] std::size_t num_bonds() const { return bonds_.size(); }
  [[nodiscard]] const std::vector<Atom>& atoms() const { return atoms_; }
  [[nodiscard]] const std::vector<Bond>& bonds() const { return bonds_; }
  [[nodiscard]] const Atom& atom(std::size_t i) const { return atoms_[i]; }
  [[nodiscard]] const Bond& bond(std::size_t i) const { return bonds_[i]; }
  [[nodiscard]] std::span<const Neighbor> neighbors(std::size_t atom) const;

  [[nodiscard]] const FeatureMatrix& atom_features() const { return atom_features_; }
  [[nodiscard]] const FeatureMatrix& bond_features() const { return bond_features_; }

  /// Returns the molecule with atom i moved to position new_index[i].
  [[nodiscard]] MolGraph permuted(std::span<const int> new_index) const;

  /// Copy with E/Z labels and chirality tags removed.
  [[nodiscard]] MolGraph without_stereo() const;

 private:
  void perceive();

  std::vector<Atom> atoms_;
  std::vector<Bond> bonds_;
  std::vector<std::size_t> adjacency_offsets_;
  std::vector<Neighbor> adjacency_;
  FeatureMatrix atom_features_;
  FeatureMatrix bond_features_;
};

/// Parses the supported SMILES subset. Throws SyntaxError, UnsupportedFeature,
/// ValenceError or AromaticityError.
MolGraph parse_smiles(std::string_view smiles);

struct CanonicalForm {
  std::string text;  // "CF1:" followed by a bracket-atom SMILES string
  bool operator==(const CanonicalForm&) const = default;
  auto operator<=>(const CanonicalForm&) const = default;
};

inline constexpr std::string_view kCanonicalTag = "CF1:";

struct CanonicalOptions {
  bool strip_stereo = false;
};

CanonicalForm canonical_form(const MolGraph& m, CanonicalOptions options = {});

/// Parses the SMILES body of a canonical form back into a molecule.
MolGraph parse_canonical(const CanonicalForm& form);

bool molecule_equal(const MolGraph& a, const MolGraph& b);

/// Writes a SMILES string traversing atoms in the order implied by `ranks`
/// (lowest rank is the root; neighbours visited in increasing rank).
/// With all-distinct canonical ranks this is the canonical serialization.
std::string write_smiles(const MolGraph& m, std::span<const int> ranks);

/// Fixed-layout featurization (also cached on every MolGraph).
std::pair<FeatureMatrix, FeatureMatrix> featurize(const MolGraph& m);

// Atom feature block offsets.
namespace layout {
inline constexpr std::size_t kElement = 0;         // C N O S F Cl Br I P other
inline constexpr std::size_t kDegree = 10;         // 0 1 2 3 4 5+
inline constexpr std::size_t kCharge = 16;         // -2 -1 0 +1 +2
inline constexpr std::size_t kHybridization = 21;  // sp sp2 sp3 sp3d sp3d2
inline constexpr std::size_t kAromatic = 26;
inline constexpr std::size_t kRing = 27;
inline constexpr std::size_t kHydrogens = 28;  // 0 1 2 3 4+
inline constexpr std::size_t kChiral = 33;
inline constexpr std::size_t kMass = 34;
inline constexpr std::size_t kElectronegativity = 35;
inline constexpr std::size_t kPeriod = 36;     // 1 2 3 4 5+
inline constexpr std::size_t kGroup = 41;      // main groups 1 2 13 14 15 16 17 18
inline constexpr std::size_t kRingSize = 49;   // member of ring size 3..8
inline constexpr std::size_t kRadical = 55;    // 0 1 2+
inline constexpr std::size_t kPadding = 58;    // 12 zero columns

inline constexpr std::size_t kBondType = 0;  // single double triple aromatic
inline constexpr std::size_t kBondConjugated = 4;
inline constexpr std::size_t kBondRing = 5;
inline constexpr std::size_t kBondStereo = 6;  // none E Z
}  // namespace layout

/// Element lookup helpers.
struct ElementInfo {
  std::string_view symbol;
  int atomic_number;
  double mass;
  double electronegativity;
  int period;
  int group;  // IUPAC group 1-18
};

const ElementInfo* element_by_symbol(std::string_view symbol);
const ElementInfo& element_by_number(int atomic_number);

}  // namespace nestdrug::mol
