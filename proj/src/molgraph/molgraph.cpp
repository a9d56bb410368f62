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

#include <algorithm>
#include <deque>
#include <functional>

#include "nestdrug/errors.hpp"
#include "nestdrug/molgraph.hpp"
#include "valence.hpp"

namespace nestdrug::mol {

namespace {

std::size_t element_slot(int z) {
  switch (z) {
    case 6: return 0;
    case 7: return 1;
    case 8: return 2;
    case 16: return 3;
    case 9: return 4;
    case 17: return 5;
    case 35: return 6;
    case 53: return 7;
    case 15: return 8;
    default: return 9;
  }
}

int main_group_slot(int group) {
  switch (group) {
    case 1: return 0;
    case 2: return 1;
    case 13: return 2;
    case 14: return 3;
    case 15: return 4;
    case 16: return 5;
    case 17: return 6;
    case 18: return 7;
    default: return -1;
  }
}

}  // namespace

MolGraph::MolGraph(std::vector<Atom> atoms, std::vector<Bond> bonds)
    : atoms_(std::move(atoms)), bonds_(std::move(bonds)) {
  const int n = static_cast<int>(atoms_.size());
  for (const auto& a : atoms_) {
    require(a.hydrogen_count >= 0, ErrorKind::Data, "negative hydrogen count");
  }
  for (std::size_t i = 0; i < bonds_.size(); ++i) {
    const auto& b = bonds_[i];
    require(b.begin >= 0 && b.begin < n && b.end >= 0 && b.end < n, ErrorKind::Data,
            "bond endpoint out of range");
    require(b.begin != b.end, ErrorKind::Data, "self bond");
    for (std::size_t j = 0; j < i; ++j) {
      const auto& o = bonds_[j];
      require(!((o.begin == b.begin && o.end == b.end) || (o.begin == b.end && o.end == b.begin)),
              ErrorKind::Data, "duplicate bond");
    }
  }
  perceive();
  auto [af, bf] = featurize(*this);
  atom_features_ = std::move(af);
  bond_features_ = std::move(bf);
}

std::span<const Neighbor> MolGraph::neighbors(std::size_t atom) const {
  return {adjacency_.data() + adjacency_offsets_[atom],
          adjacency_offsets_[atom + 1] - adjacency_offsets_[atom]};
}

void MolGraph::perceive() {
  const std::size_t n = atoms_.size();
  // CSR adjacency; neighbours listed in bond order for determinism.
  std::vector<std::size_t> counts(n + 1, 0);
  for (const auto& b : bonds_) {
    ++counts[b.begin + 1];
    ++counts[b.end + 1];
  }
  for (std::size_t i = 0; i < n; ++i) counts[i + 1] += counts[i];
  adjacency_offsets_ = counts;
  adjacency_.assign(bonds_.size() * 2, {});
  std::vector<std::size_t> fill(counts.begin(), counts.end() - 1);
  for (std::size_t i = 0; i < bonds_.size(); ++i) {
    const auto& b = bonds_[i];
    adjacency_[fill[b.begin]++] = {b.end, static_cast<int>(i)};
    adjacency_[fill[b.end]++] = {b.begin, static_cast<int>(i)};
  }

  for (std::size_t a = 0; a < n; ++a) {
    atoms_[a].degree = static_cast<int>(adjacency_offsets_[a + 1] - adjacency_offsets_[a]);
    atoms_[a].in_ring = false;
    atoms_[a].ring_size_mask = 0;
  }

  // Ring bonds are exactly the non-bridges.
  std::vector<int> disc(n, -1), low(n, 0);
  int timer = 0;
  std::function<void(int, int)> dfs = [&](int v, int parent_bond) {
    disc[v] = low[v] = timer++;
    for (const auto& nb : neighbors(v)) {
      if (nb.bond == parent_bond) continue;
      if (disc[nb.atom] < 0) {
        dfs(nb.atom, nb.bond);
        low[v] = std::min(low[v], low[nb.atom]);
        bonds_[nb.bond].in_ring = low[nb.atom] <= disc[v];
      } else {
        low[v] = std::min(low[v], disc[nb.atom]);
        bonds_[nb.bond].in_ring = true;
      }
    }
  };
  for (auto& b : bonds_) b.in_ring = false;
  for (std::size_t v = 0; v < n; ++v) {
    if (disc[v] < 0) dfs(static_cast<int>(v), -1);
  }

  // Smallest cycle through each ring bond, sizes 3..8.
  std::vector<int> dist(n);
  for (std::size_t bi = 0; bi < bonds_.size(); ++bi) {
    auto& b = bonds_[bi];
    if (!b.in_ring) continue;
    atoms_[b.begin].in_ring = true;
    atoms_[b.end].in_ring = true;
    std::fill(dist.begin(), dist.end(), -1);
    std::deque<int> queue{b.begin};
    dist[b.begin] = 0;
    while (!queue.empty() && dist[b.end] < 0) {
      const int v = queue.front();
      queue.pop_front();
      if (dist[v] >= 7) continue;
      for (const auto& nb : neighbors(v)) {
        if (nb.bond == static_cast<int>(bi) || dist[nb.atom] >= 0) continue;
        dist[nb.atom] = dist[v] + 1;
        queue.push_back(nb.atom);
      }
    }
    if (dist[b.end] > 0) {
      const int size = dist[b.end] + 1;
      if (size >= 3 && size <= 8) {
        atoms_[b.begin].ring_size_mask |= static_cast<std::uint8_t>(1u << (size - 3));
        atoms_[b.end].ring_size_mask |= static_cast<std::uint8_t>(1u << (size - 3));
      }
    }
  }

  for (std::size_t a = 0; a < n; ++a) {
    if (atoms_[a].aromatic && !atoms_[a].in_ring) {
      fail(ErrorKind::Aromaticity, "aromatic atom " + std::to_string(a) + " is not in a ring");
    }
  }
  for (const auto& b : bonds_) {
    if (b.order == BondOrder::Aromatic && !b.in_ring) {
      fail(ErrorKind::Aromaticity, "aromatic bond outside a ring");
    }
  }

  // Unsaturation, hybridization and radicals.
  std::vector<bool> unsaturated(n, false);
  std::vector<int> used(n, 0), doubles(n, 0), triples(n, 0), aromatic_bonds(n, 0);
  for (const auto& b : bonds_) {
    for (int end : {b.begin, b.end}) {
      used[end] += detail::valence_contribution(b.order);
      if (b.order == BondOrder::Double) ++doubles[end];
      if (b.order == BondOrder::Triple) ++triples[end];
      if (b.order == BondOrder::Aromatic) ++aromatic_bonds[end];
      if (b.order != BondOrder::Single) unsaturated[end] = true;
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    auto& atom = atoms_[a];
    if (triples[a] > 0 || doubles[a] >= 2) {
      atom.hybridization = Hybridization::SP;
    } else if (doubles[a] == 1 || aromatic_bonds[a] > 0 || atom.aromatic) {
      atom.hybridization = Hybridization::SP2;
    } else {
      const int steric = atom.degree + atom.hydrogen_count;
      atom.hybridization = steric <= 4   ? Hybridization::SP3
                           : steric == 5 ? Hybridization::SP3D
                                         : Hybridization::SP3D2;
    }
    atom.radical_electrons = 0;
    if (!atom.aromatic && !detail::neutral_valences(atom.atomic_number).empty()) {
      const int total = used[a] + atom.hydrogen_count;
      const int target = detail::target_valence(atom.atomic_number, atom.formal_charge, total);
      if (target > total) atom.radical_electrons = target - total;
    }
  }

  for (auto& b : bonds_) {
    if (b.order == BondOrder::Aromatic) {
      b.conjugated = true;
    } else if (b.order == BondOrder::Single) {
      b.conjugated = unsaturated[b.begin] && unsaturated[b.end];
    } else {
      b.conjugated = false;
      for (int end : {b.begin, b.end}) {
        for (const auto& nb : neighbors(end)) {
          const auto& other = bonds_[nb.bond];
          if (&other != &b && other.order == BondOrder::Single && unsaturated[nb.atom]) {
            b.conjugated = true;
          }
        }
      }
    }
  }
}

std::pair<FeatureMatrix, FeatureMatrix> featurize(const MolGraph& m) {
  FeatureMatrix af{m.num_atoms(), kAtomFeatureDim, std::vector<double>(m.num_atoms() * kAtomFeatureDim, 0.0)};
  for (std::size_t a = 0; a < m.num_atoms(); ++a) {
    const Atom& atom = m.atom(a);
    const ElementInfo& info = element_by_number(atom.atomic_number);
    double* row = af.values.data() + a * kAtomFeatureDim;
    row[layout::kElement + element_slot(atom.atomic_number)] = 1.0;
    row[layout::kDegree + static_cast<std::size_t>(std::min(atom.degree, 5))] = 1.0;
    row[layout::kCharge + static_cast<std::size_t>(std::clamp(atom.formal_charge, -2, 2) + 2)] = 1.0;
    row[layout::kHybridization + static_cast<std::size_t>(atom.hybridization)] = 1.0;
    row[layout::kAromatic] = atom.aromatic ? 1.0 : 0.0;
    row[layout::kRing] = atom.in_ring ? 1.0 : 0.0;
    row[layout::kHydrogens + static_cast<std::size_t>(std::min(atom.hydrogen_count, 4))] = 1.0;
    row[layout::kChiral] = atom.chiral ? 1.0 : 0.0;
    row[layout::kMass] = info.mass / 100.0;
    row[layout::kElectronegativity] = info.electronegativity / 4.0;
    row[layout::kPeriod + static_cast<std::size_t>(std::min(info.period, 5) - 1)] = 1.0;
    if (const int g = main_group_slot(info.group); g >= 0) row[layout::kGroup + g] = 1.0;
    for (int k = 0; k < 6; ++k) {
      if (atom.ring_size_mask & (1u << k)) row[layout::kRingSize + k] = 1.0;
    }
    row[layout::kRadical + static_cast<std::size_t>(std::min(atom.radical_electrons, 2))] = 1.0;
  }

  FeatureMatrix bf{m.num_bonds(), kBondFeatureDim, std::vector<double>(m.num_bonds() * kBondFeatureDim, 0.0)};
  for (std::size_t b = 0; b < m.num_bonds(); ++b) {
    const Bond& bond = m.bond(b);
    double* row = bf.values.data() + b * kBondFeatureDim;
    row[layout::kBondType + static_cast<std::size_t>(bond.order)] = 1.0;
    row[layout::kBondConjugated] = bond.conjugated ? 1.0 : 0.0;
    row[layout::kBondRing] = bond.in_ring ? 1.0 : 0.0;
    row[layout::kBondStereo + static_cast<std::size_t>(bond.stereo)] = 1.0;
  }
  return {std::move(af), std::move(bf)};
}

MolGraph MolGraph::permuted(std::span<const int> new_index) const {
  require(new_index.size() == atoms_.size(), ErrorKind::Shape, "permutation size mismatch");
  std::vector<Atom> atoms(atoms_.size());
  std::vector<bool> seen(atoms_.size(), false);
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const int j = new_index[i];
    require(j >= 0 && static_cast<std::size_t>(j) < atoms_.size() && !seen[j], ErrorKind::Parameter,
            "not a permutation");
    seen[j] = true;
    atoms[j] = atoms_[i];
  }
  std::vector<Bond> bonds = bonds_;
  for (auto& b : bonds) {
    b.begin = new_index[b.begin];
    b.end = new_index[b.end];
    if (b.stereo_begin_ref >= 0) b.stereo_begin_ref = new_index[b.stereo_begin_ref];
    if (b.stereo_end_ref >= 0) b.stereo_end_ref = new_index[b.stereo_end_ref];
  }
  return MolGraph(std::move(atoms), std::move(bonds));
}

MolGraph MolGraph::without_stereo() const {
  std::vector<Atom> atoms = atoms_;
  for (auto& a : atoms) a.chiral = false;
  std::vector<Bond> bonds = bonds_;
  for (auto& b : bonds) {
    b.stereo = BondStereo::None;
    b.stereo_begin_ref = b.stereo_end_ref = -1;
  }
  return MolGraph(std::move(atoms), std::move(bonds));
}

}  // namespace nestdrug::mol
