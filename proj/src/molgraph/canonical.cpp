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

// Canonical serialization: Morgan-style rank refinement, individualization of
// tied classes, and the lexicographically smallest DFS string over the search
// leaves.

#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <string>

#include "nestdrug/errors.hpp"
#include "nestdrug/molgraph.hpp"

namespace nestdrug::mol {

namespace {

constexpr std::size_t kMaxLeaves = 2000;

std::string atom_text(const Atom& a) {
  const auto& info = element_by_number(a.atomic_number);
  std::string s = "[";
  if (a.aromatic) {
    s += static_cast<char>(std::tolower(static_cast<unsigned char>(info.symbol[0])));
    s += info.symbol.substr(1);
  } else {
    s += info.symbol;
  }
  if (a.hydrogen_count > 0) {
    s += 'H';
    if (a.hydrogen_count > 1) s += std::to_string(a.hydrogen_count);
  }
  if (a.formal_charge != 0) {
    s += a.formal_charge > 0 ? '+' : '-';
    const int mag = std::abs(a.formal_charge);
    if (mag > 1) s += std::to_string(mag);
  }
  s += ']';
  return s;
}

struct WriteState {
  const MolGraph& m;
  std::span<const int> ranks;
  std::vector<bool> visited;
  std::vector<int> parent_bond;
  std::vector<std::vector<int>> children;            // child atoms in visit order
  std::vector<std::vector<int>> ring_bonds;          // ring bonds incident to atom, by partner rank
  std::vector<int> written_first;                    // per bond: atom written first
  std::vector<bool> is_ring_bond;
  std::vector<char> direction;                       // per bond: 0, '/', '\\'
  std::string out;
  std::vector<int> digit_of_bond;
  std::vector<bool> digit_used;

  WriteState(const MolGraph& mol, std::span<const int> r)
      : m(mol),
        ranks(r),
        visited(mol.num_atoms(), false),
        parent_bond(mol.num_atoms(), -1),
        children(mol.num_atoms()),
        ring_bonds(mol.num_atoms()),
        written_first(mol.num_bonds(), -1),
        is_ring_bond(mol.num_bonds(), false),
        direction(mol.num_bonds(), 0),
        digit_of_bond(mol.num_bonds(), -1),
        digit_used(100, false) {}

  std::vector<Neighbor> sorted_neighbors(int v) const {
    auto nbrs = m.neighbors(v);
    std::vector<Neighbor> sorted(nbrs.begin(), nbrs.end());
    std::sort(sorted.begin(), sorted.end(),
              [&](const Neighbor& x, const Neighbor& y) { return ranks[x.atom] < ranks[y.atom]; });
    return sorted;
  }

  void discover(int v) {
    visited[v] = true;
    for (const auto& nb : sorted_neighbors(v)) {
      if (nb.bond == parent_bond[v]) continue;
      if (!visited[nb.atom]) {
        parent_bond[nb.atom] = nb.bond;
        written_first[nb.bond] = v;
        children[v].push_back(nb.atom);
        discover(nb.atom);
      } else if (written_first[nb.bond] < 0) {
        // Back edge: nb.atom is an ancestor; the ring opens there.
        is_ring_bond[nb.bond] = true;
        written_first[nb.bond] = nb.atom;
      }
    }
  }

  static int up_of(char dir, bool center_first) {
    const int slash = dir == '/' ? 1 : -1;
    return center_first ? slash : -slash;
  }

  static char char_for(int up, bool center_first) {
    return (up > 0) == center_first ? '/' : '\\';
  }

  // up(n relative to c) implied by the bond's current direction, if any.
  std::optional<int> assigned_up(int c, int n, int bond) const {
    if (direction[bond] == 0) return std::nullopt;
    return up_of(direction[bond], written_first[bond] == c);
  }

  // up(n relative to c) forced by directional bonds already placed around n.
  std::optional<int> forced_up(int c, int n, const std::vector<bool>& stereo_center) const {
    if (!stereo_center[n]) return std::nullopt;
    for (const auto& nb : m.neighbors(n)) {
      if (nb.atom == c || direction[nb.bond] == 0) continue;
      // up(m rel n) = v  =>  up(c rel n) = -v  =>  up(n rel c) = v
      return up_of(direction[nb.bond], written_first[nb.bond] == n);
    }
    return std::nullopt;
  }

  void set_up(int c, int n, int bond, int up) { direction[bond] = char_for(up, written_first[bond] == c); }

  void assign_stereo() {
    std::vector<int> order;
    for (std::size_t b = 0; b < m.num_bonds(); ++b) {
      if (m.bond(b).stereo != BondStereo::None && m.bond(b).order == BondOrder::Double) {
        order.push_back(static_cast<int>(b));
      }
    }
    std::sort(order.begin(), order.end(), [&](int x, int y) {
      const auto key = [&](int b) {
        const auto& bd = m.bond(b);
        return std::pair(std::min(ranks[bd.begin], ranks[bd.end]), std::max(ranks[bd.begin], ranks[bd.end]));
      };
      return key(x) < key(y);
    });
    std::vector<bool> stereo_center(m.num_atoms(), false);

    // Bonds already touching a placed direction go first, so conjugated chains are written outward.
    const auto anchored = [&](int bi) {
      for (int end : {m.bond(bi).begin, m.bond(bi).end}) {
        for (const auto& nb : m.neighbors(end)) {
          if (direction[nb.bond] != 0) return true;
        }
      }
      return false;
    };
    std::vector<bool> done(order.size(), false);
    for (std::size_t step = 0; step < order.size(); ++step) {
      std::size_t pick = order.size();
      for (std::size_t k = 0; k < order.size(); ++k) {
        if (done[k]) continue;
        if (pick == order.size()) pick = k;
        if (anchored(order[k])) {
          pick = k;
          break;
        }
      }
      done[pick] = true;
      const int bi = order[pick];
      const Bond& bond = m.bond(bi);
      int a = bond.begin, b = bond.end;
      int ref_a = bond.stereo_begin_ref, ref_b = bond.stereo_end_ref;
      if (ranks[b] < ranks[a]) {
        std::swap(a, b);
        std::swap(ref_a, ref_b);
      }
      bool trans = bond.stereo == BondStereo::E;

      auto side_neighbors = [&](int center, int partner) {
        std::vector<Neighbor> out;
        for (const auto& nb : sorted_neighbors(center)) {
          if (nb.atom != partner) out.push_back(nb);
        }
        return out;
      };
      // A direction on a bond into an unspecified double bond could make that bond stereo.
      const auto touches_plain_double = [&](const Neighbor& x) {
        for (const auto& y : m.neighbors(x.atom)) {
          const Bond& d = m.bond(y.bond);
          if (d.order == BondOrder::Double && d.stereo == BondStereo::None) return true;
        }
        return false;
      };
      const auto safe_first = [&](std::vector<Neighbor> side) {
        std::stable_partition(side.begin(), side.end(),
                              [&](const Neighbor& x) { return !touches_plain_double(x); });
        return side;
      };
      auto na = safe_first(side_neighbors(a, b));
      auto nb = safe_first(side_neighbors(b, a));
      if (na.empty() || nb.empty()) continue;
      const auto has_assigned = [&](const std::vector<Neighbor>& side) {
        return std::any_of(side.begin(), side.end(), [&](const Neighbor& x) { return direction[x.bond] != 0; });
      };
      // Start from the side that already carries a direction so shared bonds stay consistent.
      if (!has_assigned(na) && has_assigned(nb)) {
        std::swap(a, b);
        std::swap(ref_a, ref_b);
        std::swap(na, nb);
      }

      // Side a: reuse an existing direction, else a forced one, else choose.
      std::optional<Neighbor> xa;
      int ua = 1;
      for (const auto& x : na) {
        if (auto u = assigned_up(a, x.atom, x.bond)) {
          xa = x;
          ua = *u;
          break;
        }
      }
      if (!xa) {
        xa = na.front();
        if (auto f = forced_up(a, xa->atom, stereo_center)) ua = *f;
        set_up(a, xa->atom, xa->bond, ua);
      }
      if (xa->atom != ref_a) trans = !trans;

      // Side b: the label fixes the required direction relative to each neighbour.
      const auto required = [&](int y) {
        const bool t = (y != ref_b) ? !trans : trans;
        return t ? -ua : ua;
      };
      bool placed = false;
      for (const auto& y : nb) {
        if (auto u = assigned_up(b, y.atom, y.bond)) {
          if (*u == required(y.atom)) placed = true;
        }
      }
      for (const auto& y : nb) {
        if (placed) break;
        if (direction[y.bond] != 0) continue;
        const int want = required(y.atom);
        if (auto f = forced_up(b, y.atom, stereo_center); f && *f != want) continue;
        set_up(b, y.atom, y.bond, want);
        placed = true;
      }
      stereo_center[a] = stereo_center[b] = true;
    }
  }

  char bond_symbol(int bi) const {
    if (direction[bi] != 0) return direction[bi];
    const Bond& b = m.bond(bi);
    const bool both_aromatic = m.atom(b.begin).aromatic && m.atom(b.end).aromatic;
    switch (b.order) {
      case BondOrder::Single: return both_aromatic ? '-' : 0;
      case BondOrder::Double: return '=';
      case BondOrder::Triple: return '#';
      case BondOrder::Aromatic: return both_aromatic ? 0 : ':';
    }
    return 0;
  }

  void emit(int v) {
    out += atom_text(m.atom(v));
    // Ring-closure digits, by partner rank.
    std::vector<Neighbor> rings;
    for (const auto& nb : sorted_neighbors(v)) {
      if (is_ring_bond[nb.bond]) rings.push_back(nb);
    }
    std::vector<int> to_free;
    for (const auto& nb : rings) {
      int digit = digit_of_bond[nb.bond];
      if (digit < 0) {
        digit = 1;
        while (digit_used[digit]) ++digit;
        digit_used[digit] = true;
        digit_of_bond[nb.bond] = digit;
        if (char c = bond_symbol(nb.bond)) out += c;
      } else {
        to_free.push_back(digit);
      }
      if (digit < 10) {
        out += static_cast<char>('0' + digit);
      } else {
        out += '%';
        out += std::to_string(digit);
      }
    }
    for (int d : to_free) digit_used[d] = false;
    for (std::size_t k = 0; k < children[v].size(); ++k) {
      const int child = children[v][k];
      const bool last = k + 1 == children[v].size();
      if (!last) out += '(';
      if (char c = bond_symbol(parent_bond[child])) out += c;
      emit(child);
      if (!last) out += ')';
    }
  }
};

// Rank = number of atoms in strictly smaller classes.
std::vector<int> ranks_from_keys(const std::vector<std::vector<long long>>& keys) {
  const std::size_t n = keys.size();
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int x, int y) { return keys[x] < keys[y]; });
  std::vector<int> ranks(n, 0);
  for (std::size_t k = 1; k < n; ++k) {
    ranks[idx[k]] = keys[idx[k]] == keys[idx[k - 1]] ? ranks[idx[k - 1]] : static_cast<int>(k);
  }
  return ranks;
}

std::size_t count_classes(const std::vector<int>& ranks) {
  std::vector<int> sorted = ranks;
  std::sort(sorted.begin(), sorted.end());
  return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

void refine(const MolGraph& m, std::vector<int>& ranks) {
  const std::size_t n = m.num_atoms();
  std::size_t classes = count_classes(ranks);
  while (true) {
    std::vector<std::vector<long long>> keys(n);
    for (std::size_t v = 0; v < n; ++v) {
      std::vector<long long> nbr;
      for (const auto& nb : m.neighbors(v)) {
        nbr.push_back(static_cast<long long>(m.bond(nb.bond).order) * static_cast<long long>(n + 1) + ranks[nb.atom]);
      }
      std::sort(nbr.begin(), nbr.end());
      keys[v].push_back(ranks[v]);
      keys[v].insert(keys[v].end(), nbr.begin(), nbr.end());
    }
    ranks = ranks_from_keys(keys);
    const std::size_t next = count_classes(ranks);
    if (next == classes) break;
    classes = next;
  }
}

struct Search {
  const MolGraph& m;
  std::optional<std::string> best;
  std::size_t leaves = 0;

  void run(std::vector<int> ranks) {
    if (leaves >= kMaxLeaves) return;
    refine(m, ranks);
    const std::size_t n = ranks.size();
    // Smallest tied class.
    int target = -1;
    std::vector<int> count(n, 0);
    for (int r : ranks) ++count[r];
    for (std::size_t r = 0; r < n; ++r) {
      if (count[r] > 1) {
        target = static_cast<int>(r);
        break;
      }
    }
    if (target < 0) {
      ++leaves;
      std::string s = write_smiles(m, ranks);
      if (!best || s < *best) best = std::move(s);
      return;
    }
    for (std::size_t v = 0; v < n; ++v) {
      if (ranks[v] != target) continue;
      std::vector<int> next = ranks;
      for (std::size_t u = 0; u < n; ++u) {
        if (ranks[u] == target && u != v) next[u] = target + 1;
      }
      run(std::move(next));
      if (leaves >= kMaxLeaves) return;
    }
  }
};

}  // namespace

std::string write_smiles(const MolGraph& m, std::span<const int> ranks) {
  require(ranks.size() == m.num_atoms(), ErrorKind::Shape, "rank vector size mismatch");
  if (m.num_atoms() == 0) return {};
  WriteState st(m, ranks);
  int root = 0;
  for (std::size_t v = 1; v < m.num_atoms(); ++v) {
    if (ranks[v] < ranks[root]) root = static_cast<int>(v);
  }
  st.discover(root);
  require(std::all_of(st.visited.begin(), st.visited.end(), [](bool b) { return b; }),
          ErrorKind::UnsupportedFeature, "disconnected molecule");
  st.assign_stereo();
  st.emit(root);
  return st.out;
}

CanonicalForm canonical_form(const MolGraph& input, CanonicalOptions options) {
  const MolGraph stripped = options.strip_stereo ? input.without_stereo() : MolGraph{};
  const MolGraph& m = options.strip_stereo ? stripped : input;
  const std::size_t n = m.num_atoms();
  std::vector<std::vector<long long>> keys(n);
  for (std::size_t v = 0; v < n; ++v) {
    const Atom& a = m.atom(v);
    keys[v] = {a.atomic_number, a.formal_charge, a.degree, a.hydrogen_count, a.aromatic ? 1 : 0};
  }
  Search search{m, std::nullopt, 0};
  search.run(ranks_from_keys(keys));
  return {std::string(kCanonicalTag) + search.best.value_or("")};
}

MolGraph parse_canonical(const CanonicalForm& form) {
  std::string_view text = form.text;
  require(text.starts_with(kCanonicalTag), ErrorKind::Data, "canonical form lacks the CF1 tag");
  text.remove_prefix(kCanonicalTag.size());
  return parse_smiles(text);
}

bool molecule_equal(const MolGraph& a, const MolGraph& b) { return canonical_form(a) == canonical_form(b); }

}  // namespace nestdrug::mol
