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

// Recursive-descent-free SMILES reader for the organic subset plus bracket
// atoms, branches, ring closures and E/Z bond directions.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>

#include "nestdrug/errors.hpp"
#include "nestdrug/molgraph.hpp"
#include "valence.hpp"

namespace nestdrug::mol {

namespace {

struct PendingBond {
  char symbol = 0;  // 0 when absent
  std::size_t position = 0;
};

struct RawBond {
  int first;   // atom written first
  int second;  // atom written second
  char symbol;  // 0, '-', '=', '#', ':', '/', '\\'
  std::size_t position;
};

struct RawAtom {
  Atom atom;
  bool bracket = false;
  std::size_t position = 0;
};

struct RingOpen {
  int atom;
  PendingBond bond;
  std::size_t position;
};

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  MolGraph run();

 private:
  void parse_organic();
  void parse_bracket();
  void parse_ring_closure();
  void add_atom(RawAtom atom);
  void add_bond(int first, int second, char symbol, std::size_t position);

  [[noreturn]] void syntax(std::size_t pos, const std::string& why) const { throw SyntaxError(pos, why); }
  [[noreturn]] void unsupported(std::size_t pos, const std::string& what) const {
    fail(ErrorKind::UnsupportedFeature, what + " at position " + std::to_string(pos));
  }

  std::string_view s_;
  std::size_t i_ = 0;
  std::vector<RawAtom> atoms_;
  std::vector<RawBond> bonds_;
  std::vector<int> branch_stack_;
  std::map<int, RingOpen> rings_;
  int prev_ = -1;
  PendingBond pending_;
};

bool is_bond_symbol(char c) {
  return c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\';
}

BondOrder order_for(char symbol, bool both_aromatic) {
  switch (symbol) {
    case '=': return BondOrder::Double;
    case '#': return BondOrder::Triple;
    case ':': return BondOrder::Aromatic;
    case '-':
    case '/':
    case '\\': return BondOrder::Single;
    default: return both_aromatic ? BondOrder::Aromatic : BondOrder::Single;
  }
}

void Parser::add_atom(RawAtom atom) {
  const int index = static_cast<int>(atoms_.size());
  atoms_.push_back(atom);
  if (prev_ >= 0) {
    add_bond(prev_, index, pending_.symbol, pending_.position);
  } else if (pending_.symbol != 0) {
    syntax(pending_.position, "bond without a preceding atom");
  }
  pending_ = {};
  prev_ = index;
}

void Parser::add_bond(int first, int second, char symbol, std::size_t position) {
  if (first == second) syntax(position, "bond from an atom to itself");
  for (const auto& b : bonds_) {
    if ((b.first == first && b.second == second) || (b.first == second && b.second == first)) {
      syntax(position, "duplicate bond between the same atoms");
    }
  }
  bonds_.push_back({first, second, symbol, position});
}

void Parser::parse_organic() {
  const std::size_t start = i_;
  const char c = s_[i_];
  std::string symbol(1, c);
  bool aromatic = false;
  if (c == 'C' && i_ + 1 < s_.size() && s_[i_ + 1] == 'l') {
    symbol = "Cl";
  } else if (c == 'B' && i_ + 1 < s_.size() && s_[i_ + 1] == 'r') {
    symbol = "Br";
  }
  static const std::string kOrganic = "BCNOPSFI";
  static const std::string kAromatic = "bcnops";
  if (symbol.size() == 1) {
    if (kAromatic.find(c) != std::string::npos) {
      aromatic = true;
      symbol = std::string(1, static_cast<char>(std::toupper(c)));
    } else if (kOrganic.find(c) == std::string::npos) {
      if (std::isupper(static_cast<unsigned char>(c))) {
        syntax(start, std::string("element '") + c + "' must be written in brackets");
      }
      syntax(start, std::string("unexpected character '") + c + "'");
    }
  }
  i_ += symbol.size();
  const ElementInfo* info = element_by_symbol(symbol);
  RawAtom raw;
  raw.atom.atomic_number = info->atomic_number;
  raw.atom.aromatic = aromatic;
  raw.atom.hydrogen_count = -1;  // implicit, filled later
  raw.position = start;
  add_atom(raw);
}

void Parser::parse_bracket() {
  const std::size_t open = i_;
  const std::size_t close = s_.find(']', open);
  if (close == std::string_view::npos) syntax(open, "unterminated bracket atom");
  std::size_t p = open + 1;
  auto peek = [&]() -> char { return p < close ? s_[p] : '\0'; };

  if (std::isdigit(static_cast<unsigned char>(peek()))) unsupported(p, "isotope labels");
  if (peek() == '*') unsupported(p, "wildcard atom");

  // Element symbol: aromatic forms first (se, as, b c n o p s), then 1-2 letter symbols.
  std::string symbol;
  bool aromatic = false;
  if (std::islower(static_cast<unsigned char>(peek()))) {
    if (s_.substr(p, 2) == "se" || s_.substr(p, 2) == "as") {
      symbol = {static_cast<char>(std::toupper(s_[p])), s_[p + 1]};
      p += 2;
    } else if (std::string("bcnops").find(peek()) != std::string::npos) {
      symbol = std::string(1, static_cast<char>(std::toupper(peek())));
      ++p;
    } else {
      syntax(p, "invalid aromatic symbol in bracket atom");
    }
    aromatic = true;
  } else if (std::isupper(static_cast<unsigned char>(peek()))) {
    symbol = std::string(1, peek());
    ++p;
    if (std::islower(static_cast<unsigned char>(peek()))) {
      const std::string two = symbol + peek();
      if (element_by_symbol(two) != nullptr) {
        symbol = two;
        ++p;
      }
    }
  } else {
    syntax(p, "bracket atom without element symbol");
  }
  const ElementInfo* info = element_by_symbol(symbol);
  if (info == nullptr) syntax(open + 1, "unknown element '" + symbol + "'");
  if (info->atomic_number == 1) unsupported(open, "explicit hydrogen atom");

  RawAtom raw;
  raw.bracket = true;
  raw.position = open;
  raw.atom.atomic_number = info->atomic_number;
  raw.atom.aromatic = aromatic;

  if (peek() == '@') {
    raw.atom.chiral = true;
    ++p;
    if (peek() == '@') ++p;
  }
  int hydrogens = 0;
  if (peek() == 'H') {
    ++p;
    hydrogens = 1;
    if (std::isdigit(static_cast<unsigned char>(peek()))) {
      hydrogens = peek() - '0';
      ++p;
    }
  }
  int charge = 0;
  if (peek() == '+' || peek() == '-') {
    const char sign = peek();
    ++p;
    int magnitude = 1;
    if (std::isdigit(static_cast<unsigned char>(peek()))) {
      magnitude = peek() - '0';
      ++p;
    } else {
      while (peek() == sign) {
        ++magnitude;
        ++p;
      }
    }
    charge = sign == '+' ? magnitude : -magnitude;
  }
  if (peek() == ':') unsupported(p, "atom class");
  if (p != close) syntax(p, "unexpected character in bracket atom");

  raw.atom.hydrogen_count = hydrogens;
  raw.atom.formal_charge = charge;
  i_ = close + 1;
  add_atom(raw);
}

void Parser::parse_ring_closure() {
  const std::size_t start = i_;
  if (prev_ < 0) syntax(start, "ring closure before any atom");
  int label = 0;
  if (s_[i_] == '%') {
    if (i_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[i_ + 1])) ||
        !std::isdigit(static_cast<unsigned char>(s_[i_ + 2]))) {
      syntax(start, "'%' must be followed by two digits");
    }
    label = (s_[i_ + 1] - '0') * 10 + (s_[i_ + 2] - '0');
    i_ += 3;
  } else {
    label = s_[i_] - '0';
    ++i_;
  }
  auto it = rings_.find(label);
  if (it == rings_.end()) {
    rings_[label] = {prev_, pending_, start};
    pending_ = {};
    return;
  }
  const RingOpen open = it->second;
  rings_.erase(it);
  if (open.atom == prev_) syntax(start, "ring closure to the same atom");
  char symbol = open.bond.symbol;
  int first = open.atom;
  int second = prev_;
  if (pending_.symbol != 0) {
    if (symbol == 0) {
      symbol = pending_.symbol;
      std::swap(first, second);  // written after the closing atom
    } else if (symbol != pending_.symbol) {
      const auto directional = [](char b) { return b == '/' || b == '\\'; };
      if (!(directional(symbol) && directional(pending_.symbol))) {
        syntax(start, "conflicting ring-closure bond symbols");
      }
    }
  }
  add_bond(first, second, symbol, start);
  pending_ = {};
}

MolGraph Parser::run() {
  if (s_.empty()) syntax(0, "empty SMILES");
  for (std::size_t k = 0; k < s_.size(); ++k) {
    const auto ch = static_cast<unsigned char>(s_[k]);
    if (ch >= 0x80 || !std::isprint(ch)) syntax(k, "non-printable or non-ASCII character");
    if (std::isspace(ch)) syntax(k, "whitespace inside SMILES");
  }

  while (i_ < s_.size()) {
    const char c = s_[i_];
    if (c == '(') {
      if (prev_ < 0) syntax(i_, "branch before any atom");
      if (i_ > 0 && s_[i_ - 1] == '(') syntax(i_, "branch must start with an atom or bond");
      if (pending_.symbol != 0) syntax(i_, "bond symbol before '('");
      if (i_ + 1 < s_.size() && s_[i_ + 1] == ')') syntax(i_, "empty branch");
      branch_stack_.push_back(prev_);
      ++i_;
    } else if (c == ')') {
      if (branch_stack_.empty()) syntax(i_, "unmatched ')'");
      if (pending_.symbol != 0) syntax(pending_.position, "bond symbol without a following atom");
      prev_ = branch_stack_.back();
      branch_stack_.pop_back();
      ++i_;
    } else if (is_bond_symbol(c)) {
      if (prev_ < 0) syntax(i_, "bond before any atom");
      if (pending_.symbol != 0) syntax(i_, "two consecutive bond symbols");
      pending_ = {c, i_};
      ++i_;
    } else if (c == '$') {
      unsupported(i_, "quadruple bond");
    } else if (c == '.') {
      unsupported(i_, "multi-fragment '.' notation");
    } else if (c == '*') {
      unsupported(i_, "wildcard atom");
    } else if (c == '>') {
      unsupported(i_, "reaction arrow");
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
      parse_ring_closure();
    } else if (c == '[') {
      parse_bracket();
    } else if (c == ']') {
      syntax(i_, "unmatched ']'");
    } else if (std::isalpha(static_cast<unsigned char>(c))) {
      parse_organic();
    } else {
      syntax(i_, std::string("unexpected character '") + c + "'");
    }
  }
  if (pending_.symbol != 0) syntax(pending_.position, "bond symbol at end of input");
  if (!branch_stack_.empty()) syntax(s_.size(), "unclosed branch");
  if (!rings_.empty()) syntax(rings_.begin()->second.position, "unclosed ring " + std::to_string(rings_.begin()->first));

  // Bonds with resolved orders.
  std::vector<Bond> bonds;
  bonds.reserve(bonds_.size());
  for (const auto& rb : bonds_) {
    Bond b;
    b.begin = rb.first;
    b.end = rb.second;
    const bool both_aromatic = atoms_[rb.first].atom.aromatic && atoms_[rb.second].atom.aromatic;
    b.order = order_for(rb.symbol, both_aromatic);
    bonds.push_back(b);
  }

  // Implicit hydrogens.
  std::vector<int> used(atoms_.size(), 0);
  for (const auto& b : bonds) {
    used[b.begin] += detail::valence_contribution(b.order);
    used[b.end] += detail::valence_contribution(b.order);
  }
  std::vector<Atom> atoms;
  atoms.reserve(atoms_.size());
  for (std::size_t a = 0; a < atoms_.size(); ++a) {
    Atom atom = atoms_[a].atom;
    if (!atoms_[a].bracket) {
      const auto valences = detail::neutral_valences(atom.atomic_number);
      if (atom.aromatic) {
        if (used[a] > valences.back()) {
          fail(ErrorKind::Valence, "aromatic atom at position " + std::to_string(atoms_[a].position) +
                                       " exceeds its valence");
        }
        const bool lone_pair_donor = atom.atomic_number == 8 || atom.atomic_number == 16;
        atom.hydrogen_count = lone_pair_donor ? 0 : std::max(0, valences.front() - used[a] - 1);
      } else {
        const int target = detail::target_valence(atom.atomic_number, 0, used[a]);
        if (target < 0) {
          fail(ErrorKind::Valence, "atom at position " + std::to_string(atoms_[a].position) +
                                       " has bond order sum " + std::to_string(used[a]) +
                                       " above every allowed valence (negative implicit H)");
        }
        atom.hydrogen_count = target - used[a];
      }
    }
    atoms.push_back(atom);
  }

  // E/Z from directional single bonds around double bonds.
  auto direction_of = [&](int stereo_atom, int neighbor) -> int {
    for (const auto& rb : bonds_) {
      if (rb.symbol != '/' && rb.symbol != '\\') continue;
      int base = rb.symbol == '/' ? 1 : -1;
      if (rb.first == stereo_atom && rb.second == neighbor) return base;
      if (rb.first == neighbor && rb.second == stereo_atom) return -base;
    }
    return 0;
  };
  for (auto& b : bonds) {
    if (b.order != BondOrder::Double) continue;
    int ref_begin = -1, dir_begin = 0, ref_end = -1, dir_end = 0;
    for (const auto& other : bonds) {
      if (&other == &b) continue;
      for (int side = 0; side < 2; ++side) {
        const int center = side == 0 ? b.begin : b.end;
        const int partner = side == 0 ? b.end : b.begin;
        int nbr = -1;
        if (other.begin == center && other.end != partner) nbr = other.end;
        if (other.end == center && other.begin != partner) nbr = other.begin;
        if (nbr < 0) continue;
        const int d = direction_of(center, nbr);
        if (d == 0) continue;
        if (side == 0 && ref_begin < 0) {
          ref_begin = nbr;
          dir_begin = d;
        } else if (side == 1 && ref_end < 0) {
          ref_end = nbr;
          dir_end = d;
        }
      }
    }
    if (ref_begin >= 0 && ref_end >= 0) {
      b.stereo = dir_begin != dir_end ? BondStereo::E : BondStereo::Z;
      b.stereo_begin_ref = ref_begin;
      b.stereo_end_ref = ref_end;
    }
  }

  return MolGraph(std::move(atoms), std::move(bonds));
}

}  // namespace

MolGraph parse_smiles(std::string_view smiles) { return Parser(smiles).run(); }

}  // namespace nestdrug::mol
