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

#include "nestdrug/molgraph.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <regex>

#include "nestdrug/errors.hpp"
#include "nestdrug/rng.hpp"
#include "test_support.hpp"

namespace nestdrug::mol {

void PrintTo(const CanonicalForm& cf, std::ostream* os) { *os << cf.text; }

namespace {

using nestdrug::testing::load_corpus;

TEST(ParseSmiles, Methane) {
  const MolGraph m = parse_smiles("C");
  ASSERT_EQ(m.num_atoms(), 1u);
  EXPECT_EQ(m.num_bonds(), 0u);
  EXPECT_EQ(m.atom(0).atomic_number, 6);
  EXPECT_EQ(m.atom(0).hydrogen_count, 4);
}

TEST(ParseSmiles, Cyclopropane) {
  const MolGraph m = parse_smiles("C1CC1");
  EXPECT_EQ(m.num_atoms(), 3u);
  EXPECT_EQ(m.num_bonds(), 3u);
  for (const auto& a : m.atoms()) {
    EXPECT_TRUE(a.in_ring);
    EXPECT_EQ(a.hydrogen_count, 2);
    EXPECT_EQ(a.ring_size_mask, 1u);  // size 3
  }
  for (const auto& b : m.bonds()) EXPECT_TRUE(b.in_ring);
}

TEST(ParseSmiles, AceticAcid) {
  const MolGraph m = parse_smiles("CC(=O)O");
  EXPECT_EQ(m.num_atoms(), 4u);
  EXPECT_EQ(m.num_bonds(), 3u);
  const auto doubles = std::count_if(m.bonds().begin(), m.bonds().end(),
                                     [](const Bond& b) { return b.order == BondOrder::Double; });
  EXPECT_EQ(doubles, 1);
  EXPECT_EQ(m.atom(0).hydrogen_count, 3);
  EXPECT_EQ(m.atom(1).hydrogen_count, 0);
  EXPECT_EQ(m.atom(3).hydrogen_count, 1);
}

TEST(ParseSmiles, Benzene) {
  const MolGraph m = parse_smiles("c1ccccc1");
  ASSERT_EQ(m.num_atoms(), 6u);
  ASSERT_EQ(m.num_bonds(), 6u);
  for (const auto& a : m.atoms()) {
    EXPECT_TRUE(a.aromatic);
    EXPECT_EQ(a.hydrogen_count, 1);
    EXPECT_EQ(a.hybridization, Hybridization::SP2);
  }
  for (const auto& b : m.bonds()) {
    EXPECT_EQ(b.order, BondOrder::Aromatic);
    EXPECT_TRUE(b.conjugated);
  }
}

TEST(ParseSmiles, HeteroaromaticHydrogens) {
  EXPECT_EQ(parse_smiles("c1ccncc1").atom(3).hydrogen_count, 0);
  EXPECT_EQ(parse_smiles("c1cc[nH]c1").atom(3).hydrogen_count, 1);
  EXPECT_EQ(parse_smiles("c1ccsc1").atom(3).hydrogen_count, 0);
  EXPECT_EQ(parse_smiles("c1ccc2ccccc2c1").atom(3).hydrogen_count, 0);
}

TEST(ParseSmiles, BracketAtoms) {
  const MolGraph m = parse_smiles("C[N+](C)(C)C");
  EXPECT_EQ(m.atom(1).formal_charge, 1);
  EXPECT_EQ(m.atom(1).hydrogen_count, 0);
  EXPECT_EQ(m.atom(1).radical_electrons, 0);
  EXPECT_EQ(parse_smiles("CC(=O)[O-]").atom(3).formal_charge, -1);
  EXPECT_EQ(parse_smiles("[CH3]").atom(0).radical_electrons, 1);
  EXPECT_EQ(parse_smiles("[Fe++]").atom(0).formal_charge, 2);
  EXPECT_EQ(parse_smiles("[O-2]").atom(0).formal_charge, -2);
  EXPECT_TRUE(parse_smiles("C[C@H](N)O").atom(1).chiral);
}

TEST(ParseSmiles, RingClosureForms) {
  const MolGraph a = parse_smiles("C%12CC%12");
  EXPECT_EQ(a.num_bonds(), 3u);
  const MolGraph b = parse_smiles("C=1CC1");
  EXPECT_EQ(b.bond(2).order, BondOrder::Double);
  const MolGraph c = parse_smiles("C1CC=1");
  EXPECT_EQ(c.bond(2).order, BondOrder::Double);
}

TEST(ParseSmiles, DoubleBondStereo) {
  auto stereo_of = [](const MolGraph& m) {
    for (const auto& b : m.bonds()) {
      if (b.order == BondOrder::Double) return b.stereo;
    }
    return BondStereo::None;
  };
  EXPECT_EQ(stereo_of(parse_smiles("F/C=C/F")), BondStereo::E);
  EXPECT_EQ(stereo_of(parse_smiles("F/C=C\\F")), BondStereo::Z);
  EXPECT_EQ(stereo_of(parse_smiles("F\\C=C\\F")), BondStereo::E);
  EXPECT_EQ(stereo_of(parse_smiles("C(/F)=C/F")), BondStereo::Z);
  EXPECT_EQ(stereo_of(parse_smiles("FC=CF")), BondStereo::None);
}

TEST(ParseSmiles, SyntaxErrorsCarryPosition) {
  const std::vector<std::pair<std::string, std::size_t>> cases = {
      {"C1CC(", 5}, {"C)", 1}, {"CC=", 2}, {"C1CC", 1}, {"C((C))", 2}, {"[C", 0}, {"C?", 1}, {"(C)", 0}, {"C()", 1}};
  for (const auto& [smiles, pos] : cases) {
    try {
      parse_smiles(smiles);
      ADD_FAILURE() << smiles << " parsed";
    } catch (const SyntaxError& e) {
      EXPECT_EQ(e.position(), pos) << smiles << ": " << e.what();
    }
  }
  EXPECT_THROW(parse_smiles(""), SyntaxError);
  EXPECT_THROW(parse_smiles("Na"), SyntaxError);
}

TEST(ParseSmiles, UnsupportedFeatures) {
  for (const char* s : {"C*C", "CC.O", "CC>>CO", "[13CH4]", "[H]C", "C$C", "[CH3:1]C"}) {
    try {
      parse_smiles(s);
      ADD_FAILURE() << s << " parsed";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::UnsupportedFeature) << s;
    }
  }
}

TEST(ParseSmiles, ValenceAndAromaticityErrors) {
  try {
    parse_smiles("C(C)(C)(C)(C)C");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Valence);
  }
  try {
    parse_smiles("FF(F)");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Valence);
  }
  try {
    parse_smiles("ccc");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Aromaticity);
  }
}

TEST(Canonical, Examples) {
  EXPECT_EQ(canonical_form(parse_smiles("OCC")), canonical_form(parse_smiles("CCO")));
  EXPECT_EQ(canonical_form(parse_smiles("C1CC1")), canonical_form(parse_smiles("C2CC2")));
  EXPECT_NE(canonical_form(parse_smiles("CCO")), canonical_form(parse_smiles("CCN")));
  EXPECT_TRUE(canonical_form(parse_smiles("CCO")).text.starts_with("CF1:"));
  EXPECT_EQ(canonical_form(parse_smiles("CCO")).text, "CF1:[CH3][CH2][OH]");
}

TEST(Canonical, StereoDistinguishesAndStripMerges) {
  const auto e = parse_smiles("F/C=C/F");
  const auto z = parse_smiles("F/C=C\\F");
  EXPECT_NE(canonical_form(e), canonical_form(z));
  EXPECT_EQ(canonical_form(e), canonical_form(parse_smiles("F\\C=C\\F")));
  EXPECT_EQ(canonical_form(e), canonical_form(parse_smiles("C(\\F)=C/F")));
  EXPECT_EQ(canonical_form(z), canonical_form(parse_smiles("C(/F)=C/F")));
  EXPECT_EQ(canonical_form(e, {.strip_stereo = true}), canonical_form(z, {.strip_stereo = true}));
  EXPECT_EQ(canonical_form(parse_smiles("C/C=C/C=C/C")), canonical_form(parse_smiles("C\\C=C\\C=C\\C")));
  EXPECT_NE(canonical_form(parse_smiles("C/C=C/C=C/C")), canonical_form(parse_smiles("C/C=C/C=C\\C")));
}

TEST(MoleculeEqual, Examples) {
  EXPECT_TRUE(molecule_equal(parse_smiles("CCO"), parse_smiles("OCC")));
  EXPECT_FALSE(molecule_equal(parse_smiles("CCO"), parse_smiles("CCN")));
  for (const auto& [smiles, name] : load_corpus()) {
    const auto m = parse_smiles(smiles);
    EXPECT_TRUE(molecule_equal(m, m)) << name;
  }
}

TEST(Featurize, MethaneCarbon) {
  const auto m = parse_smiles("C");
  const auto& f = m.atom_features();
  ASSERT_EQ(f.rows, 1u);
  ASSERT_EQ(f.cols, kAtomFeatureDim);
  EXPECT_EQ(f(0, layout::kElement + 0), 1.0);
  EXPECT_EQ(f(0, layout::kDegree + 0), 1.0);
  EXPECT_EQ(f(0, layout::kHydrogens + 4), 1.0);
  EXPECT_EQ(f(0, layout::kAromatic), 0.0);
  EXPECT_EQ(f(0, layout::kHybridization + 2), 1.0);
  EXPECT_NEAR(f(0, layout::kMass), 0.12011, 1e-12);
  EXPECT_NEAR(f(0, layout::kElectronegativity), 2.55 / 4.0, 1e-12);
  EXPECT_EQ(f(0, layout::kPeriod + 1), 1.0);
  EXPECT_EQ(f(0, layout::kGroup + 3), 1.0);
  for (std::size_t c = layout::kPadding; c < kAtomFeatureDim; ++c) EXPECT_EQ(f(0, c), 0.0);
}

TEST(Featurize, BenzeneBond) {
  const auto m = parse_smiles("c1ccccc1");
  const auto& f = m.bond_features();
  ASSERT_EQ(f.rows, 6u);
  ASSERT_EQ(f.cols, kBondFeatureDim);
  for (std::size_t b = 0; b < 6; ++b) {
    EXPECT_EQ(f(b, layout::kBondType + 3), 1.0);
    EXPECT_EQ(f(b, layout::kBondConjugated), 1.0);
    EXPECT_EQ(f(b, layout::kBondRing), 1.0);
    EXPECT_EQ(f(b, layout::kBondStereo + 0), 1.0);
  }
}

TEST(Featurize, StereoBondAndLayoutWidth) {
  const auto m = parse_smiles("F/C=C/F");
  EXPECT_EQ(m.bond_features()(1, layout::kBondStereo + 1), 1.0);
  EXPECT_EQ(layout::kPadding + 12, kAtomFeatureDim);
}

TEST(Featurize, OneHotBlocksSumToOneAcrossCorpus) {
  const std::vector<std::pair<std::size_t, std::size_t>> atom_blocks = {
      {layout::kElement, 10}, {layout::kDegree, 6}, {layout::kCharge, 5},
      {layout::kHybridization, 5}, {layout::kHydrogens, 5}, {layout::kPeriod, 5}, {layout::kRadical, 3}};
  const std::vector<std::pair<std::size_t, std::size_t>> bond_blocks = {{layout::kBondType, 4},
                                                                        {layout::kBondStereo, 3}};
  for (const auto& [smiles, name] : load_corpus()) {
    const auto m = parse_smiles(smiles);
    ASSERT_EQ(m.atom_features().rows, m.num_atoms());
    ASSERT_EQ(m.bond_features().rows, m.num_bonds());
    for (std::size_t r = 0; r < m.num_atoms(); ++r) {
      for (const auto& [off, len] : atom_blocks) {
        double s = 0;
        for (std::size_t k = 0; k < len; ++k) s += m.atom_features()(r, off + k);
        EXPECT_EQ(s, 1.0) << name << " atom " << r << " block " << off;
      }
    }
    for (std::size_t r = 0; r < m.num_bonds(); ++r) {
      for (const auto& [off, len] : bond_blocks) {
        double s = 0;
        for (std::size_t k = 0; k < len; ++k) s += m.bond_features()(r, off + k);
        EXPECT_EQ(s, 1.0) << name << " bond " << r;
      }
    }
  }
}

TEST(Featurize, Deterministic) {
  for (const auto& [smiles, name] : load_corpus()) {
    const auto a = parse_smiles(smiles);
    const auto b = parse_smiles(smiles);
    const auto [fa, ga] = featurize(a);
    EXPECT_EQ(fa, b.atom_features()) << name;
    EXPECT_EQ(ga, b.bond_features()) << name;
  }
}

TEST(CanonicalProperty, RoundTripOverCorpus) {
  for (const auto& [smiles, name] : load_corpus()) {
    const auto m = parse_smiles(smiles);
    const auto cf = canonical_form(m);
    const auto back = parse_canonical(cf);
    EXPECT_TRUE(molecule_equal(back, m)) << name << " " << cf.text;
    EXPECT_EQ(canonical_form(back), cf) << name;
  }
}

TEST(CanonicalProperty, InvariantUnderRandomTraversalOrder) {
  Rng rng(20260101);
  for (const auto& [smiles, name] : load_corpus()) {
    const auto m = parse_smiles(smiles);
    const auto cf = canonical_form(m);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<int> ranks(m.num_atoms());
      std::iota(ranks.begin(), ranks.end(), 0);
      rng.shuffle(std::span<int>(ranks));
      const std::string spelled = write_smiles(m, ranks);
      EXPECT_EQ(canonical_form(parse_smiles(spelled)), cf) << name << " as " << spelled;
    }
  }
}

TEST(CanonicalProperty, StereoSurvivesRandomTraversals) {
  const std::vector<std::string> cases = {"C/C=C/C=C\\C", "C/C=C(/F)C=C/C(=C/Cl)Br", "F/C=C/C=C/C=C\\F",
                                          "OC(=O)/C=C/c1ccccc1", "C/C(Cl)=C(\\F)Br", "C1CC/C=C/CCC1"};
  Rng rng(99);
  for (const auto& smiles : cases) {
    const auto m = parse_smiles(smiles);
    const auto cf = canonical_form(m);
    EXPECT_TRUE(molecule_equal(parse_canonical(cf), m)) << smiles;
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<int> ranks(m.num_atoms());
      std::iota(ranks.begin(), ranks.end(), 0);
      rng.shuffle(std::span<int>(ranks));
      const std::string spelled = write_smiles(m, ranks);
      EXPECT_EQ(canonical_form(parse_smiles(spelled)), cf) << smiles << " as " << spelled;
    }
  }
}

TEST(CanonicalProperty, InvariantUnderAtomPermutation) {
  Rng rng(7);
  for (const auto& [smiles, name] : load_corpus()) {
    const auto m = parse_smiles(smiles);
    std::vector<int> perm(m.num_atoms());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<int>(perm));
    EXPECT_EQ(canonical_form(m.permuted(perm)), canonical_form(m)) << name;
  }
}

TEST(CanonicalProperty, InvariantUnderRingDigitRelabeling) {
  Rng rng(11);
  const std::regex digit("[0-9]");
  for (const auto& [smiles, name] : load_corpus()) {
    if (smiles.find('%') != std::string::npos) continue;
    const auto cf = canonical_form(parse_smiles(smiles));
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<int> map(10);
      std::iota(map.begin(), map.end(), 0);
      rng.shuffle(std::span<int>(map.data() + 1, 9));
      std::string relabeled = smiles;
      bool in_bracket = false;
      for (char& c : relabeled) {
        if (c == '[') in_bracket = true;
        if (c == ']') in_bracket = false;
        if (!in_bracket && c >= '1' && c <= '9') c = static_cast<char>('0' + map[c - '0']);
      }
      EXPECT_EQ(canonical_form(parse_smiles(relabeled)), cf) << name << " as " << relabeled;
    }
  }
}

TEST(CanonicalProperty, BranchReorderingKeepsForm) {
  const std::vector<std::pair<std::string, std::string>> pairs = {
      {"CC(O)N", "CC(N)O"},
      {"CC(C)(O)N", "CC(N)(O)C"},
      {"c1ccccc1C(=O)O", "OC(=O)c1ccccc1"},
      {"CC(=O)Oc1ccccc1C(=O)O", "OC(=O)c1ccccc1OC(C)=O"},
  };
  for (const auto& [a, b] : pairs) {
    EXPECT_EQ(canonical_form(parse_smiles(a)), canonical_form(parse_smiles(b))) << a << " vs " << b;
  }
}

TEST(MolGraph, PermutedRemapsBondsAndStereo) {
  const auto m = parse_smiles("F/C=C/F");
  const std::vector<int> perm = {3, 2, 1, 0};
  const auto p = m.permuted(perm);
  EXPECT_EQ(p.atom(3).atomic_number, 9);
  bool found = false;
  for (const auto& b : p.bonds()) {
    if (b.order == BondOrder::Double) {
      found = true;
      EXPECT_EQ(b.stereo, BondStereo::E);
    }
  }
  EXPECT_TRUE(found);
  EXPECT_THROW(m.permuted(std::vector<int>{0, 0, 1, 2}), Error);
}

}  // namespace
}  // namespace nestdrug::mol
