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

#include "nestdrug/fingerprint.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "nestdrug/errors.hpp"
#include "nestdrug/rng.hpp"
#include "test_support.hpp"

namespace nestdrug::fp {
namespace {

using mol::parse_smiles;

Fingerprint from_bits(const std::vector<int>& bits, int nbits = 512) {
  Fingerprint f(nbits, 2);
  for (int b : bits) f.set(b);
  return f;
}

Fingerprint random_fp(Rng& rng, double density, int nbits = 512) {
  Fingerprint f(nbits, 2);
  for (int b = 0; b < nbits; ++b) {
    if (rng.bernoulli(density)) f.set(b);
  }
  return f;
}

// Set-based reference for Tanimoto.
double tanimoto_oracle(const Fingerprint& a, const Fingerprint& b) {
  std::set<int> sa, sb, all;
  for (int i = 0; i < a.nbits(); ++i) {
    if (a.test(i)) sa.insert(i);
    if (b.test(i)) sb.insert(i);
  }
  std::size_t both = 0;
  for (int i : sa) both += sb.count(i);
  all.insert(sa.begin(), sa.end());
  all.insert(sb.begin(), sb.end());
  return all.empty() ? 1.0 : static_cast<double>(both) / static_cast<double>(all.size());
}

TEST(Morgan, MethaneRadiusZeroSetsOneBit) {
  EXPECT_EQ(morgan_fingerprint(parse_smiles("C"), 0, 2048).set_count(), 1u);
}

TEST(Morgan, EthaneEnvironmentsBySymmetry) {
  // Both carbons are equivalent: one identifier at radius 0 and one at radius 1.
  const auto m = parse_smiles("CC");
  const auto ids = environment_ids(m, 1);
  EXPECT_EQ(ids[0][0], ids[0][1]);
  EXPECT_EQ(ids[1][0], ids[1][1]);
  EXPECT_NE(ids[0][0], ids[1][0]);
  EXPECT_LE(morgan_fingerprint(m, 1, 2048).set_count(), 2u);
}

TEST(Morgan, DeterministicAndParameterChecked) {
  const auto a = morgan_fingerprint(parse_smiles("CC(=O)Oc1ccccc1C(=O)O"));
  const auto b = morgan_fingerprint(parse_smiles("CC(=O)Oc1ccccc1C(=O)O"));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.nbits(), 2048);
  EXPECT_EQ(a.radius(), 2);
  const auto m = parse_smiles("CCO");
  EXPECT_THROW(morgan_fingerprint(m, 5, 2048), Error);
  EXPECT_THROW(morgan_fingerprint(m, -1, 2048), Error);
  EXPECT_THROW(morgan_fingerprint(m, 2, 1000), Error);
  EXPECT_THROW(morgan_fingerprint(m, 2, 8192), Error);
}

TEST(Morgan, SpellingAndPermutationInvariant) {
  for (const auto& [smiles, name] : testing::load_corpus()) {
    const auto m = parse_smiles(smiles);
    std::vector<int> perm(m.num_atoms());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(perm.size() - 1 - i);
    EXPECT_EQ(morgan_fingerprint(m), morgan_fingerprint(m.permuted(perm))) << name;
    const auto back = mol::parse_canonical(mol::canonical_form(m));
    EXPECT_EQ(morgan_fingerprint(m), morgan_fingerprint(back)) << name;
  }
}

TEST(Morgan, FoldingMonotoneInBits) {
  for (const auto& [smiles, name] : testing::load_corpus()) {
    const auto m = parse_smiles(smiles);
    for (int r = 0; r <= 3; ++r) {
      std::size_t prev = 0;
      for (int nbits : {512, 1024, 2048, 4096}) {
        const std::size_t c = morgan_fingerprint(m, r, nbits).set_count();
        EXPECT_GE(c, prev) << name << " r=" << r << " nbits=" << nbits;
        prev = c;
      }
    }
  }
}

TEST(Morgan, GoldenCorpus) {
  const std::string path = testing::data_path("corpus_fp_r2_2048.txt");
  std::vector<FingerprintEntry> current;
  for (const auto& [smiles, name] : testing::load_corpus()) {
    const auto m = parse_smiles(smiles);
    current.push_back({mol::canonical_form(m).text, morgan_fingerprint(m)});
  }
  if (std::getenv("NESTDRUG_REGENERATE_GOLDEN") != nullptr) {
    std::ofstream out(path);
    write_fingerprint_file(out, current);
  }
  std::ifstream in(path);
  ASSERT_TRUE(in.good()) << "missing golden file " << path;
  const auto golden = read_fingerprint_file(in);
  ASSERT_EQ(golden.size(), current.size());
  for (std::size_t i = 0; i < golden.size(); ++i) {
    EXPECT_EQ(golden[i].canonical, current[i].canonical) << i;
    EXPECT_EQ(golden[i].fingerprint, current[i].fingerprint) << current[i].canonical;
  }
}

TEST(Tanimoto, Examples) {
  const auto a = from_bits({1, 5, 9});
  EXPECT_EQ(tanimoto(a, a), 1.0);
  EXPECT_EQ(tanimoto(from_bits({1, 2}), from_bits({3, 4})), 0.0);
  EXPECT_EQ(tanimoto(from_bits({1, 2, 3}), from_bits({2, 3, 4})), 0.5);
  EXPECT_EQ(tanimoto(from_bits({}), from_bits({})), 1.0);
  EXPECT_THROW(tanimoto(Fingerprint(512, 2), Fingerprint(1024, 2)), Error);
  EXPECT_THROW(tanimoto(Fingerprint(512, 2), Fingerprint(512, 1)), Error);
}

TEST(Tanimoto, SymmetricBoundedAndMatchesSetOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_fp(rng, rng.uniform() * 0.3);
    const auto b = random_fp(rng, rng.uniform() * 0.3);
    const double s = tanimoto(a, b);
    EXPECT_EQ(s, tanimoto(b, a));
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_DOUBLE_EQ(s, tanimoto_oracle(a, b));
  }
}

TEST(NearestNeighbor, Examples) {
  const auto q = from_bits({1, 2, 3});
  const std::vector<Fingerprint> pool = {from_bits({7}), q, q};
  const auto nn = nn_similarity(q, pool);
  EXPECT_EQ(nn.similarity, 1.0);
  EXPECT_EQ(nn.index, 1u);
  const std::vector<Fingerprint> one = {from_bits({2, 3})};
  EXPECT_DOUBLE_EQ(nn_similarity(q, one).similarity, 2.0 / 3.0);
  const std::vector<Fingerprint> disjoint_identical = {from_bits({100}), q};
  EXPECT_EQ(nn_similarity(q, disjoint_identical).index, 1u);
  EXPECT_THROW(nn_similarity(q, std::span<const Fingerprint>{}), Error);
  try {
    one_nn_scores(std::span<const Fingerprint>{}, one);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyPool);
  }
}

TEST(OneNN, CopiedAndDisjointItems) {
  const std::vector<Fingerprint> train = {from_bits({1, 2}), from_bits({3, 4, 5})};
  const std::vector<Fingerprint> test = {train[1], train[0], from_bits({100, 200})};
  const auto scores = one_nn_scores(train, test);
  EXPECT_EQ(scores, (std::vector<double>{1.0, 1.0, 0.0}));
}

TEST(OneNN, ParallelMatchesSerialReference) {
  Rng rng(17);
  std::vector<Fingerprint> pool, queries;
  for (int i = 0; i < 300; ++i) pool.push_back(random_fp(rng, 0.05, 1024));
  for (int i = 0; i < 200; ++i) queries.push_back(random_fp(rng, 0.05, 1024));
  queries.push_back(pool[42]);
  const auto par = nn_search(queries, pool);
  const auto ser = nn_search_serial(queries, pool);
  ASSERT_EQ(par.size(), ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    EXPECT_EQ(par[i].similarity, ser[i].similarity);
    EXPECT_EQ(par[i].index, ser[i].index);
  }
  EXPECT_EQ(one_nn_scores(pool, queries), one_nn_scores_serial(pool, queries));
}

TEST(FingerprintFile, HexRoundTripAndBitOrder) {
  Fingerprint f(512, 2);
  f.set(0);
  f.set(9);
  f.set(511);
  const std::string hex = f.to_hex();
  ASSERT_EQ(hex.size(), 128u);
  EXPECT_EQ(hex.substr(0, 4), "0102");
  EXPECT_EQ(hex.substr(126), "80");
  EXPECT_EQ(Fingerprint::from_hex(hex, 512, 2), f);
  EXPECT_THROW(Fingerprint::from_hex("zz", 8, 2), Error);
  EXPECT_THROW(Fingerprint::from_hex(hex, 1024, 2), Error);
}

TEST(FingerprintFile, ReadWriteRoundTrip) {
  std::vector<FingerprintEntry> entries;
  for (const char* s : {"CCO", "c1ccccc1", "CC(=O)O"}) {
    const auto m = parse_smiles(s);
    entries.push_back({mol::canonical_form(m).text, morgan_fingerprint(m, 1, 1024)});
  }
  std::stringstream ss;
  write_fingerprint_file(ss, entries);
  EXPECT_EQ(ss.str().rfind("# radius=1 nbits=1024\n", 0), 0u);
  const auto back = read_fingerprint_file(ss);
  ASSERT_EQ(back.size(), entries.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].canonical, entries[i].canonical);
    EXPECT_EQ(back[i].fingerprint, entries[i].fingerprint);
  }
  std::stringstream bad("CCO no-tab\n");
  EXPECT_THROW(read_fingerprint_file(bad), Error);
}

}  // namespace
}  // namespace nestdrug::fp
