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

#include <algorithm>
#include <bit>
#include <istream>
#include <ostream>
#include <sstream>

#include "nestdrug/errors.hpp"
#include "nestdrug/rng.hpp"

namespace nestdrug::fp {

namespace {

bool valid_nbits(int nbits) { return nbits == 512 || nbits == 1024 || nbits == 2048 || nbits == 4096; }

std::uint64_t bond_code(mol::BondOrder order) { return static_cast<std::uint64_t>(order) + 1; }

std::uint64_t atom_invariant(const mol::Atom& a) {
  std::uint64_t h = 0x6d6f7267616e3031ULL;
  h = hash_combine(h, static_cast<std::uint64_t>(a.atomic_number));
  h = hash_combine(h, static_cast<std::uint64_t>(a.degree));
  h = hash_combine(h, static_cast<std::uint64_t>(a.hydrogen_count));
  h = hash_combine(h, static_cast<std::uint64_t>(a.formal_charge + 16));
  h = hash_combine(h, a.aromatic ? 1u : 0u);
  h = hash_combine(h, a.in_ring ? 1u : 0u);
  return h;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

Fingerprint::Fingerprint(int nbits, int radius) : nbits_(nbits), radius_(radius) {
  require(nbits > 0 && std::has_single_bit(static_cast<unsigned>(nbits)), ErrorKind::Parameter,
          "fingerprint length must be a power of two, got " + std::to_string(nbits));
  require(radius >= 0, ErrorKind::Parameter, "fingerprint radius must be non-negative");
  words_.assign((static_cast<std::size_t>(nbits) + 63) / 64, 0);
}

void Fingerprint::set(int bit) {
  auto& w = words_[bit >> 6];
  const std::uint64_t mask = std::uint64_t{1} << (bit & 63);
  if (!(w & mask)) {
    w |= mask;
    ++set_count_;
  }
}

std::string Fingerprint::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(static_cast<std::size_t>(nbits_) / 4);
  for (int byte = 0; byte < nbits_ / 8; ++byte) {
    const auto v = static_cast<unsigned>((words_[byte / 8] >> (8 * (byte % 8))) & 0xffu);
    out.push_back(kDigits[v >> 4]);
    out.push_back(kDigits[v & 0xf]);
  }
  return out;
}

Fingerprint Fingerprint::from_hex(const std::string& hex, int nbits, int radius) {
  Fingerprint f(nbits, radius);
  require(hex.size() * 4 == static_cast<std::size_t>(nbits), ErrorKind::Data,
          "hex length " + std::to_string(hex.size()) + " does not match " + std::to_string(nbits) + " bits");
  for (std::size_t byte = 0; byte < hex.size() / 2; ++byte) {
    const int hi = hex_value(hex[2 * byte]);
    const int lo = hex_value(hex[2 * byte + 1]);
    require(hi >= 0 && lo >= 0, ErrorKind::Data, "invalid hex digit in fingerprint");
    const int v = hi * 16 + lo;
    for (int k = 0; k < 8; ++k) {
      if (v & (1 << k)) f.set(static_cast<int>(byte) * 8 + k);
    }
  }
  return f;
}

std::vector<std::vector<std::uint64_t>> environment_ids(const mol::MolGraph& m, int radius) {
  const std::size_t n = m.num_atoms();
  std::vector<std::vector<std::uint64_t>> ids(static_cast<std::size_t>(radius) + 1, std::vector<std::uint64_t>(n));
  for (std::size_t v = 0; v < n; ++v) ids[0][v] = atom_invariant(m.atom(v));
  std::vector<std::pair<std::uint64_t, std::uint64_t>> around;
  for (int r = 1; r <= radius; ++r) {
    const auto& prev = ids[r - 1];
    for (std::size_t v = 0; v < n; ++v) {
      around.clear();
      for (const auto& nb : m.neighbors(v)) around.emplace_back(bond_code(m.bond(nb.bond).order), prev[nb.atom]);
      std::sort(around.begin(), around.end());
      std::uint64_t h = hash_combine(prev[v], static_cast<std::uint64_t>(r));
      for (const auto& [code, id] : around) h = hash_combine(h, hash_combine(code, id));
      ids[r][v] = h;
    }
  }
  return ids;
}

Fingerprint morgan_fingerprint(const mol::MolGraph& m, int radius, int nbits) {
  require(radius >= 0 && radius <= 4, ErrorKind::Parameter, "radius must be in [0, 4], got " + std::to_string(radius));
  require(valid_nbits(nbits), ErrorKind::Parameter,
          "nbits must be one of 512, 1024, 2048, 4096, got " + std::to_string(nbits));
  Fingerprint f(nbits, radius);
  for (const auto& level : environment_ids(m, radius)) {
    for (const std::uint64_t id : level) f.set(static_cast<int>(id % static_cast<std::uint64_t>(nbits)));
  }
  return f;
}

std::size_t intersection_count(const Fingerprint& a, const Fingerprint& b) {
  require(a.nbits() == b.nbits() && a.radius() == b.radius(), ErrorKind::Shape,
          "fingerprint parameters differ: " + std::to_string(a.nbits()) + "/r" + std::to_string(a.radius()) + " vs " +
              std::to_string(b.nbits()) + "/r" + std::to_string(b.radius()));
  const auto wa = a.words();
  const auto wb = b.words();
  std::size_t count = 0;
  for (std::size_t i = 0; i < wa.size(); ++i) count += static_cast<std::size_t>(std::popcount(wa[i] & wb[i]));
  return count;
}

double tanimoto(const Fingerprint& a, const Fingerprint& b) {
  const std::size_t both = intersection_count(a, b);
  const std::size_t either = a.set_count() + b.set_count() - both;
  if (either == 0) return 1.0;
  return static_cast<double>(both) / static_cast<double>(either);
}

Neighbor nn_similarity(const Fingerprint& query, std::span<const Fingerprint> pool) {
  require(!pool.empty(), ErrorKind::EmptyPool, "nearest-neighbour pool is empty");
  Neighbor best{tanimoto(query, pool[0]), 0};
  for (std::size_t i = 1; i < pool.size(); ++i) {
    const double s = tanimoto(query, pool[i]);
    if (s > best.similarity) best = {s, i};
  }
  return best;
}

std::vector<Neighbor> nn_search_serial(std::span<const Fingerprint> queries, std::span<const Fingerprint> pool) {
  require(!pool.empty(), ErrorKind::EmptyPool, "nearest-neighbour pool is empty");
  std::vector<Neighbor> out(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) out[q] = nn_similarity(queries[q], pool);
  return out;
}

std::vector<Neighbor> nn_search(std::span<const Fingerprint> queries, std::span<const Fingerprint> pool) {
  require(!pool.empty(), ErrorKind::EmptyPool, "nearest-neighbour pool is empty");
  for (const auto& p : pool) {
    require(p.nbits() == pool[0].nbits() && p.radius() == pool[0].radius(), ErrorKind::Shape,
            "pool fingerprints have mixed parameters");
  }
  for (const auto& q : queries) {
    require(q.nbits() == pool[0].nbits() && q.radius() == pool[0].radius(), ErrorKind::Shape,
            "query fingerprint parameters differ from the pool");
  }
  std::vector<Neighbor> out(queries.size());
  const auto nq = static_cast<std::int64_t>(queries.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t q = 0; q < nq; ++q) {
    const Fingerprint& query = queries[q];
    const auto wq = query.words();
    Neighbor best{-1.0, 0};
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const auto wp = pool[i].words();
      std::size_t both = 0;
      for (std::size_t w = 0; w < wq.size(); ++w) both += static_cast<std::size_t>(std::popcount(wq[w] & wp[w]));
      const std::size_t either = query.set_count() + pool[i].set_count() - both;
      const double s = either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
      if (s > best.similarity) best = {s, i};
    }
    out[q] = best;
  }
  return out;
}

std::vector<double> one_nn_scores_serial(std::span<const Fingerprint> train_actives,
                                         std::span<const Fingerprint> test) {
  const auto found = nn_search_serial(test, train_actives);
  std::vector<double> scores(found.size());
  for (std::size_t i = 0; i < found.size(); ++i) scores[i] = found[i].similarity;
  return scores;
}

std::vector<double> one_nn_scores(std::span<const Fingerprint> train_actives, std::span<const Fingerprint> test) {
  const auto found = nn_search(test, train_actives);
  std::vector<double> scores(found.size());
  for (std::size_t i = 0; i < found.size(); ++i) scores[i] = found[i].similarity;
  return scores;
}

void write_fingerprint_file(std::ostream& out, std::span<const FingerprintEntry> entries) {
  if (!entries.empty()) {
    out << "# radius=" << entries[0].fingerprint.radius() << " nbits=" << entries[0].fingerprint.nbits() << '\n';
  }
  for (const auto& e : entries) {
    require(e.canonical.find_first_of("\t\n") == std::string::npos, ErrorKind::Data,
            "canonical form contains a tab or newline");
    out << e.canonical << '\t' << e.fingerprint.to_hex() << '\n';
  }
}

std::vector<FingerprintEntry> read_fingerprint_file(std::istream& in, int default_radius, int default_nbits) {
  int radius = default_radius;
  int nbits = default_nbits;
  std::vector<FingerprintEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream header(line.substr(1));
      std::string token;
      while (header >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = token.substr(0, eq);
        const std::string value = token.substr(eq + 1);
        try {
          if (key == "radius") radius = std::stoi(value);
          if (key == "nbits") nbits = std::stoi(value);
        } catch (const std::exception&) {
          fail(ErrorKind::Data, "bad fingerprint header value on line " + std::to_string(line_no));
        }
      }
      continue;
    }
    const auto tab = line.find('\t');
    require(tab != std::string::npos, ErrorKind::Data,
            "fingerprint line " + std::to_string(line_no) + " has no tab separator");
    out.push_back({line.substr(0, tab), Fingerprint::from_hex(line.substr(tab + 1), nbits, radius)});
  }
  return out;
}

}  // namespace nestdrug::fp
