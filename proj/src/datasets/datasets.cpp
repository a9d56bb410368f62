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

#include "nestdrug/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "nestdrug/errors.hpp"
#include "nestdrug/molgraph.hpp"
#include "nestdrug/rng.hpp"

namespace nestdrug {

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out << body;
  require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + path.string());
}

using RecordKey = std::tuple<std::string, int, int, int>;

RecordKey key_of(const ActivityRecord& r) { return {r.canonical, r.target_id, r.assay_id, r.round_id}; }

}  // namespace

std::string_view to_string(ActivityUnit unit) {
  switch (unit) {
    case ActivityUnit::nM: return "nM";
    case ActivityUnit::uM: return "uM";
    case ActivityUnit::M: return "M";
    case ActivityUnit::pIC50: return "pIC50";
  }
  return "?";
}

ActivityUnit parse_unit(std::string_view text) {
  if (text == "nM") return ActivityUnit::nM;
  if (text == "uM" || text == "\xC2\xB5M" || text == "\xCE\xBCM") return ActivityUnit::uM;
  if (text == "M") return ActivityUnit::M;
  if (text == "pIC50") return ActivityUnit::pIC50;
  fail(ErrorKind::Schema, "unknown activity unit '" + std::string(text) + "'");
}

double to_pic50(double value, ActivityUnit unit) {
  require(value > 0 && std::isfinite(value), ErrorKind::NonPositive,
          "activity value must be positive, got " + format_double(value));
  double p = 0;
  switch (unit) {
    case ActivityUnit::nM: p = 9.0 - std::log10(value); break;
    case ActivityUnit::uM: p = 6.0 - std::log10(value); break;
    case ActivityUnit::M: p = -std::log10(value); break;
    case ActivityUnit::pIC50: p = value; break;
  }
  return std::clamp(p, 3.0, 12.0);
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    require(records[i].label.has_value(), ErrorKind::Data, "record " + std::to_string(i) + " has no label");
    out.push_back(*records[i].label);
  }
  return out;
}

int Dataset::max_target_id() const {
  int m = 0;
  for (const auto& r : records) m = std::max(m, r.target_id);
  return m;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.source = source;
  out.options = options;
  out.records.reserve(rows.size());
  for (std::size_t i : rows) out.records.push_back(records.at(i));
  return out;
}

IngestResult ingest_csv_text(std::string_view text, const IngestOptions& options, std::string source) {
  IngestResult result;
  Dataset& d = result.dataset;
  d.source = std::move(source);
  d.options = options;

  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start < text.size();) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  require(!lines.empty(), ErrorKind::Schema, d.source + ": missing header line");
  std::string_view header = lines[0];
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  if (header != kCsvHeader) {
    const auto got = split_commas(header);
    const auto want = split_commas(kCsvHeader);
    for (const auto& col : want) {
      require(std::find(got.begin(), got.end(), col) != got.end(), ErrorKind::Schema,
              d.source + ": missing column '" + std::string(col) + "'");
    }
    fail(ErrorKind::Schema, d.source + ": header must be exactly '" + std::string(kCsvHeader) + "'");
  }

  std::set<RecordKey> seen;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    const std::string_view line = lines[ln];
    if (line.empty()) continue;
    auto reject = [&](const std::string& reason) { result.rejects.push_back({ln + 1, std::string(line), reason}); };
    const auto f = split_commas(line);
    if (f.size() != 8) {
      reject("expected 8 fields, found " + std::to_string(f.size()));
      continue;
    }
    ActivityRecord r;
    r.smiles = std::string(f[0]);
    const auto target = parse_int(f[1]), assay = parse_int(f[2]), round = parse_int(f[3]);
    if (!target || !assay || !round || *target < 0 || *assay < 0 || *round < 0) {
      reject("context ids must be non-negative integers");
      continue;
    }
    r.target_id = *target;
    r.assay_id = *assay;
    r.round_id = *round;
    if (!f[4].empty()) {
      r.year = parse_int(f[4]);
      if (!r.year) {
        reject("year is not an integer");
        continue;
      }
    }
    const auto value = parse_double(f[5]);
    if (!value) {
      reject("activity_value is not a number");
      continue;
    }
    r.activity_value = *value;
    try {
      r.activity_unit = parse_unit(f[6]);
      r.pic50 = to_pic50(r.activity_value, r.activity_unit);
    } catch (const Error& e) {
      reject(e.what());
      continue;
    }
    if (f[7].empty()) {
      r.label = *r.pic50 >= options.active_threshold ? 1 : 0;
    } else if (f[7] == "1" || f[7] == "active") {
      r.label = 1;
    } else if (f[7] == "0" || f[7] == "inactive") {
      r.label = 0;
    } else {
      reject("label must be empty, 0/1 or active/inactive");
      continue;
    }
    try {
      const auto mol = mol::parse_smiles(r.smiles);
      r.canonical = mol::canonical_form(mol, {.strip_stereo = options.strip_stereo}).text;
    } catch (const SyntaxError& e) {
      reject(std::string(to_string(e.kind())) + " at position " + std::to_string(e.position()) + ": " + e.reason());
      continue;
    } catch (const Error& e) {
      reject(std::string(to_string(e.kind())) + ": " + e.what());
      continue;
    }
    if (!seen.insert(key_of(r)).second) {
      if (options.deduplicate) {
        d.warnings.push_back("line " + std::to_string(ln + 1) + ": duplicate (molecule, target, assay, round) dropped");
        continue;
      }
      ++d.flagged_duplicates;
    }
    d.records.push_back(std::move(r));
  }
  if (d.flagged_duplicates > 0) {
    d.warnings.push_back(std::to_string(d.flagged_duplicates) + " duplicate keys kept (deduplication disabled)");
  }
  if (d.records.empty()) d.warnings.push_back(d.source + ": no records ingested");
  if (!result.rejects.empty()) d.warnings.push_back(std::to_string(result.rejects.size()) + " rows rejected");
  return result;
}

IngestResult ingest_csv(const std::filesystem::path& path, const IngestOptions& options) {
  return ingest_csv_text(read_file(path), options, path.string());
}

std::string rejects_csv(const std::vector<Reject>& rejects) {
  std::string body = "line,row,reason\n";
  for (const auto& r : rejects) {
    std::string reason = r.reason;
    std::replace(reason.begin(), reason.end(), '"', '\'');
    std::string row = r.row;
    std::replace(row.begin(), row.end(), '"', '\'');
    body += std::to_string(r.line) + ",\"" + row + "\",\"" + reason + "\"\n";
  }
  return body;
}

void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects) {
  write_file(path, rejects_csv(rejects));
}

std::string to_csv(const Dataset& d) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : d.records) {
    out += r.smiles + "," + std::to_string(r.target_id) + "," + std::to_string(r.assay_id) + "," +
           std::to_string(r.round_id) + "," + (r.year ? std::to_string(*r.year) : "") + "," +
           format_double(r.activity_value) + "," + std::string(to_string(r.activity_unit)) + "," +
           (r.label ? std::to_string(*r.label) : "") + "\n";
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& d) { write_file(path, to_csv(d)); }

std::string to_jsonl(const Dataset& d) {
  std::string out;
  for (const auto& r : d.records) {
    nlohmann::ordered_json j;
    j["smiles"] = r.smiles;
    j["canonical"] = r.canonical;
    j["target_id"] = r.target_id;
    j["assay_id"] = r.assay_id;
    j["round_id"] = r.round_id;
    j["year"] = r.year ? nlohmann::ordered_json(*r.year) : nlohmann::ordered_json(nullptr);
    j["activity_value"] = r.activity_value;
    j["activity_unit"] = std::string(to_string(r.activity_unit));
    j["label"] = r.label ? nlohmann::ordered_json(*r.label) : nlohmann::ordered_json(nullptr);
    j["pic50"] = r.pic50 ? nlohmann::ordered_json(*r.pic50) : nlohmann::ordered_json(nullptr);
    out += j.dump() + "\n";
  }
  return out;
}

Dataset from_jsonl(std::string_view text) {
  Dataset d;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ActivityRecord r;
      r.smiles = j.at("smiles").get<std::string>();
      r.canonical = j.at("canonical").get<std::string>();
      r.target_id = j.at("target_id").get<int>();
      r.assay_id = j.at("assay_id").get<int>();
      r.round_id = j.at("round_id").get<int>();
      if (!j.at("year").is_null()) r.year = j["year"].get<int>();
      r.activity_value = j.at("activity_value").get<double>();
      r.activity_unit = parse_unit(j.at("activity_unit").get<std::string>());
      if (!j.at("label").is_null()) r.label = j["label"].get<int>();
      if (!j.at("pic50").is_null()) r.pic50 = j["pic50"].get<double>();
      d.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Schema, "JSONL line " + std::to_string(ln) + ": " + e.what());
    }
  }
  return d;
}

void write_jsonl(const std::filesystem::path& path, const Dataset& d) { write_file(path, to_jsonl(d)); }

Dataset read_jsonl(const std::filesystem::path& path) {
  Dataset d = from_jsonl(read_file(path));
  d.source = path.string();
  return d;
}

std::vector<double> standardized_pic50(const Dataset& d) {
  std::map<int, std::pair<double, double>> moments;  // target -> (sum, count)
  for (const auto& r : d.records) {
    if (!r.pic50) continue;
    auto& m = moments[r.target_id];
    m.first += *r.pic50;
    m.second += 1;
  }
  std::map<int, double> mean, ss;
  for (const auto& [t, m] : moments) mean[t] = m.first / m.second;
  for (const auto& r : d.records) {
    if (r.pic50) ss[r.target_id] += (*r.pic50 - mean[r.target_id]) * (*r.pic50 - mean[r.target_id]);
  }
  std::vector<double> out(d.records.size(), std::nan(""));
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    if (!r.pic50) continue;
    const double sd = std::sqrt(ss[r.target_id] / moments[r.target_id].second);
    out[i] = sd > 0 ? (*r.pic50 - mean[r.target_id]) / sd : 0.0;
  }
  return out;
}

// ---- synthetic data ----

namespace {

const char* const kMotifSmiles[kSynthMotifs] = {"F", "Cl", "O", "N", "C#N", "C(=O)O"};

}  // namespace

std::string synth_molecule(std::uint32_t motif_bits, std::uint64_t seed) {
  Rng rng(seed);
  const bool aromatic = rng.bernoulli(0.5);
  std::vector<std::string> subs(6);
  std::vector<int> slots = {0, 1, 2, 3, 4, 5};
  rng.shuffle(std::span<int>(slots));
  for (int k = 0; k < kSynthMotifs; ++k) {
    if ((motif_bits >> k) & 1U) {
      subs[static_cast<std::size_t>(slots[k])] = (rng.bernoulli(0.3) ? "C" : "") + std::string(kMotifSmiles[k]);
    } else if (rng.bernoulli(0.4)) {
      subs[static_cast<std::size_t>(slots[k])] = rng.bernoulli(0.5) ? "C" : "CC";
    }
  }
  std::string s;
  for (int i = 0; i < 6; ++i) {
    s += aromatic ? "c" : "C";
    if (i == 0 || i == 5) s += "1";
    if (!subs[static_cast<std::size_t>(i)].empty()) s += "(" + subs[static_cast<std::size_t>(i)] + ")";
  }
  return s;
}

double SynthTruth::rule_logit(int target_id, std::uint32_t bits) const {
  require(target_id >= 1 && static_cast<std::size_t>(target_id) <= w.size(), ErrorKind::IdOutOfRange,
          "no planted rule for target " + std::to_string(target_id));
  double z = 0;
  const auto& wt = w[static_cast<std::size_t>(target_id - 1)];
  for (std::size_t k = 0; k < wt.size(); ++k) z += wt[k] * (((bits >> k) & 1U) ? 1.0 : -1.0);
  return z;
}

SynthDataset synth_structured_shift(const SynthConfig& c) {
  require(c.n_targets >= 1 && c.n_per_target >= 1, ErrorKind::Parameter, "synthetic data needs targets and rows");
  require(c.shift_strength >= 0 && c.shift_strength <= 1, ErrorKind::Parameter, "shift_strength must be in [0, 1]");
  require(c.label_noise >= 0 && c.n_assays >= 1 && c.n_rounds >= 1, ErrorKind::Parameter,
          "label_noise must be >= 0 and assay/round counts positive");
  SynthDataset out;
  SynthTruth& t = out.truth;
  t.shift_strength = c.shift_strength;
  t.label_noise = c.label_noise;
  for (const char* m : kMotifSmiles) t.motifs.emplace_back(m);

  Rng rule_rng(derive_seed(c.seed, "synth-rule"));
  t.w0.resize(kSynthMotifs);
  for (double& v : t.w0) v = rule_rng.normal();
  t.u.resize(static_cast<std::size_t>(c.n_targets));
  for (int target = 0; target < c.n_targets; ++target) {
    auto& u = t.u[static_cast<std::size_t>(target)];
    if (target % 2 == 1) {
      u = t.u[static_cast<std::size_t>(target - 1)];
      for (double& v : u) v = -v;
    } else {
      u.resize(kSynthMotifs);
      for (double& v : u) v = rule_rng.normal();
    }
  }
  for (const auto& u : t.u) {
    std::vector<double> w(kSynthMotifs);
    for (int k = 0; k < kSynthMotifs; ++k) w[k] = (1 - c.shift_strength) * t.w0[k] + c.shift_strength * u[k];
    t.w.push_back(std::move(w));
  }

  Dataset& d = out.dataset;
  d.source = "synthetic:seed=" + std::to_string(c.seed) + ",targets=" + std::to_string(c.n_targets) +
             ",per_target=" + std::to_string(c.n_per_target) + ",shift=" + format_double(c.shift_strength);
  Rng rng(derive_seed(c.seed, "synth-rows"));
  std::set<RecordKey> seen;
  for (int target = 1; target <= c.n_targets; ++target) {
    for (int i = 0; i < c.n_per_target; ++i) {
      ActivityRecord r;
      std::uint32_t bits = 0;
      for (int attempt = 0;; ++attempt) {
        require(attempt < 1000, ErrorKind::Internal, "synthetic generator cannot find a fresh molecule");
        bits = static_cast<std::uint32_t>(rng.below(1U << kSynthMotifs));
        r.smiles = synth_molecule(bits, rng.next_u64());
        r.canonical = mol::canonical_form(mol::parse_smiles(r.smiles)).text;
        r.target_id = target;
        r.assay_id = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(c.n_assays)));
        r.round_id = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(c.n_rounds)));
        if (seen.insert(key_of(r)).second) break;
      }
      r.year = 2018 + r.round_id;
      const double z = t.rule_logit(target, bits);
      const double noisy = c.label_noise > 0 ? z + c.label_noise * rng.normal() : z;
      r.activity_unit = ActivityUnit::pIC50;
      r.activity_value = std::clamp(6.0 + 0.5 * noisy, 3.0, 12.0);
      r.pic50 = r.activity_value;
      r.label = *r.pic50 >= 6.0 ? 1 : 0;
      t.motif_bits.push_back(bits);
      t.logit.push_back(z);
      t.p_active.push_back(c.label_noise > 0 ? 0.5 * std::erfc(-z / (c.label_noise * std::sqrt(2.0)))
                                             : (z >= 0 ? 1.0 : 0.0));
      d.records.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace nestdrug
