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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nestdrug {

enum class ActivityUnit { nM, uM, M, pIC50 };

std::string_view to_string(ActivityUnit unit);
/// Accepts "nM", "uM", "µM", "M", "pIC50". Throws Schema for anything else.
ActivityUnit parse_unit(std::string_view text);

struct ActivityRecord {
  std::string smiles;
  std::string canonical;  // CanonicalForm text
  int target_id = 0;
  int assay_id = 0;
  int round_id = 0;
  std::optional<int> year;
  double activity_value = 0;
  ActivityUnit activity_unit = ActivityUnit::pIC50;
  std::optional<int> label;  // 1 active, 0 inactive
  std::optional<double> pic50;
};

struct IngestOptions {
  double active_threshold = 6.0;
  bool deduplicate = true;
  bool strip_stereo = false;  // canonical forms without E/Z
};

struct Dataset {
  std::vector<ActivityRecord> records;
  std::string source;
  IngestOptions options;
  std::vector<std::string> warnings;
  std::size_t flagged_duplicates = 0;  // duplicates kept because deduplication was off

  [[nodiscard]] std::size_t size() const { return records.size(); }
  [[nodiscard]] std::vector<int> labels() const;  // throws Data if any label is missing
  [[nodiscard]] int max_target_id() const;
  [[nodiscard]] Dataset subset(const std::vector<std::size_t>& rows) const;
};

/// Convert to molar, take -log10, clip to [3, 12]. pIC50 inputs are only clipped.
double to_pic50(double value, ActivityUnit unit);

struct Reject {
  std::size_t line = 0;  // 1-based line number in the input file
  std::string row;
  std::string reason;
};

struct IngestResult {
  Dataset dataset;
  std::vector<Reject> rejects;
};

inline constexpr std::string_view kCsvHeader =
    "smiles,target_id,assay_id,round_id,year,activity_value,activity_unit,label";

IngestResult ingest_csv(const std::filesystem::path& path, const IngestOptions& options = {});
IngestResult ingest_csv_text(std::string_view text, const IngestOptions& options = {},
                             std::string source = "<memory>");

std::string rejects_csv(const std::vector<Reject>& rejects);
void write_rejects(const std::filesystem::path& path, const std::vector<Reject>& rejects);
void write_csv(const std::filesystem::path& path, const Dataset& d);
std::string to_csv(const Dataset& d);

/// Line-delimited JSON: one object per record.
std::string to_jsonl(const Dataset& d);
Dataset from_jsonl(std::string_view text);
void write_jsonl(const std::filesystem::path& path, const Dataset& d);
Dataset read_jsonl(const std::filesystem::path& path);

/// pIC50 standardized to zero mean and unit variance within each target.
/// Rows without pIC50 get NaN; targets with zero variance map to 0.
std::vector<double> standardized_pic50(const Dataset& d);

// ---- synthetic structured-shift data ----

struct SynthConfig {
  int n_targets = 4;
  int n_per_target = 500;
  double shift_strength = 0.8;
  std::uint64_t seed = 1;
  double label_noise = 0.0;  // std of Gaussian noise added to the planted logit
  int n_assays = 2;
  int n_rounds = 4;
};

/// Planted rule: logit_t(x) = Σ_k w[t][k]·(2·x_k - 1) with w_t = (1 - s)·w0 + s·u_t,
/// where targets are paired and paired targets get opposite u.
struct SynthTruth {
  std::vector<std::string> motifs;
  std::vector<double> w0;
  std::vector<std::vector<double>> u;  // per target (index target_id - 1)
  std::vector<std::vector<double>> w;
  double shift_strength = 0;
  double label_noise = 0;
  std::vector<std::uint32_t> motif_bits;  // per record, bit k = motif k present
  std::vector<double> logit;              // noiseless planted logit per record
  std::vector<double> p_active;           // P(label = 1) per record under the planted rule

  [[nodiscard]] double rule_logit(int target_id, std::uint32_t bits) const;
};

struct SynthDataset {
  Dataset dataset;
  SynthTruth truth;
};

SynthDataset synth_structured_shift(const SynthConfig& config);

/// Synthetic molecule with the given motif set, built from the scaffold grammar.
std::string synth_molecule(std::uint32_t motif_bits, std::uint64_t seed);

inline constexpr int kSynthMotifs = 6;

}  // namespace nestdrug
