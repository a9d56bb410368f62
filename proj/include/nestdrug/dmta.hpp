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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nestdrug/datasets.hpp"
#include "nestdrug/fingerprint.hpp"
#include "nestdrug/training.hpp"

namespace nestdrug::dmta {

enum class ScorerKind { Random, Oracle, FingerprintNN, Model };
std::string_view to_string(ScorerKind k);
ScorerKind parse_scorer(std::string_view name);

/// What a scorer may see: the pool and the rows revealed so far (labels of unrevealed rows stay hidden).
struct ReplayState {
  const Dataset* pool = nullptr;
  std::vector<std::size_t> remaining;  // pool rows not yet selected, ascending
  std::vector<std::size_t> revealed;   // in reveal order
  int round = 0;
};

/// Scores for state.remaining, same order. Larger means selected first.
using Scorer = std::function<std::vector<double>(const ReplayState& state)>;
/// Called after each round with the rows revealed in that round.
using RetrainHook = std::function<void(const ReplayState& state, std::span<const std::size_t> revealed_now)>;

struct Campaign {
  Dataset pool;  // every record must carry a label
  int rounds = 1;
  double select_fraction = 0.30;
  ScorerKind scorer = ScorerKind::Random;
  std::uint64_t seed = 1;
  // Fingerprint-NN scorer: known actives before the campaign; revealed hits are added each round.
  std::vector<fp::Fingerprint> known_actives;
  int radius = fp::kDefaultRadius;
  int nbits = fp::kDefaultBits;
  // Model scorer: scored on each record's own context and updated with continual_update per round.
  std::optional<model::NestModel> model;
  bool retrain = true;
  train::PhaseConfig retrain_config = train::continual_defaults();

  void validate() const;
};

struct RoundResult {
  int round = 0;
  std::vector<std::size_t> selected;  // pool rows in selection order
  std::size_t hits = 0;
  double hit_rate = 0;
};

struct CampaignResult {
  ScorerKind scorer = ScorerKind::Random;
  std::size_t pool_size = 0;
  std::size_t pool_actives = 0;
  std::vector<RoundResult> rounds;
  std::vector<std::size_t> reveal_order;
  std::vector<int> reveal_labels;
  std::vector<std::size_t> cumulative_hits;  // after each round
  double hit_rate = 0;          // hits / revealed
  double random_hit_rate = 0;   // analytic: pool prevalence
  std::optional<double> enrichment;  // absent for a pool without actives

  std::size_t revealed() const { return reveal_order.size(); }
  std::size_t hits() const { return cumulative_hits.empty() ? 0 : cumulative_hits.back(); }
};

/// Greedy top-k replay: each round scores the remaining pool, selects the top
/// ceil(fraction·remaining) with ties in pool order, reveals their labels and calls the hook.
CampaignResult replay_campaign(const Campaign& c);
/// Same loop with a caller-supplied scorer and optional hook.
CampaignResult replay_campaign(const Campaign& c, const Scorer& scorer, const RetrainHook& hook = {});

/// Number of revealed compounds up to and including the n-th hit; nullopt when fewer hits.
std::optional<std::size_t> experiments_to_n_hits(const CampaignResult& r, int n);

/// Expected reveals to the n-th hit under random order without replacement: n(P + 1)/(K + 1).
std::optional<double> random_experiments_to_n_hits(std::size_t pool, std::size_t actives, int n);

/// Mean hit rate of `trials` random-scorer replays with derived seeds; validates the analytic baseline.
double paired_random_hit_rate(const Campaign& c, int trials);

struct SummaryRow {
  ScorerKind scorer = ScorerKind::Random;
  double hit_rate = 0;
  double random_hit_rate = 0;
  std::optional<double> enrichment;
  std::optional<std::size_t> experiments;         // to n hits
  std::optional<double> random_experiments;       // expected, to n hits
  std::optional<double> experiment_reduction;     // 1 - experiments / random_experiments
};

struct EnrichmentSummary {
  std::vector<SummaryRow> rows;
  std::optional<double> mean_enrichment;
  std::optional<double> mean_hit_rate;
  std::optional<double> mean_reduction;
};

EnrichmentSummary enrichment_summary(std::span<const CampaignResult> results, int n_hits = 50);

struct CampaignSettings {
  int rounds = 1;
  double select_fraction = 0.30;
  ScorerKind scorer = ScorerKind::Random;
  std::uint64_t seed = 1;
  int radius = fp::kDefaultRadius;
  int nbits = fp::kDefaultBits;
  bool retrain = true;
};
CampaignSettings campaign_settings_from_json(const std::string& json);
std::string campaign_settings_to_json(const CampaignSettings& s);
void apply(const CampaignSettings& s, Campaign& c);

std::string campaign_result_json(const CampaignResult& r);
std::string campaign_rounds_csv(const CampaignResult& r);
std::string enrichment_summary_csv(const EnrichmentSummary& s);

}  // namespace nestdrug::dmta
