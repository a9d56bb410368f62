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

#include "nestdrug/dmta.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <memory>
#include <numeric>

#include "json.hpp"
#include "nestdrug/errors.hpp"
#include "nestdrug/evalkit.hpp"
#include "nestdrug/rng.hpp"

namespace nestdrug::dmta {

std::string_view to_string(ScorerKind k) {
  switch (k) {
    case ScorerKind::Random: return "random";
    case ScorerKind::Oracle: return "oracle";
    case ScorerKind::FingerprintNN: return "fingerprint-nn";
    case ScorerKind::Model: return "model";
  }
  return "?";
}

ScorerKind parse_scorer(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  for (auto k : {ScorerKind::Random, ScorerKind::Oracle, ScorerKind::FingerprintNN, ScorerKind::Model})
    if (s == to_string(k)) return k;
  if (s == "nn" || s == "fingerprint_nn") return ScorerKind::FingerprintNN;
  fail(ErrorKind::Config, "unknown scorer '" + std::string(name) + "' (random, oracle, fingerprint-nn, model)");
}

void Campaign::validate() const {
  require(!pool.records.empty(), ErrorKind::EmptyPool, "campaign pool is empty");
  require(rounds >= 1, ErrorKind::Config, "rounds must be at least 1");
  require(select_fraction > 0 && select_fraction <= 1, ErrorKind::Config, "select_fraction must lie in (0, 1]");
  for (const auto& r : pool.records)
    require(r.label.has_value(), ErrorKind::Data, "every pool record needs a hidden label");
  require(scorer != ScorerKind::Model || model.has_value(), ErrorKind::Config, "model scorer needs a model");
}

namespace {

std::vector<double> random_scores(const ReplayState& s, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "random-scorer", static_cast<std::uint64_t>(s.round)));
  std::vector<double> out(s.remaining.size());
  for (auto& v : out) v = rng.uniform();
  return out;
}

std::vector<double> oracle_scores(const ReplayState& s) {
  std::vector<double> out;
  out.reserve(s.remaining.size());
  for (std::size_t i : s.remaining) out.push_back(static_cast<double>(*s.pool->records[i].label));
  return out;
}

}  // namespace

CampaignResult replay_campaign(const Campaign& c, const Scorer& scorer, const RetrainHook& hook) {
  c.validate();
  require(static_cast<bool>(scorer), ErrorKind::Config, "no scorer supplied");
  CampaignResult res;
  res.scorer = c.scorer;
  res.pool_size = c.pool.records.size();
  for (const auto& r : c.pool.records) res.pool_actives += *r.label == 1 ? 1 : 0;
  res.random_hit_rate = static_cast<double>(res.pool_actives) / static_cast<double>(res.pool_size);

  ReplayState state;
  state.pool = &c.pool;
  state.remaining.resize(res.pool_size);
  std::iota(state.remaining.begin(), state.remaining.end(), 0);
  std::size_t hits = 0;
  for (int round = 0; round < c.rounds && !state.remaining.empty(); ++round) {
    state.round = round;
    std::vector<double> scores;
    try {
      scores = scorer(state);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      fail(ErrorKind::ScorerFailure, std::string("scorer failed: ") + e.what());
    }
    require(scores.size() == state.remaining.size(), ErrorKind::ScorerFailure,
            "scorer returned " + std::to_string(scores.size()) + " scores for " +
                std::to_string(state.remaining.size()) + " compounds");
    for (double s : scores) require(std::isfinite(s), ErrorKind::ScorerFailure, "scorer returned a non-finite score");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const std::size_t k = eval::top_count(c.select_fraction, state.remaining.size());

    RoundResult rr;
    rr.round = round;
    std::vector<bool> taken(state.remaining.size(), false);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t row = state.remaining[order[i]];
      taken[order[i]] = true;
      rr.selected.push_back(row);
      const int label = *c.pool.records[row].label;
      rr.hits += label == 1 ? 1 : 0;
      res.reveal_order.push_back(row);
      res.reveal_labels.push_back(label);
      state.revealed.push_back(row);
    }
    rr.hit_rate = static_cast<double>(rr.hits) / static_cast<double>(k);
    hits += rr.hits;
    res.cumulative_hits.push_back(hits);
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < state.remaining.size(); ++i)
      if (!taken[i]) rest.push_back(state.remaining[i]);
    state.remaining = std::move(rest);
    if (hook) hook(state, rr.selected);
    res.rounds.push_back(std::move(rr));
  }
  res.hit_rate = static_cast<double>(hits) / static_cast<double>(res.reveal_order.size());
  if (res.pool_actives > 0) res.enrichment = res.hit_rate / res.random_hit_rate;
  return res;
}

CampaignResult replay_campaign(const Campaign& c) {
  c.validate();
  switch (c.scorer) {
    case ScorerKind::Random:
      return replay_campaign(c, [seed = c.seed](const ReplayState& s) { return random_scores(s, seed); });
    case ScorerKind::Oracle:
      return replay_campaign(c, oracle_scores);
    case ScorerKind::FingerprintNN: {
      std::vector<fp::Fingerprint> fps(c.pool.records.size());
      for (std::size_t i = 0; i < fps.size(); ++i)
        fps[i] = fp::morgan_fingerprint(mol::parse_smiles(c.pool.records[i].smiles), c.radius, c.nbits);
      auto actives = std::make_shared<std::vector<fp::Fingerprint>>(c.known_actives);
      auto scorer = [&fps, actives](const ReplayState& s) {
        std::vector<fp::Fingerprint> queries;
        queries.reserve(s.remaining.size());
        for (std::size_t i : s.remaining) queries.push_back(fps[i]);
        if (actives->empty()) return std::vector<double>(queries.size(), 0.0);
        return fp::one_nn_scores(*actives, queries);
      };
      auto hook = [&fps, actives](const ReplayState& s, std::span<const std::size_t> now) {
        for (std::size_t i : now)
          if (*s.pool->records[i].label == 1) actives->push_back(fps[i]);
      };
      return replay_campaign(c, scorer, hook);
    }
    case ScorerKind::Model: {
      auto m = std::make_shared<model::NestModel>(c.model->clone());
      const train::TaskData data = train::from_dataset(c.pool);
      auto scorer = [m, &data](const ReplayState& s) { return train::predict(*m, data.subset(s.remaining)); };
      RetrainHook hook;
      if (c.retrain) {
        hook = [m, &data, &c](const ReplayState& s, std::span<const std::size_t> now) {
          train::PhaseConfig pc = c.retrain_config;
          pc.seed = derive_seed(c.seed, "dmta-retrain", static_cast<std::uint64_t>(s.round));
          train::continual_update(*m, {data.subset(std::vector<std::size_t>(now.begin(), now.end()))}, pc);
        };
      }
      return replay_campaign(c, scorer, hook);
    }
  }
  fail(ErrorKind::Internal, "unhandled scorer");
}

std::optional<std::size_t> experiments_to_n_hits(const CampaignResult& r, int n) {
  require(n >= 1, ErrorKind::Parameter, "n must be at least 1");
  int seen = 0;
  for (std::size_t i = 0; i < r.reveal_labels.size(); ++i) {
    if (r.reveal_labels[i] == 1 && ++seen == n) return i + 1;
  }
  return std::nullopt;
}

std::optional<double> random_experiments_to_n_hits(std::size_t pool, std::size_t actives, int n) {
  require(n >= 1, ErrorKind::Parameter, "n must be at least 1");
  if (static_cast<std::size_t>(n) > actives) return std::nullopt;
  return static_cast<double>(n) * static_cast<double>(pool + 1) / static_cast<double>(actives + 1);
}

double paired_random_hit_rate(const Campaign& c, int trials) {
  require(trials >= 1, ErrorKind::Parameter, "trials must be at least 1");
  double mean = 0;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t seed = derive_seed(c.seed, "paired-random", static_cast<std::uint64_t>(t));
    mean += replay_campaign(c, [seed](const ReplayState& s) { return random_scores(s, seed); }).hit_rate / trials;
  }
  return mean;
}

EnrichmentSummary enrichment_summary(std::span<const CampaignResult> results, int n_hits) {
  require(!results.empty(), ErrorKind::EmptySet, "no campaign results");
  EnrichmentSummary s;
  double e_sum = 0, h_sum = 0, r_sum = 0;
  std::size_t e_n = 0, r_n = 0;
  for (const auto& r : results) {
    SummaryRow row;
    row.scorer = r.scorer;
    row.hit_rate = r.hit_rate;
    row.random_hit_rate = r.random_hit_rate;
    row.enrichment = r.enrichment;
    row.experiments = experiments_to_n_hits(r, n_hits);
    row.random_experiments = random_experiments_to_n_hits(r.pool_size, r.pool_actives, n_hits);
    if (row.experiments && row.random_experiments)
      row.experiment_reduction = 1.0 - static_cast<double>(*row.experiments) / *row.random_experiments;
    if (row.enrichment) {
      e_sum += *row.enrichment;
      ++e_n;
    }
    if (row.experiment_reduction) {
      r_sum += *row.experiment_reduction;
      ++r_n;
    }
    h_sum += r.hit_rate;
    s.rows.push_back(row);
  }
  if (e_n > 0) s.mean_enrichment = e_sum / static_cast<double>(e_n);
  s.mean_hit_rate = h_sum / static_cast<double>(results.size());
  if (r_n > 0) s.mean_reduction = r_sum / static_cast<double>(r_n);
  return s;
}

CampaignSettings campaign_settings_from_json(const std::string& text) {
  CampaignSettings s;
  try {
    const auto j = nlohmann::json::parse(text);
    require(j.is_object(), ErrorKind::Config, "campaign config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
      if (key == "rounds") s.rounds = v.get<int>();
      else if (key == "select_fraction") s.select_fraction = v.get<double>();
      else if (key == "scorer") s.scorer = parse_scorer(v.get<std::string>());
      else if (key == "seed") s.seed = v.get<std::uint64_t>();
      else if (key == "radius") s.radius = v.get<int>();
      else if (key == "nbits") s.nbits = v.get<int>();
      else if (key == "retrain") s.retrain = v.get<bool>();
      else fail(ErrorKind::Config, "unknown campaign key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("campaign config: ") + e.what());
  }
  require(s.rounds >= 1, ErrorKind::Config, "rounds must be at least 1");
  require(s.select_fraction > 0 && s.select_fraction <= 1, ErrorKind::Config, "select_fraction must lie in (0, 1]");
  return s;
}

std::string campaign_settings_to_json(const CampaignSettings& s) {
  nlohmann::ordered_json j;
  j["rounds"] = s.rounds;
  j["select_fraction"] = s.select_fraction;
  j["scorer"] = to_string(s.scorer);
  j["seed"] = s.seed;
  j["radius"] = s.radius;
  j["nbits"] = s.nbits;
  j["retrain"] = s.retrain;
  return j.dump(2);
}

void apply(const CampaignSettings& s, Campaign& c) {
  c.rounds = s.rounds;
  c.select_fraction = s.select_fraction;
  c.scorer = s.scorer;
  c.seed = s.seed;
  c.radius = s.radius;
  c.nbits = s.nbits;
  c.retrain = s.retrain;
}

std::string campaign_result_json(const CampaignResult& r) {
  nlohmann::ordered_json j;
  j["scorer"] = to_string(r.scorer);
  j["pool_size"] = r.pool_size;
  j["pool_actives"] = r.pool_actives;
  j["revealed"] = r.revealed();
  j["hits"] = r.hits();
  j["hit_rate"] = r.hit_rate;
  j["random_hit_rate"] = r.random_hit_rate;
  j["enrichment"] = r.enrichment ? nlohmann::ordered_json(*r.enrichment) : nlohmann::ordered_json(nullptr);
  auto rounds = nlohmann::ordered_json::array();
  for (const auto& rr : r.rounds)
    rounds.push_back({{"round", rr.round}, {"selected", rr.selected}, {"hits", rr.hits}, {"hit_rate", rr.hit_rate}});
  j["rounds"] = std::move(rounds);
  j["cumulative_hits"] = r.cumulative_hits;
  return j.dump(2) + "\n";
}

std::string campaign_rounds_csv(const CampaignResult& r) {
  std::string out = "round,selected,hits,hit_rate,cumulative_hits\n";
  for (std::size_t i = 0; i < r.rounds.size(); ++i) {
    const auto& rr = r.rounds[i];
    out += std::to_string(rr.round) + "," + std::to_string(rr.selected.size()) + "," + std::to_string(rr.hits) + "," +
           eval::format_number(rr.hit_rate) + "," + std::to_string(r.cumulative_hits[i]) + "\n";
  }
  return out;
}

std::string enrichment_summary_csv(const EnrichmentSummary& s) {
  auto opt = [](const auto& v) { return v ? eval::format_number(static_cast<double>(*v)) : std::string(); };
  std::string out = "scorer,hit_rate,random_hit_rate,enrichment,experiments,random_experiments,experiment_reduction\n";
  for (const auto& r : s.rows) {
    out += std::string(to_string(r.scorer)) + "," + eval::format_number(r.hit_rate) + "," +
           eval::format_number(r.random_hit_rate) + "," + opt(r.enrichment) + "," +
           (r.experiments ? std::to_string(*r.experiments) : std::string()) + "," + opt(r.random_experiments) + "," +
           opt(r.experiment_reduction) + "\n";
  }
  out += "mean," + opt(s.mean_hit_rate) + ",," + opt(s.mean_enrichment) + ",,," + opt(s.mean_reduction) + "\n";
  return out;
}

}  // namespace nestdrug::dmta
