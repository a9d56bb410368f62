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
#include <bit>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>

#include "nestdrug/baselines.hpp"
#include "nestdrug/errors.hpp"
#include "nestdrug/rng.hpp"

namespace nestdrug::rf {

BitMatrix::BitMatrix(std::size_t rows, std::size_t features)
    : rows_(rows), features_(features), words_((features + 63) / 64), bits_(rows * words_, 0) {}

void BitMatrix::set(std::size_t row, std::size_t feature) {
  require(row < rows_ && feature < features_, ErrorKind::Shape, "BitMatrix::set out of range");
  bits_[row * words_ + (feature >> 6)] |= std::uint64_t{1} << (feature & 63);
}

BitMatrix BitMatrix::from_fingerprints(std::span<const fp::Fingerprint> fps, std::span<const int> contexts,
                                       std::size_t n_contexts) {
  require(contexts.empty() || contexts.size() == fps.size(), ErrorKind::Shape,
          "one context per fingerprint is required");
  const std::size_t nbits = fps.empty() ? 0 : static_cast<std::size_t>(fps[0].nbits());
  BitMatrix x(fps.size(), nbits + n_contexts);
  for (std::size_t r = 0; r < fps.size(); ++r) {
    require(static_cast<std::size_t>(fps[r].nbits()) == nbits, ErrorKind::Shape, "fingerprint widths differ");
    const auto w = fps[r].words();
    std::copy(w.begin(), w.end(), x.bits_.begin() + static_cast<std::ptrdiff_t>(r * x.words_));
    if (!contexts.empty()) {
      require(contexts[r] >= 0 && static_cast<std::size_t>(contexts[r]) < n_contexts, ErrorKind::IdOutOfRange,
              "context id " + std::to_string(contexts[r]) + " outside the one-hot block");
      x.set(r, nbits + static_cast<std::size_t>(contexts[r]));
    }
  }
  return x;
}

void ForestConfig::validate() const {
  require(n_trees >= 1, ErrorKind::Config, "n_trees must be >= 1");
  require(max_depth >= 0, ErrorKind::Config, "max_depth must be >= 0");
  require(min_leaf >= 1, ErrorKind::Config, "min_leaf must be >= 1");
  require(feature_fraction >= 0 && feature_fraction <= 1, ErrorKind::Config, "feature_fraction must be in [0, 1]");
}

int DecisionTree::depth() const {
  if (feature.empty()) return 0;
  std::vector<int> d(feature.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < feature.size(); ++i) {  // children always follow their parent
    if (feature[i] < 0) continue;
    d[static_cast<std::size_t>(left[i])] = d[static_cast<std::size_t>(right[i])] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

double DecisionTree::predict(const BitMatrix& x, std::size_t row) const {
  std::size_t node = 0;
  while (feature[node] >= 0) {
    node = static_cast<std::size_t>(x.get(row, static_cast<std::size_t>(feature[node])) ? right[node] : left[node]);
  }
  return value[node];
}

namespace {

double gini(double pos, double n) {
  if (n <= 0) return 0;
  const double p = pos / n;
  return 2 * p * (1 - p);
}

class TreeBuilder {
 public:
  TreeBuilder(const BitMatrix& x, std::span<const int> y, const ForestConfig& c, std::size_t mtry, Rng rng)
      : x_(x), y_(y), c_(c), mtry_(mtry), rng_(std::move(rng)) {}

  DecisionTree build(std::vector<std::size_t> samples) {
    grow(samples, 0, samples.size(), 0);
    return std::move(tree_);
  }

 private:
  std::size_t add_node(double value) {
    tree_.feature.push_back(-1);
    tree_.left.push_back(-1);
    tree_.right.push_back(-1);
    tree_.value.push_back(value);
    return tree_.feature.size() - 1;
  }

  void grow(std::vector<std::size_t>& s, std::size_t begin, std::size_t end, int depth) {
    const auto n = static_cast<double>(end - begin);
    double pos = 0;
    for (std::size_t i = begin; i < end; ++i) pos += y_[s[i]];
    const std::size_t node = add_node(pos / n);
    if (depth >= c_.max_depth || pos == 0 || pos == n || end - begin < 2 * static_cast<std::size_t>(c_.min_leaf)) {
      return;
    }

    // Draw features in random order; constant features are skipped and do not use up the quota.
    std::vector<std::size_t> order(x_.features());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> candidates;
    std::vector<std::pair<double, double>> stats;  // (n with bit set, positives with bit set)
    for (std::size_t k = 0; k < order.size() && candidates.size() < mtry_; ++k) {
      const std::size_t j = k + rng_.below(order.size() - k);
      std::swap(order[k], order[j]);
      const std::size_t f = order[k];
      double n1 = 0, p1 = 0;
      for (std::size_t i = begin; i < end; ++i) {
        if (x_.get(s[i], f)) {
          n1 += 1;
          p1 += y_[s[i]];
        }
      }
      if (n1 == 0 || n1 == n) continue;
      candidates.push_back(f);
      stats.emplace_back(n1, p1);
    }

    const double parent = gini(pos, n);
    double best_gain = 0;
    std::size_t best_feature = 0;
    bool found = false;
    std::vector<std::size_t> idx(candidates.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return candidates[a] < candidates[b]; });
    for (std::size_t k : idx) {
      const auto [n1, p1] = stats[k];
      const double n0 = n - n1, p0 = pos - p1;
      if (n0 < c_.min_leaf || n1 < c_.min_leaf) continue;
      const double child = (n0 * gini(p0, n0) + n1 * gini(p1, n1)) / n;
      const double gain = parent - child;
      if (gain > best_gain + 1e-15) {
        best_gain = gain;
        best_feature = candidates[k];
        found = true;
      }
    }
    if (!found) return;

    const auto mid = std::stable_partition(s.begin() + static_cast<std::ptrdiff_t>(begin),
                                           s.begin() + static_cast<std::ptrdiff_t>(end),
                                           [&](std::size_t i) { return !x_.get(i, best_feature); }) -
                     s.begin();
    tree_.feature[node] = static_cast<std::int32_t>(best_feature);
    tree_.left[node] = static_cast<std::int32_t>(tree_.feature.size());
    grow(s, begin, static_cast<std::size_t>(mid), depth + 1);
    tree_.right[node] = static_cast<std::int32_t>(tree_.feature.size());
    grow(s, static_cast<std::size_t>(mid), end, depth + 1);
  }

  const BitMatrix& x_;
  std::span<const int> y_;
  const ForestConfig& c_;
  std::size_t mtry_;
  Rng rng_;
  DecisionTree tree_;
};

std::size_t candidate_count(const ForestConfig& c, std::size_t features) {
  const double f = static_cast<double>(features);
  const double m = c.feature_fraction > 0 ? std::ceil(c.feature_fraction * f) : std::floor(std::sqrt(f));
  return std::max<std::size_t>(1, static_cast<std::size_t>(m));
}

DecisionTree fit_tree(const BitMatrix& x, std::span<const int> y, const ForestConfig& c, int t) {
  Rng rng(derive_seed(c.seed, "tree", static_cast<std::uint64_t>(t)));
  std::vector<std::size_t> samples(x.rows());
  for (auto& s : samples) s = rng.below(x.rows());
  std::sort(samples.begin(), samples.end());
  return TreeBuilder(x, y, c, candidate_count(c, x.features()), std::move(rng)).build(std::move(samples));
}

void check_inputs(const BitMatrix& x, std::span<const int> y, const ForestConfig& c) {
  c.validate();
  require(x.rows() > 0, ErrorKind::EmptyData, "cannot fit a forest on no samples");
  require(x.rows() == y.size(), ErrorKind::Shape,
          "forest: " + std::to_string(x.rows()) + " rows vs " + std::to_string(y.size()) + " labels");
  require(x.rows() >= 2, ErrorKind::EmptyData, "a forest needs at least two samples");
  std::size_t pos = 0;
  for (int v : y) {
    require(v == 0 || v == 1, ErrorKind::Data, "forest labels must be 0 or 1");
    pos += static_cast<std::size_t>(v);
  }
  require(pos > 0 && pos < y.size(), ErrorKind::OneClassOnly, "forest training labels contain a single class");
}

}  // namespace

Forest fit_forest_serial(const BitMatrix& x, std::span<const int> y, const ForestConfig& config) {
  check_inputs(x, y, config);
  Forest f{config, x.features(), {}};
  for (int t = 0; t < config.n_trees; ++t) f.trees.push_back(fit_tree(x, y, config, t));
  return f;
}

Forest fit_forest(const BitMatrix& x, std::span<const int> y, const ForestConfig& config) {
  check_inputs(x, y, config);
  Forest f{config, x.features(), std::vector<DecisionTree>(static_cast<std::size_t>(config.n_trees))};
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1)
  for (int t = 0; t < config.n_trees; ++t) {
    try {
      f.trees[static_cast<std::size_t>(t)] = fit_tree(x, y, config, t);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return f;
}

std::vector<double> predict_proba(const Forest& forest, const BitMatrix& x) {
  require(x.features() == forest.n_features, ErrorKind::Shape,
          "forest expects " + std::to_string(forest.n_features) + " features, got " + std::to_string(x.features()));
  std::vector<double> out(x.rows(), 0.0);
  const auto n = static_cast<std::int64_t>(x.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < n; ++r) {
    double s = 0;
    for (const auto& t : forest.trees) s += t.predict(x, static_cast<std::size_t>(r));
    out[static_cast<std::size_t>(r)] = s / static_cast<double>(forest.trees.size());
  }
  return out;
}

// ---- NDRF1 ----

namespace {

constexpr char kMagic[8] = {'N', 'D', 'R', 'F', '1', 0, 0, 0};

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "forest IO assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void put_array(std::ostream& out, const std::vector<T>& v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(static_cast<bool>(in), ErrorKind::Data, "truncated forest file");
  return v;
}

template <typename T>
std::vector<T> get_array(std::istream& in, std::size_t n) {
  std::vector<T> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
  require(static_cast<bool>(in), ErrorKind::Data, "truncated forest file");
  return v;
}

}  // namespace

void write_forest(std::ostream& out, const Forest& f) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(out, f.n_features);
  put<std::int32_t>(out, f.config.n_trees);
  put<std::int32_t>(out, f.config.max_depth);
  put<std::int32_t>(out, f.config.min_leaf);
  put<double>(out, f.config.feature_fraction);
  put<std::uint64_t>(out, f.config.seed);
  put<std::uint64_t>(out, f.trees.size());
  for (const auto& t : f.trees) {
    put<std::uint64_t>(out, t.size());
    put_array(out, t.feature);
    put_array(out, t.left);
    put_array(out, t.right);
    put_array(out, t.value);
  }
}

Forest read_forest(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  require(static_cast<bool>(in) && std::equal(magic, magic + 8, kMagic), ErrorKind::Data, "not an NDRF1 forest");
  Forest f;
  f.n_features = get<std::uint64_t>(in);
  f.config.n_trees = get<std::int32_t>(in);
  f.config.max_depth = get<std::int32_t>(in);
  f.config.min_leaf = get<std::int32_t>(in);
  f.config.feature_fraction = get<double>(in);
  f.config.seed = get<std::uint64_t>(in);
  const auto n_trees = get<std::uint64_t>(in);
  require(n_trees < (1u << 24), ErrorKind::Data, "implausible tree count in forest file");
  for (std::uint64_t t = 0; t < n_trees; ++t) {
    const auto n = get<std::uint64_t>(in);
    require(n >= 1 && n < (1u << 28), ErrorKind::Data, "implausible node count in forest file");
    DecisionTree tree;
    tree.feature = get_array<std::int32_t>(in, n);
    tree.left = get_array<std::int32_t>(in, n);
    tree.right = get_array<std::int32_t>(in, n);
    tree.value = get_array<double>(in, n);
    for (std::size_t i = 0; i < n; ++i) {
      if (tree.feature[i] < 0) continue;
      require(static_cast<std::uint64_t>(tree.feature[i]) < f.n_features && tree.left[i] > static_cast<int>(i) &&
                  tree.right[i] > static_cast<int>(i) && static_cast<std::uint64_t>(tree.left[i]) < n &&
                  static_cast<std::uint64_t>(tree.right[i]) < n,
              ErrorKind::Data, "corrupt node in forest file");
    }
    f.trees.push_back(std::move(tree));
  }
  return f;
}

void save_forest(const std::string& path, const Forest& forest) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path);
  write_forest(out, forest);
  require(static_cast<bool>(out), ErrorKind::Io, "failed writing " + path);
}

Forest load_forest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot read " + path);
  return read_forest(in);
}

// ---- experiments ----

std::vector<fp::Fingerprint> fingerprints(const Dataset& dataset, int radius, int nbits) {
  std::vector<fp::Fingerprint> out(dataset.records.size());
  const auto n = static_cast<std::int64_t>(out.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          fp::morgan_fingerprint(mol::parse_smiles(dataset.records[static_cast<std::size_t>(i)].smiles), radius, nbits);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

RfExperimentResult rf_train_test(const Dataset& dataset, std::span<const std::size_t> train_rows,
                                 std::span<const std::size_t> test_rows, const RfExperimentConfig& config) {
  const auto fps = fingerprints(dataset, config.radius, config.nbits);
  const auto labels = dataset.labels();
  auto pick = [&](std::span<const std::size_t> rows, std::vector<fp::Fingerprint>& f, std::vector<int>& y) {
    for (std::size_t r : rows) {
      f.push_back(fps.at(r));
      y.push_back(labels[r]);
    }
  };
  std::vector<fp::Fingerprint> f_train, f_test;
  std::vector<int> y_train, y_test;
  pick(train_rows, f_train, y_train);
  pick(test_rows, f_test, y_test);

  RfExperimentResult out;
  out.target_id = dataset.records.empty() ? 0 : dataset.records[train_rows.empty() ? 0 : train_rows[0]].target_id;
  out.n_train = y_train.size();
  out.n_train_actives = static_cast<std::size_t>(std::count(y_train.begin(), y_train.end(), 1));
  out.n_test = y_test.size();
  out.n_test_actives = static_cast<std::size_t>(std::count(y_test.begin(), y_test.end(), 1));
  require(out.n_train_actives >= static_cast<std::size_t>(config.min_train_actives), ErrorKind::InsufficientData,
          "target " + std::to_string(out.target_id) + " has " + std::to_string(out.n_train_actives) +
              " training actives, " + std::to_string(config.min_train_actives) + " required");
  const Forest forest = fit_forest(BitMatrix::from_fingerprints(f_train), y_train, config.forest);
  const auto probs = predict_proba(forest, BitMatrix::from_fingerprints(f_test));
  out.metrics = eval::classification_bundle(probs, y_test);
  return out;
}

RfExperimentResult per_target_rf_experiment(const Dataset& dataset, int target_id, const RfExperimentConfig& config) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    if (dataset.records[i].target_id == target_id && dataset.records[i].label) rows.push_back(i);
  }
  require(!rows.empty(), ErrorKind::InsufficientData, "target " + std::to_string(target_id) + " has no labelled records");
  const Dataset sub = dataset.subset(rows);
  const auto labels = sub.labels();
  const auto plan = eval::stratified_kfold(labels, config.folds, config.split_seed);
  const auto train = plan.train_rows(config.test_fold);
  const auto test = plan.test_rows(config.test_fold);
  auto result = rf_train_test(sub, train, test, config);
  result.target_id = target_id;
  return result;
}

}  // namespace nestdrug::rf
