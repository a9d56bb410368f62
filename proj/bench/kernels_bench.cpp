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

// Serial reference vs OpenMP kernel for GEMM, fingerprint nearest-neighbour search and
// forest fitting. Set OMP_NUM_THREADS to choose the thread count of the parallel arms.

#include <benchmark/benchmark.h>

#include <vector>

#include "nestdrug/baselines.hpp"
#include "nestdrug/datasets.hpp"
#include "nestdrug/fingerprint.hpp"
#include "nestdrug/kernels.hpp"
#include "nestdrug/molgraph.hpp"
#include "nestdrug/rng.hpp"

namespace {

using namespace nestdrug;

template <auto Kernel>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  std::vector<double> a(n * n), b(n * n), c(n * n);
  for (double& v : a) v = rng.uniform(-1, 1);
  for (double& v : b) v = rng.uniform(-1, 1);
  for (auto _ : state) {
    Kernel(a.data(), b.data(), c.data(), n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Gemm<kernels::gemm_nn_serial>)->Name("gemm_nn/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<kernels::gemm_nn>)->Name("gemm_nn/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<kernels::gemm_nt_serial>)->Name("gemm_nt/serial")->Arg(256);
BENCHMARK(BM_Gemm<kernels::gemm_nt>)->Name("gemm_nt/parallel")->Arg(256);

std::vector<fp::Fingerprint> fingerprints(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<fp::Fingerprint> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(fp::morgan_fingerprint(mol::parse_smiles(synth_molecule(
        static_cast<std::uint32_t>(rng.below(64)), rng.next_u64()))));
  return out;
}

template <auto Search>
void BM_NnSearch(benchmark::State& state) {
  static const auto queries = fingerprints(500, 2);
  static const auto pool = fingerprints(2000, 3);
  for (auto _ : state) benchmark::DoNotOptimize(Search(queries, pool));
  state.SetItemsProcessed(state.iterations() * 500 * 2000);
}
BENCHMARK(BM_NnSearch<fp::nn_search_serial>)->Name("nn_search/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NnSearch<fp::nn_search>)->Name("nn_search/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NnSearch<fp::one_nn_scores_serial>)->Name("one_nn_scores/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NnSearch<fp::one_nn_scores>)->Name("one_nn_scores/parallel")->Unit(benchmark::kMillisecond);

template <auto Fit>
void BM_Forest(benchmark::State& state) {
  SynthConfig sc;
  sc.n_targets = 1;
  sc.n_per_target = 400;
  const auto d = synth_structured_shift(sc).dataset;
  std::vector<fp::Fingerprint> fps;
  std::vector<int> y;
  for (const auto& r : d.records) {
    fps.push_back(fp::morgan_fingerprint(mol::parse_smiles(r.smiles)));
    y.push_back(*r.label);
  }
  const auto x = rf::BitMatrix::from_fingerprints(fps);
  rf::ForestConfig config;
  config.n_trees = 64;
  for (auto _ : state) benchmark::DoNotOptimize(Fit(x, y, config));
}
BENCHMARK(BM_Forest<rf::fit_forest_serial>)->Name("fit_forest/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Forest<rf::fit_forest>)->Name("fit_forest/parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
