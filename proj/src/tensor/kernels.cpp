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

#include "nestdrug/kernels.hpp"

#include <cstdint>

namespace nestdrug::kernels {

namespace {

inline void row_nn(const double* a, const double* b, double* c, std::size_t i, std::size_t k, std::size_t n) {
  const double* arow = a + i * k;
  double* crow = c + i * n;
  for (std::size_t p = 0; p < k; ++p) {
    const double av = arow[p];
    if (av == 0.0) continue;
    const double* brow = b + p * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
  }
}

inline void row_nt(const double* a, const double* b, double* c, std::size_t i, std::size_t k, std::size_t n) {
  const double* arow = a + i * k;
  double* crow = c + i * n;
  for (std::size_t j = 0; j < n; ++j) {
    const double* brow = b + j * k;
    double s = 0.0;
    for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
    crow[j] += s;
  }
}

inline void row_tn(const double* a, const double* b, double* c, std::size_t i, std::size_t m, std::size_t k,
                   std::size_t n) {
  double* crow = c + i * n;
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a[p * m + i];
    if (av == 0.0) continue;
    const double* brow = b + p * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
  }
}

}  // namespace

void gemm_nn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) row_nn(a, b, c, i, k, n);
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n >= kParallelThreshold)
  for (std::int64_t i = 0; i < rows; ++i) row_nn(a, b, c, static_cast<std::size_t>(i), k, n);
}

void gemm_nt_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) row_nt(a, b, c, i, k, n);
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n >= kParallelThreshold)
  for (std::int64_t i = 0; i < rows; ++i) row_nt(a, b, c, static_cast<std::size_t>(i), k, n);
}

void gemm_tn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) row_tn(a, b, c, i, m, k, n);
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static) if (m * k * n >= kParallelThreshold)
  for (std::int64_t i = 0; i < rows; ++i) row_tn(a, b, c, static_cast<std::size_t>(i), m, k, n);
}

}  // namespace nestdrug::kernels
