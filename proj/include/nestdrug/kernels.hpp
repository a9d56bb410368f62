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

#include <cstddef>

// Dense row-major GEMM kernels. The OpenMP variants split work over output rows
// and accumulate each row in the same order as the serial reference, so both
// produce bitwise-identical results.
namespace nestdrug::kernels {

/// C[m×n] += A[m×k] · B[k×n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void gemm_nn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);

/// C[m×n] += A[m×k] · B[n×k]ᵀ
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void gemm_nt_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);

/// C[m×n] += A[k×m]ᵀ · B[k×n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);
void gemm_tn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n);

/// Work (m·k·n) below which the OpenMP variants run serially.
inline constexpr std::size_t kParallelThreshold = 1u << 16;

}  // namespace nestdrug::kernels
