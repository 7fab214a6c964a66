// Copyright 2026 The residiff Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "residiff/simd/kernels.hpp"

#if defined(__aarch64__)
#include <arm_neon.h>

namespace residiff::simd {
namespace {

// Row-streaming variants: two fp64 lanes per vector, no register blocking.

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t s0 = vdupq_n_f64(0.0), s1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 = vfmaq_f64(s0, vld1q_f64(a + i), vld1q_f64(b + i));
    s1 = vfmaq_f64(s1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(s0, s1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) axpy(a[i * k + p], b + p * n, c + i * n, n);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(a + i * k, b + j * k, k);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) axpy(a[i * k + p], b + i * n, c + p * n, n);
}

double sum_abs_diff(const double* a, const double* b, std::size_t n) {
  float64x2_t s = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) s = vaddq_f64(s, vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  double acc = vaddvq_f64(s);
  for (; i < n; ++i) acc += a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
  return acc;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  float64x2_t s = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    s = vfmaq_f64(s, d, d);
  }
  double acc = vaddvq_f64(s);
  for (; i < n; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

const KernelTable kNeonTable = {Isa::kNeon, gemm_nn, gemm_nt,      gemm_tn,
                                dot,        axpy,    sum_abs_diff, sum_sq_diff};

}  // namespace

namespace detail {
const KernelTable* neon_table() { return &kNeonTable; }
}  // namespace detail

}  // namespace residiff::simd

#else

namespace residiff::simd::detail {
const KernelTable* neon_table() { return nullptr; }
}  // namespace residiff::simd::detail

#endif
