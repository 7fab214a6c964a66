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

#if defined(__x86_64__) || defined(_M_X64)
#include <immintrin.h>

namespace residiff::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  const __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

inline void accumulate(double* dst, __m256d v) {
  _mm256_storeu_pd(dst, _mm256_add_pd(_mm256_loadu_pd(dst), v));
}

// C[r, j] += sum_p A(r, p) * B[p, j] with A(r, p) = a[r * rs + p * ps].
// Register block: 4 rows x 8 columns.
void panel(std::size_t m, std::size_t n, std::size_t depth, const double* a,
           std::size_t rs, std::size_t ps, const double* b, double* c) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* a0 = a + (i + 0) * rs;
    const double* a1 = a + (i + 1) * rs;
    const double* a2 = a + (i + 2) * rs;
    const double* a3 = a + (i + 3) * rs;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256d c00 = _mm256_setzero_pd(), c01 = _mm256_setzero_pd();
      __m256d c10 = _mm256_setzero_pd(), c11 = _mm256_setzero_pd();
      __m256d c20 = _mm256_setzero_pd(), c21 = _mm256_setzero_pd();
      __m256d c30 = _mm256_setzero_pd(), c31 = _mm256_setzero_pd();
      for (std::size_t p = 0; p < depth; ++p) {
        const double* bp = b + p * n + j;
        const __m256d b0 = _mm256_loadu_pd(bp);
        const __m256d b1 = _mm256_loadu_pd(bp + 4);
        __m256d av = _mm256_broadcast_sd(a0 + p * ps);
        c00 = _mm256_fmadd_pd(av, b0, c00);
        c01 = _mm256_fmadd_pd(av, b1, c01);
        av = _mm256_broadcast_sd(a1 + p * ps);
        c10 = _mm256_fmadd_pd(av, b0, c10);
        c11 = _mm256_fmadd_pd(av, b1, c11);
        av = _mm256_broadcast_sd(a2 + p * ps);
        c20 = _mm256_fmadd_pd(av, b0, c20);
        c21 = _mm256_fmadd_pd(av, b1, c21);
        av = _mm256_broadcast_sd(a3 + p * ps);
        c30 = _mm256_fmadd_pd(av, b0, c30);
        c31 = _mm256_fmadd_pd(av, b1, c31);
      }
      accumulate(c + (i + 0) * n + j, c00);
      accumulate(c + (i + 0) * n + j + 4, c01);
      accumulate(c + (i + 1) * n + j, c10);
      accumulate(c + (i + 1) * n + j + 4, c11);
      accumulate(c + (i + 2) * n + j, c20);
      accumulate(c + (i + 2) * n + j + 4, c21);
      accumulate(c + (i + 3) * n + j, c30);
      accumulate(c + (i + 3) * n + j + 4, c31);
    }
    for (; j + 4 <= n; j += 4) {
      __m256d c0 = _mm256_setzero_pd(), c1 = _mm256_setzero_pd();
      __m256d c2 = _mm256_setzero_pd(), c3 = _mm256_setzero_pd();
      for (std::size_t p = 0; p < depth; ++p) {
        const __m256d bv = _mm256_loadu_pd(b + p * n + j);
        c0 = _mm256_fmadd_pd(_mm256_broadcast_sd(a0 + p * ps), bv, c0);
        c1 = _mm256_fmadd_pd(_mm256_broadcast_sd(a1 + p * ps), bv, c1);
        c2 = _mm256_fmadd_pd(_mm256_broadcast_sd(a2 + p * ps), bv, c2);
        c3 = _mm256_fmadd_pd(_mm256_broadcast_sd(a3 + p * ps), bv, c3);
      }
      accumulate(c + (i + 0) * n + j, c0);
      accumulate(c + (i + 1) * n + j, c1);
      accumulate(c + (i + 2) * n + j, c2);
      accumulate(c + (i + 3) * n + j, c3);
    }
    for (; j < n; ++j) {
      double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
      for (std::size_t p = 0; p < depth; ++p) {
        const double bv = b[p * n + j];
        s0 += a0[p * ps] * bv;
        s1 += a1[p * ps] * bv;
        s2 += a2[p * ps] * bv;
        s3 += a3[p * ps] * bv;
      }
      c[(i + 0) * n + j] += s0;
      c[(i + 1) * n + j] += s1;
      c[(i + 2) * n + j] += s2;
      c[(i + 3) * n + j] += s3;
    }
  }
  for (; i < m; ++i) {
    const double* ar = a + i * rs;
    double* crow = c + i * n;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t p = 0; p < depth; ++p) {
        acc = _mm256_fmadd_pd(_mm256_broadcast_sd(ar + p * ps),
                              _mm256_loadu_pd(b + p * n + j), acc);
      }
      accumulate(crow + j, acc);
    }
    for (; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < depth; ++p) s += ar[p * ps] * b[p * n + j];
      crow[j] += s;
    }
  }
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  panel(m, n, k, a, k, 1, b, c);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  panel(k, n, m, a, 1, k, b, c);
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), s1);
  }
  for (; i + 4 <= n; i += 4) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
  }
  double acc = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* ar = a + i * k;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + (j + 0) * k;
      const double* b1 = b + (j + 1) * k;
      const double* b2 = b + (j + 2) * k;
      const double* b3 = b + (j + 3) * k;
      __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
      __m256d s2 = _mm256_setzero_pd(), s3 = _mm256_setzero_pd();
      std::size_t p = 0;
      for (; p + 4 <= k; p += 4) {
        const __m256d av = _mm256_loadu_pd(ar + p);
        s0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b0 + p), s0);
        s1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b1 + p), s1);
        s2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b2 + p), s2);
        s3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b3 + p), s3);
      }
      double t0 = hsum(s0), t1 = hsum(s1), t2 = hsum(s2), t3 = hsum(s3);
      for (; p < k; ++p) {
        t0 += ar[p] * b0[p];
        t1 += ar[p] * b1[p];
        t2 += ar[p] * b2[p];
        t3 += ar[p] * b3[p];
      }
      c[i * n + j + 0] += t0;
      c[i * n + j + 1] += t1;
      c[i * n + j + 2] += t2;
      c[i * n + j + 3] += t3;
    }
    for (; j < n; ++j) c[i * n + j] += dot(ar, b + j * k, k);
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_abs_diff(const double* a, const double* b, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d s = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    s = _mm256_add_pd(s, _mm256_andnot_pd(sign, d));
  }
  double acc = hsum(s);
  for (; i < n; ++i) acc += a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
  return acc;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    s = _mm256_fmadd_pd(d, d, s);
  }
  double acc = hsum(s);
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

const KernelTable kAvx2Table = {Isa::kAvx2, gemm_nn, gemm_nt,      gemm_tn,
                                dot,        axpy,    sum_abs_diff, sum_sq_diff};

}  // namespace

namespace detail {
const KernelTable* avx2_table() { return &kAvx2Table; }
}  // namespace detail

}  // namespace residiff::simd

#else

namespace residiff::simd::detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace residiff::simd::detail

#endif
