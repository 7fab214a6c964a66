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

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "residiff/rng.hpp"
#include "residiff/simd/kernels.hpp"

namespace residiff::simd {
namespace {

std::vector<double> randn(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  rng.fill_normal(v);
  return v;
}

// Naive triple loops, independent of the kernel tables.
void ref_gemm_nn(std::size_t m, std::size_t n, std::size_t k, const std::vector<double>& a,
                 const std::vector<double>& b, std::vector<double>& c) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      long double s = 0;
      for (std::size_t p = 0; p < k; ++p) s += (long double)a[i * k + p] * b[p * n + j];
      c[i * n + j] += static_cast<double>(s);
    }
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST(Simd, ScalarAlwaysAvailableAndFirst) {
  const auto isas = available();
  ASSERT_FALSE(isas.empty());
  EXPECT_EQ(isas.front(), Isa::kScalar);
  EXPECT_NE(table_for(Isa::kScalar), nullptr);
}

TEST(Simd, ActiveHonoursEnvironmentOverride) {
  const char* forced = std::getenv("RESIDIFF_SIMD");
  if (forced && std::string_view(forced) == "scalar") {
    EXPECT_EQ(active().isa, Isa::kScalar);
  } else {
    // Without an override the widest available table wins.
    EXPECT_EQ(active().isa, available().back());
  }
}

TEST(Simd, GemmMatchesReferenceOnAllTables) {
  Rng rng(1);
  // Odd sizes exercise the vector tails.
  const std::size_t shapes[][3] = {{1, 1, 1}, {3, 5, 7}, {17, 13, 9}, {32, 33, 31}, {2, 96, 192}};
  for (Isa isa : available()) {
    const KernelTable& t = *table_for(isa);
    for (const auto& s : shapes) {
      const std::size_t m = s[0], n = s[1], k = s[2];
      const auto a = randn(m * k, rng), b = randn(k * n, rng), c0 = randn(m * n, rng);
      auto want = c0;
      ref_gemm_nn(m, n, k, a, b, want);
      auto got = c0;
      t.gemm_nn(m, n, k, a.data(), b.data(), got.data());
      EXPECT_LE(max_abs_diff(got, want), 1e-12 * (1.0 + k)) << isa_name(isa);

      // nt: B stored [n, k].
      std::vector<double> bt(n * k);
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = b[p * n + j];
      got = c0;
      t.gemm_nt(m, n, k, a.data(), bt.data(), got.data());
      EXPECT_LE(max_abs_diff(got, want), 1e-12 * (1.0 + k)) << isa_name(isa);

      // tn: C[k, n] += A[m, k]^T B[m, n].
      const auto bm = randn(m * n, rng), ck = randn(k * n, rng);
      std::vector<double> at(k * m);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) at[p * m + i] = a[i * k + p];
      auto want_tn = ck;
      ref_gemm_nn(k, n, m, at, bm, want_tn);
      auto got_tn = ck;
      t.gemm_tn(m, n, k, a.data(), bm.data(), got_tn.data());
      EXPECT_LE(max_abs_diff(got_tn, want_tn), 1e-12 * (1.0 + m)) << isa_name(isa);
    }
  }
}

TEST(Simd, ReductionsAgreeWithScalarReference) {
  Rng rng(2);
  const KernelTable& ref = *table_for(Isa::kScalar);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 100u, 1001u}) {
    const auto a = randn(n, rng), b = randn(n, rng);
    for (Isa isa : available()) {
      const KernelTable& t = *table_for(isa);
      const double tol = 1e-13 * (1.0 + n);
      EXPECT_NEAR(t.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), tol);
      EXPECT_NEAR(t.sum_abs_diff(a.data(), b.data(), n), ref.sum_abs_diff(a.data(), b.data(), n), tol);
      EXPECT_NEAR(t.sum_sq_diff(a.data(), b.data(), n), ref.sum_sq_diff(a.data(), b.data(), n), tol);
      auto y1 = b, y2 = b;
      t.axpy(0.37, a.data(), y1.data(), n);
      ref.axpy(0.37, a.data(), y2.data(), n);
      EXPECT_LE(max_abs_diff(y1, y2), 1e-15 * 8);
    }
  }
}

TEST(Simd, ScalarReductionsMatchClosedForm) {
  const std::vector<double> a{1, 2, 3}, b{4, -1, 3};
  const KernelTable& t = *table_for(Isa::kScalar);
  EXPECT_EQ(t.dot(a.data(), b.data(), 3), 4 - 2 + 9);
  EXPECT_EQ(t.sum_abs_diff(a.data(), b.data(), 3), 3 + 3 + 0);
  EXPECT_EQ(t.sum_sq_diff(a.data(), b.data(), 3), 9 + 9 + 0);
}

}  // namespace
}  // namespace residiff::simd
