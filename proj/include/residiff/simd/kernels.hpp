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

#pragma once

// Dense fp64 inner loops behind a runtime-selected function table.
//
// Every kernel has a portable scalar reference implementation. On x86-64 an
// AVX2+FMA variant is selected when the CPU reports both features; on
// AArch64 a NEON variant is always available. The variants are required to
// agree with the scalar reference to rounding (see tests/simd_test.cpp); they
// are not bit-identical because FMA and lane-wise accumulation change the
// order of rounding.
//
// Set RESIDIFF_SIMD=scalar in the environment to force the reference path.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace residiff::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  // C[m,n] += A[m,k] * B[k,n]                 (all row-major, dense)
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // C[m,n] += A[m,k] * B[n,k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  // C[k,n] += A[m,k]^T * B[m,n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a,
                  const double* b, double* c);
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // sum |a_i - b_i|
  double (*sum_abs_diff)(const double* a, const double* b, std::size_t n);
  // sum (a_i - b_i)^2
  double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);
};

// The table chosen for this process. Selected once, on first use.
const KernelTable& active();

// Table for a specific ISA, or nullptr when this build or CPU cannot run it.
const KernelTable* table_for(Isa isa);

// ISAs runnable here, scalar first.
std::vector<Isa> available();

namespace detail {
extern const KernelTable kScalarTable;
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();  // nullptr when not compiled in
}  // namespace detail

}  // namespace residiff::simd

namespace residiff::kernels {

// Span front-ends over simd::active(). Sizes are the caller's contract and
// are not re-checked here; the autodiff layer validates shapes before calling.

inline void gemm_nn(std::size_t m, std::size_t n, std::size_t k,
                    std::span<const double> a, std::span<const double> b,
                    std::span<double> c) {
  simd::active().gemm_nn(m, n, k, a.data(), b.data(), c.data());
}

inline void gemm_nt(std::size_t m, std::size_t n, std::size_t k,
                    std::span<const double> a, std::span<const double> b,
                    std::span<double> c) {
  simd::active().gemm_nt(m, n, k, a.data(), b.data(), c.data());
}

inline void gemm_tn(std::size_t m, std::size_t n, std::size_t k,
                    std::span<const double> a, std::span<const double> b,
                    std::span<double> c) {
  simd::active().gemm_tn(m, n, k, a.data(), b.data(), c.data());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return simd::active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  simd::active().axpy(alpha, x.data(), y.data(), x.size());
}

inline double sum_abs_diff(std::span<const double> a, std::span<const double> b) {
  return simd::active().sum_abs_diff(a.data(), b.data(), a.size());
}

inline double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
  return simd::active().sum_sq_diff(a.data(), b.data(), a.size());
}

}  // namespace residiff::kernels
