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

#include "residiff/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_map>

#include "residiff/errors.hpp"
#include "residiff/simd/kernels.hpp"

namespace residiff::spectral {
namespace {

// cos/sin rows of the transform matrix, bins x n, row-major.
struct Basis {
  std::size_t n = 0;
  std::size_t bins = 0;
  std::vector<double> cos;
  std::vector<double> sin;
};

std::shared_ptr<const Basis> build_basis(std::size_t n) {
  auto basis = std::make_shared<Basis>();
  basis->n = n;
  basis->bins = bin_count(n);
  basis->cos.resize(basis->bins * n);
  basis->sin.resize(basis->bins * n);
  static constexpr double kQuarterCos[4] = {1.0, 0.0, -1.0, 0.0};
  static constexpr double kQuarterSin[4] = {0.0, 1.0, 0.0, -1.0};
  for (std::size_t f = 0; f < basis->bins; ++f) {
    for (std::size_t t = 0; t < n; ++t) {
      const std::size_t m = (f * t) % n;  // angle reduced to one turn
      double c, s;
      if ((4 * m) % n == 0) {
        c = kQuarterCos[4 * m / n];
        s = kQuarterSin[4 * m / n];
      } else {
        const double theta =
            2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
        c = std::cos(theta);
        s = std::sin(theta);
      }
      basis->cos[f * n + t] = c;
      basis->sin[f * n + t] = s;
    }
  }
  return basis;
}

std::shared_ptr<const Basis> basis_for(std::size_t n) {
  static std::mutex mu;
  static std::unordered_map<std::size_t, std::shared_ptr<const Basis>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = build_basis(n);
  return slot;
}

double bin_weight(std::size_t f, std::size_t n) {
  const bool nyquist = n % 2 == 0 && f == n / 2;
  return (f == 0 || nyquist) ? 1.0 : 2.0;
}

}  // namespace

Spectrum dft_real(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) {
    throw ConfigError("dft_real: series of length " + std::to_string(n) +
                      " is degenerate, need at least 2 samples");
  }
  const auto basis = basis_for(n);
  Spectrum s;
  s.length = n;
  s.bins.resize(basis->bins);
  s.amplitudes.resize(basis->bins);
  for (std::size_t f = 0; f < basis->bins; ++f) {
    const std::span<const double> crow(basis->cos.data() + f * n, n);
    const std::span<const double> srow(basis->sin.data() + f * n, n);
    const double re = kernels::dot(x, crow);
    const double im = -kernels::dot(x, srow);
    s.bins[f] = {re, im};
    s.amplitudes[f] = std::abs(s.bins[f]);
  }
  return s;
}

std::vector<double> idft_real(const Spectrum& spectrum, std::span<const std::size_t> keep_bins) {
  const std::size_t n = spectrum.length;
  const auto basis = basis_for(n);
  std::vector<bool> used(spectrum.bin_count(), false);
  std::vector<double> out(n, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t f : keep_bins) {
    if (f >= spectrum.bin_count()) {
      throw RangeError("idft_real: bin " + std::to_string(f) + " out of range for " +
                       std::to_string(spectrum.bin_count()) + " bins");
    }
    if (used[f]) throw RangeError("idft_real: bin " + std::to_string(f) + " listed twice");
    used[f] = true;
    const double w = bin_weight(f, n) * inv_n;
    const std::span<const double> crow(basis->cos.data() + f * n, n);
    const std::span<const double> srow(basis->sin.data() + f * n, n);
    kernels::axpy(w * spectrum.bins[f].real(), crow, out);
    kernels::axpy(-w * spectrum.bins[f].imag(), srow, out);
  }
  return out;
}

BinSelection select_bins(const Spectrum& spectrum, std::size_t top, std::size_t bottom) {
  const std::size_t bins = spectrum.bin_count();
  if (top + bottom > bins) {
    throw ConfigError("decompose: K1 + K2 = " + std::to_string(top + bottom) + " exceeds the " +
                      std::to_string(bins) + " available frequency bins");
  }
  const auto& amp = spectrum.amplitudes;
  std::vector<std::size_t> order(bins);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return amp[a] != amp[b] ? amp[a] > amp[b] : a < b;
  });
  BinSelection sel;
  sel.top.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top));
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(top), order.end());
  std::sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
    return amp[a] != amp[b] ? amp[a] < amp[b] : a > b;
  });
  sel.bottom.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(bottom));
  return sel;
}

ChannelDecomposition decompose(std::span<const double> x, const Spectrum& spectrum,
                               std::size_t top, std::size_t bottom) {
  if (x.size() != spectrum.length) {
    throw DimensionError("decompose: series of length " + std::to_string(x.size()) +
                         " does not match spectrum of length " + std::to_string(spectrum.length));
  }
  ChannelDecomposition out;
  out.selection = select_bins(spectrum, top, bottom);
  out.non = idft_real(spectrum, out.selection.top);
  out.noise = idft_real(spectrum, out.selection.bottom);
  out.stat.resize(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) out.stat[t] = x[t] - out.non[t] - out.noise[t];
  return out;
}

Decomposition decompose(const Frame& x, std::size_t top, std::size_t bottom) {
  Decomposition out;
  out.non = Frame(x.channels, x.steps);
  out.stat = Frame(x.channels, x.steps);
  out.noise = Frame(x.channels, x.steps);
  out.selections.reserve(x.channels);
  for (std::size_t c = 0; c < x.channels; ++c) {
    const auto series = x.channel(c);
    auto part = decompose(series, dft_real(series), top, bottom);
    std::copy(part.non.begin(), part.non.end(), out.non.channel(c).begin());
    std::copy(part.stat.begin(), part.stat.end(), out.stat.channel(c).begin());
    std::copy(part.noise.begin(), part.noise.end(), out.noise.channel(c).begin());
    out.selections.push_back(std::move(part.selection));
  }
  return out;
}

}  // namespace residiff::spectral
