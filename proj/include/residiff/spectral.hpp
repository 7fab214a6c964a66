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

// Real-input DFT and the amplitude-ranked three-way split of a window into
// non-stationary (largest-amplitude bins), noise (smallest-amplitude bins)
// and stationary (everything else) components.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "residiff/frame.hpp"

namespace residiff::spectral {

// Half spectrum of a real signal: bins 0..floor(n/2).
struct Spectrum {
  std::size_t length = 0;
  std::vector<std::complex<double>> bins;
  std::vector<double> amplitudes;

  std::size_t bin_count() const { return bins.size(); }
};

inline std::size_t bin_count(std::size_t length) { return length / 2 + 1; }

// Unnormalized forward transform, direct O(n^2) evaluation. Needs n >= 2.
Spectrum dft_real(std::span<const double> x);

// Real reconstruction from a subset of bins. Each kept bin contributes itself
// and its mirrored negative frequency. Bin indices must be < bin_count().
std::vector<double> idft_real(const Spectrum& spectrum, std::span<const std::size_t> keep_bins);

struct BinSelection {
  std::vector<std::size_t> top;     // K1 largest amplitudes, lower index wins ties
  std::vector<std::size_t> bottom;  // K2 smallest of the rest, higher index wins ties
};

// Requires top + bottom <= bin_count().
BinSelection select_bins(const Spectrum& spectrum, std::size_t top, std::size_t bottom);

struct ChannelDecomposition {
  std::vector<double> non;
  std::vector<double> stat;
  std::vector<double> noise;
  BinSelection selection;
};

// Split one channel whose spectrum is already known.
ChannelDecomposition decompose(std::span<const double> x, const Spectrum& spectrum,
                               std::size_t top, std::size_t bottom);

struct Decomposition {
  Frame non;
  Frame stat;
  Frame noise;
  std::vector<BinSelection> selections;  // one per channel
};

// Per-channel split; stat = x - non - noise.
Decomposition decompose(const Frame& x, std::size_t top, std::size_t bottom);

}  // namespace residiff::spectral
