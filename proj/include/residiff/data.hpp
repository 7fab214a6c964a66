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

// Dataset plumbing: delimited-text ingest, chronological splits,
// train-only standardization, sliding windows with cached decompositions,
// and the synthetic generators.

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "residiff/frame.hpp"

namespace residiff::data {

// A parsed CSV: first column `date`, remaining columns numeric.
struct Table {
  std::vector<std::string> columns;  // value column names, `date` excluded
  std::vector<std::string> dates;
  Frame values;                      // channels = columns.size()
};

Table read_csv(const std::string& path);
Table parse_csv(const std::string& text, const std::string& source = "<memory>");
void write_csv(const std::string& path, const Table& table);

struct ScaleMeta {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<bool> clamped;  // std was ~0 and replaced by 1

  void standardize(Frame& frame) const;
  void destandardize(Frame& frame) const;
};

// Per-channel mean and population std. Constant channels get std 1 and a
// warning on stderr.
ScaleMeta fit_scale(const Frame& train);

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;  // test takes the remainder
};

struct Splits {
  Frame train, val, test;  // standardized
  ScaleMeta scale;
  std::size_t train_length = 0, val_length = 0, test_length = 0;
};

// Chronological, disjoint split; statistics from the train part only,
// unless `scale` supplies stored ones.
Splits split_and_standardize(const Frame& series, const SplitRatios& ratios,
                             const ScaleMeta* scale = nullptr);

// split_len - T - S + 1 (stride 1); ConfigError when not positive.
std::size_t window_count(std::size_t split_length, std::size_t lookback, std::size_t horizon,
                         const std::string& split_name = "split");

// One training example with its Fourier components.
struct Window {
  Frame x, x_non, x_stat, x_noise;  // lookback
  Frame y, y_non;                   // horizon
};

struct WindowOptions {
  std::size_t lookback = 96;
  std::size_t horizon = 96;
  std::size_t top = 2;     // K1
  std::size_t bottom = 2;  // K2
  std::size_t stride = 1;
};

Window make_window(const Frame& split, std::size_t start, const WindowOptions& options);
std::vector<Window> make_windows(const Frame& split, const WindowOptions& options,
                                 const std::string& split_name = "split");

// ---------------------------------------------------------------------------
// Synthetic series.

struct SynthOptions {
  std::string kind = "sinusoid-trend";  // or "ar1-seasonal"
  std::size_t length = 4000;
  std::size_t channels = 1;
  double sigma = 0.1;
  std::uint64_t seed = 0;
  // sinusoid-trend
  double amplitude1 = 1.0;
  double period1 = 24.0;
  double amplitude2 = 0.5;
  double period2 = 48.0;
  double trend = 0.02;  // half-range of the centered linear ramp
  // ar1-seasonal
  double phi = 0.4;
  double seasonal_amplitude = 0.5;
  double seasonal_period = 24.0;
};

struct SynthResult {
  Table table;
  Frame clean;  // deterministic part (no noise)
  std::vector<double> phases;  // per channel, radians
  // Generator parameters, one key/value per line in the sidecar.
  std::vector<std::pair<std::string, std::string>> meta;
};

SynthResult synthesize(const SynthOptions& options);
// Writes the CSV and `<path>.meta`.
SynthResult write_synth(const std::string& path, const SynthOptions& options);

}  // namespace residiff::data
