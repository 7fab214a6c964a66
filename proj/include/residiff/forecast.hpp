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

// Inference: point forecast plus sampled residuals, and test-split
// evaluation.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "residiff/diffusion.hpp"
#include "residiff/frame.hpp"
#include "residiff/metrics.hpp"
#include "residiff/nets.hpp"

namespace residiff::pipeline {

struct SamplerOptions {
  std::size_t sampling_steps = 10;
  double eta = 1.0;
  std::size_t n_samples = 100;
  std::uint64_t seed = 0;
};

struct Ensemble {
  std::size_t n_samples = 0;
  std::size_t channels = 0;
  std::size_t steps = 0;
  std::vector<double> samples;  // [N, D, S]
  Frame point;                  // non-stationary + stationary forecast

  std::span<const double> sample(std::size_t n) const {
    return {samples.data() + n * channels * steps, channels * steps};
  }
};

// `x` is a standardized lookback window [D, T]. Sample n of window w draws
// all of its noise from the stream (seed, w, n), so results do not depend
// on evaluation order. CompatibilityError when x does not fit the model.
Ensemble forecast(const nets::Model& model, const diffusion::NoiseSchedule& schedule,
                  const Frame& x, const SamplerOptions& options, std::uint64_t window_index = 0);

struct EvalOptions {
  SamplerOptions sampler;
  std::size_t stride = 1;      // evaluate every stride-th window
  std::size_t qice_bins = 10;
  std::string dump_dir;        // per-window ensembles when non-empty
};

struct EvalResult {
  metrics::MetricReport report;
  std::size_t windows = 0;
};

// Every stride-th window of the standardized test split.
EvalResult evaluate(const nets::Model& model, const diffusion::NoiseSchedule& schedule,
                    const Frame& test_split, const EvalOptions& options);

// Delimited text: a comment line describing the layout, a header naming
// each column c<channel>_s<step>, then one row per sample.
void write_ensemble(const std::string& path, const Ensemble& ensemble);

}  // namespace residiff::pipeline
