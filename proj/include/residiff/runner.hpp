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

// End-to-end runs: data file -> trained manifest, manifest -> report.

#include <iosfwd>
#include <string>

#include "residiff/config.hpp"
#include "residiff/data.hpp"
#include "residiff/forecast.hpp"
#include "residiff/manifest.hpp"
#include "residiff/nets.hpp"
#include "residiff/training.hpp"

namespace residiff::pipeline {

struct TrainRun {
  training::TrainResult result;
  std::string manifest_path;  // <out_dir>/model.manifest
  std::string history_path;   // <out_dir>/history.csv
  std::size_t train_windows = 0;
  std::size_t val_windows = 0;
};

// Validates, reads config.data, splits, trains, writes manifest and history.
TrainRun run_training(const config::RunConfig& config, std::ostream* log = nullptr);

struct LoadedRun {
  config::RunConfig config;
  data::ScaleMeta scale;
  nets::Model model;
};

// Manifest written by run_training plus scale metadata.
void save_run(const std::string& path, const config::RunConfig& config,
              const data::ScaleMeta& scale, const nets::Model& model);
LoadedRun load_run(const std::string& manifest_path);

// Model-shaping keys of `requested` must equal those of the manifest;
// CompatibilityError otherwise.
void check_compatible(const config::RunConfig& manifest_config,
                      const config::RunConfig& requested);

// Standardized splits of the run's data file using the stored statistics.
data::Splits load_splits(const LoadedRun& run);

SamplerOptions sampler_options(const config::RunConfig& config);

struct EvalRun {
  EvalResult result;
  std::string report_path;  // <out_dir>/report.txt
};

// Evaluates on the test split. Sampling keys (n_samples, ddim_eta,
// sampling_steps, eval_stride, qice_bins, dump_ensembles, seed, out_dir)
// come from `config`; everything else must match the manifest.
EvalRun run_evaluation(const LoadedRun& run, const config::RunConfig& config);

}  // namespace residiff::pipeline
