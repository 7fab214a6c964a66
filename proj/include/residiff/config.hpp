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

// Run configuration: flat `key = value` files whose keys double as CLI
// flags. Unknown keys are rejected and every value is checked by
// validate() before any data is read or any model is built.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "residiff/data.hpp"
#include "residiff/nets.hpp"
#include "residiff/training.hpp"

namespace residiff {

class Manifest;

namespace config {

struct RunConfig {
  // data
  std::string data;
  std::size_t lookback = 96;
  std::size_t horizon = 96;
  std::size_t label_length = 0;  // recorded only
  double train_ratio = 0.7;
  double val_ratio = 0.1;
  std::size_t k1 = 2;
  std::size_t k2 = 2;
  // networks
  std::string backbone = "linear";
  bool per_channel = false;
  std::size_t backbone_hidden = 256;
  std::size_t adapter_hidden = 64;
  std::size_t hidden = 128;
  std::size_t layers = 2;
  std::size_t kernel = 25;
  // diffusion
  std::size_t diffusion_steps = 1000;
  std::size_t sampling_steps = 10;
  double ddim_eta = 1.0;
  // training
  std::size_t pretrain_epochs = 0;
  std::size_t period = 3;
  std::size_t finetune_step = 100;
  std::size_t max_epochs = 200;
  std::size_t patience = 5;
  std::size_t batch_size = 32;
  double learning_rate = 1e-4;
  double max_seconds = 0.0;
  // evaluation
  std::size_t n_samples = 100;
  std::size_t eval_stride = 1;
  std::size_t qice_bins = 10;
  bool dump_ensembles = false;
  // general
  std::string out_dir = "run";
  std::uint64_t seed = 0;

  // ConfigError naming the first offending key.
  void validate() const;

  nets::ModelConfig model_config(std::size_t channels) const;
  training::TrainConfig train_config() const;
  data::WindowOptions window_options(std::size_t stride = 1) const;
  data::SplitRatios split_ratios() const;

  // Section [run] with every key.
  void save(Manifest& manifest) const;
  static RunConfig load(const Manifest& manifest);
};

struct KeyInfo {
  std::string name;
  std::string help;
  std::function<void(RunConfig&, const std::string&)> set;  // ParseError on bad text
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<KeyInfo>& keys();
const KeyInfo* find_key(const std::string& name);

// Applies `key = value` lines to `config`. '#' starts a comment.
void apply_text(RunConfig& config, const std::string& text, const std::string& source);
// ConfigError when the file is missing.
RunConfig load_file(const std::string& path);
void apply_file(RunConfig& config, const std::string& path);
std::string to_text(const RunConfig& config);

}  // namespace config
}  // namespace residiff
