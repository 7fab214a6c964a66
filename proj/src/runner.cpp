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

#include "residiff/runner.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>

#include "residiff/errors.hpp"

namespace residiff::pipeline {

void save_run(const std::string& path, const config::RunConfig& config,
              const data::ScaleMeta& scale, const nets::Model& model) {
  Manifest m;
  config.save(m);
  m.set_numbers("scale", "mean", scale.mean);
  m.set_numbers("scale", "std", scale.std);
  model.save(m);
  m.save(path);
}

LoadedRun load_run(const std::string& manifest_path) {
  const Manifest m = Manifest::load(manifest_path);
  auto config = config::RunConfig::load(m);
  data::ScaleMeta scale;
  scale.mean = m.get_numbers("scale", "mean");
  scale.std = m.get_numbers("scale", "std");
  if (scale.mean.size() != scale.std.size()) {
    throw CompatibilityError("manifest: scale mean and std differ in length");
  }
  scale.clamped.assign(scale.mean.size(), false);
  auto model = nets::Model::load(m);
  if (model.config.channels != scale.mean.size()) {
    throw CompatibilityError("manifest: scale covers " + std::to_string(scale.mean.size()) +
                             " channels, model " + std::to_string(model.config.channels));
  }
  return {std::move(config), std::move(scale), std::move(model)};
}

void check_compatible(const config::RunConfig& stored, const config::RunConfig& requested) {
  static const char* kShaping[] = {"lookback",        "horizon",       "k1",         "k2",
                                   "backbone",        "per_channel",   "hidden",     "layers",
                                   "kernel",          "diffusion_steps", "adapter_hidden",
                                   "backbone_hidden", "train_ratio",   "val_ratio"};
  for (const char* name : kShaping) {
    const auto* key = config::find_key(name);
    const std::string a = key->get(stored), b = key->get(requested);
    if (a != b) {
      throw CompatibilityError(std::string("'") + name + "' is " + b +
                               " in the request but the manifest was trained with " + a);
    }
  }
}

data::Splits load_splits(const LoadedRun& run) {
  const auto table = data::read_csv(run.config.data);
  if (table.values.channels != run.scale.mean.size()) {
    throw CompatibilityError("data file has " + std::to_string(table.values.channels) +
                             " channels, manifest expects " +
                             std::to_string(run.scale.mean.size()));
  }
  return data::split_and_standardize(table.values, run.config.split_ratios(), &run.scale);
}

TrainRun run_training(const config::RunConfig& config, std::ostream* log) {
  config.validate();
  if (config.data.empty()) throw ConfigError("config key 'data': no input file given");
  const auto table = data::read_csv(config.data);
  auto splits = data::split_and_standardize(table.values, config.split_ratios());
  const auto opts = config.window_options();
  const auto train_windows = data::make_windows(splits.train, opts, "train");
  const auto val_windows = data::make_windows(splits.val, opts, "val");
  // Fail on a too-short test split before spending time on training.
  data::window_count(splits.test.steps, config.lookback, config.horizon, "test");

  nets::Model model(config.model_config(table.values.channels));
  const auto schedule = diffusion::NoiseSchedule::linear(config.diffusion_steps);
  if (log) {
    *log << "train windows " << train_windows.size() << ", val windows " << val_windows.size()
         << ", parameters " << model.adapter.parameter_count() << " + "
         << model.backbone->parameter_count() << " + " << model.denoiser.parameter_count()
         << '\n';
  }
  TrainRun run;
  run.train_windows = train_windows.size();
  run.val_windows = val_windows.size();
  run.result =
      training::train(model, train_windows, val_windows, config.train_config(), schedule, log);

  std::filesystem::create_directories(config.out_dir);
  run.manifest_path = config.out_dir + "/model.manifest";
  run.history_path = config.out_dir + "/history.csv";
  save_run(run.manifest_path, config, splits.scale, model);
  std::ofstream history(run.history_path, std::ios::binary);
  if (!history) throw Error("cannot write '" + run.history_path + "'");
  training::write_history(history, run.result.history);
  return run;
}

SamplerOptions sampler_options(const config::RunConfig& c) {
  return {c.sampling_steps, c.ddim_eta, c.n_samples, c.seed};
}

EvalRun run_evaluation(const LoadedRun& run, const config::RunConfig& config) {
  config.validate();
  check_compatible(run.config, config);
  const auto splits = load_splits(run);
  const auto schedule = diffusion::NoiseSchedule::linear(run.model.config.diffusion_steps);
  EvalOptions opts;
  opts.sampler = sampler_options(config);
  opts.stride = config.eval_stride;
  opts.qice_bins = config.qice_bins;
  if (config.dump_ensembles) opts.dump_dir = config.out_dir + "/ensembles";
  EvalRun out;
  out.result = evaluate(run.model, schedule, splits.test, opts);
  std::filesystem::create_directories(config.out_dir);
  out.report_path = config.out_dir + "/report.txt";
  std::ofstream report(out.report_path, std::ios::binary);
  if (!report) throw Error("cannot write '" + out.report_path + "'");
  report << out.result.report.to_text();
  return out;
}

}  // namespace residiff::pipeline
