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

#include "residiff/config.hpp"

#include <fstream>
#include <sstream>
#include <type_traits>

#include "residiff/errors.hpp"
#include "residiff/manifest.hpp"

namespace residiff::config {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_value(const std::string& text, const std::string& key) {
  const std::string what = "config key '" + key + "'";
  if constexpr (std::is_same_v<T, std::string>) {
    return text;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw ParseError(what + ": '" + text + "' is not a boolean");
  } else if constexpr (std::is_same_v<T, double>) {
    return parse_double(text, what);
  } else {
    const auto v = parse_int(text, what);
    if (v < 0) throw ParseError(what + ": '" + text + "' must be non-negative");
    return static_cast<T>(v);
  }
}

template <typename T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_same_v<T, double>) {
    return format_double(v);
  } else {
    return std::to_string(v);
  }
}

template <typename T>
KeyInfo make_key(const char* name, T RunConfig::*member, const char* help) {
  const std::string key = name;
  return {key, help,
          [member, key](RunConfig& c, const std::string& text) {
            c.*member = parse_value<T>(trim(text), key);
          },
          [member](const RunConfig& c) { return format_value(c.*member); }};
}

std::vector<KeyInfo> build_keys() {
  return {
      make_key("data", &RunConfig::data, "input CSV (first column 'date')"),
      make_key("lookback", &RunConfig::lookback, "lookback window T"),
      make_key("horizon", &RunConfig::horizon, "forecast horizon S"),
      make_key("label_length", &RunConfig::label_length, "label length (recorded only)"),
      make_key("train_ratio", &RunConfig::train_ratio, "fraction of steps in the train split"),
      make_key("val_ratio", &RunConfig::val_ratio, "fraction of steps in the validation split"),
      make_key("k1", &RunConfig::k1, "top-amplitude bins forming the non-stationary part"),
      make_key("k2", &RunConfig::k2, "bottom-amplitude bins forming the noise part"),
      make_key("backbone", &RunConfig::backbone, "point backbone: linear or mlp"),
      make_key("per_channel", &RunConfig::per_channel, "linear backbone: one map per channel"),
      make_key("backbone_hidden", &RunConfig::backbone_hidden, "mlp backbone hidden width"),
      make_key("adapter_hidden", &RunConfig::adapter_hidden, "adapter hidden width H_a"),
      make_key("hidden", &RunConfig::hidden, "denoiser hidden width H_d (even)"),
      make_key("layers", &RunConfig::layers, "denoiser encoder layers L"),
      make_key("kernel", &RunConfig::kernel, "moving-average kernel a (odd)"),
      make_key("diffusion_steps", &RunConfig::diffusion_steps, "diffusion steps K"),
      make_key("sampling_steps", &RunConfig::sampling_steps, "DDIM sampling steps"),
      make_key("ddim_eta", &RunConfig::ddim_eta, "DDIM stochasticity (0 = deterministic)"),
      make_key("pretrain_epochs", &RunConfig::pretrain_epochs, "point-only epochs delta"),
      make_key("period", &RunConfig::period, "alternation period Delta"),
      make_key("finetune_step", &RunConfig::finetune_step, "finetune diffusion step k'"),
      make_key("max_epochs", &RunConfig::max_epochs, "maximum training epochs"),
      make_key("patience", &RunConfig::patience, "early-stopping patience in epochs"),
      make_key("batch_size", &RunConfig::batch_size, "training batch size"),
      make_key("learning_rate", &RunConfig::learning_rate, "Adam learning rate"),
      make_key("max_seconds", &RunConfig::max_seconds, "training wall-clock budget (0 = none)"),
      make_key("n_samples", &RunConfig::n_samples, "forecast samples per window"),
      make_key("eval_stride", &RunConfig::eval_stride, "evaluate every n-th test window"),
      make_key("qice_bins", &RunConfig::qice_bins, "QICE quantile bins"),
      make_key("dump_ensembles", &RunConfig::dump_ensembles, "write per-window ensembles"),
      make_key("out_dir", &RunConfig::out_dir, "output directory"),
      make_key("seed", &RunConfig::seed, "random seed"),
  };
}

void fail(const std::string& key, const std::string& why) {
  throw ConfigError("config key '" + key + "': " + why);
}

}  // namespace

const std::vector<KeyInfo>& keys() {
  static const std::vector<KeyInfo> all = build_keys();
  return all;
}

const KeyInfo* find_key(const std::string& name) {
  for (const auto& k : keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

void RunConfig::validate() const {
  if (lookback < 2) fail("lookback", "must be at least 2");
  if (horizon < 2) fail("horizon", "must be at least 2");
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) fail("train_ratio", "must lie in (0, 1)");
  if (!(val_ratio > 0.0 && train_ratio + val_ratio < 1.0)) {
    fail("val_ratio", "must be positive with train_ratio + val_ratio < 1");
  }
  if (k1 + k2 > lookback / 2 + 1) {
    fail("k2", "k1 + k2 = " + std::to_string(k1 + k2) + " exceeds the " +
                   std::to_string(lookback / 2 + 1) + " frequency bins of the lookback");
  }
  if (backbone != "linear" && backbone != "mlp") fail("backbone", "expected linear or mlp");
  if (backbone_hidden < 1) fail("backbone_hidden", "must be positive");
  if (adapter_hidden < 1) fail("adapter_hidden", "must be positive");
  if (hidden < 2 || hidden % 2 != 0) fail("hidden", "must be even and at least 2");
  if (kernel % 2 == 0) fail("kernel", "must be odd");
  if (diffusion_steps < 1) fail("diffusion_steps", "must be at least 1");
  if (sampling_steps < 1 || sampling_steps > diffusion_steps) {
    fail("sampling_steps", "must lie in [1, diffusion_steps]");
  }
  if (!(ddim_eta >= 0.0)) fail("ddim_eta", "must be non-negative");
  if (period < 1) fail("period", "must be at least 1");
  if (finetune_step < 1 || finetune_step > diffusion_steps) {
    fail("finetune_step", "must lie in [1, diffusion_steps]");
  }
  if (max_epochs < 1) fail("max_epochs", "must be at least 1");
  if (patience < 1) fail("patience", "must be at least 1");
  if (batch_size < 1) fail("batch_size", "must be at least 1");
  if (!(learning_rate > 0.0)) fail("learning_rate", "must be positive");
  if (!(max_seconds >= 0.0)) fail("max_seconds", "must be non-negative");
  if (n_samples < 1) fail("n_samples", "must be at least 1");
  if (eval_stride < 1) fail("eval_stride", "must be at least 1");
  if (qice_bins < 1) fail("qice_bins", "must be at least 1");
  if (out_dir.empty()) fail("out_dir", "must not be empty");
}

nets::ModelConfig RunConfig::model_config(std::size_t channels) const {
  nets::ModelConfig m;
  m.lookback = lookback;
  m.horizon = horizon;
  m.channels = channels;
  m.top = k1;
  m.bottom = k2;
  m.adapter_hidden = adapter_hidden;
  m.backbone = backbone;
  m.per_channel = per_channel;
  m.backbone_hidden = backbone_hidden;
  m.denoiser_hidden = hidden;
  m.layers = layers;
  m.kernel = kernel;
  m.diffusion_steps = diffusion_steps;
  m.seed = seed;
  return m;
}

training::TrainConfig RunConfig::train_config() const {
  training::TrainConfig t;
  t.pretrain_epochs = pretrain_epochs;
  t.period = period;
  t.finetune_step = finetune_step;
  t.max_epochs = max_epochs;
  t.patience = patience;
  t.batch_size = batch_size;
  t.learning_rate = learning_rate;
  t.seed = seed;
  t.max_seconds = max_seconds;
  return t;
}

data::WindowOptions RunConfig::window_options(std::size_t stride) const {
  return {lookback, horizon, k1, k2, stride};
}

data::SplitRatios RunConfig::split_ratios() const { return {train_ratio, val_ratio}; }

void RunConfig::save(Manifest& manifest) const {
  for (const auto& k : keys()) manifest.set("run", k.name, k.get(*this));
}

RunConfig RunConfig::load(const Manifest& manifest) {
  RunConfig c;
  const auto* section = manifest.find("run");
  if (!section) throw CompatibilityError("manifest: missing section [run]");
  for (const auto& [key, value] : section->entries) {
    const KeyInfo* k = find_key(key);
    if (!k) throw CompatibilityError("manifest: unknown run key '" + key + "'");
    k->set(c, value);
  }
  return c;
}

void apply_text(RunConfig& config, const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (t.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(where + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    if (key == "format_version") continue;
    const KeyInfo* k = find_key(key);
    if (!k) throw ConfigError(where + ": unknown key '" + key + "'");
    k->set(config, t.substr(eq + 1));
  }
}

RunConfig load_file(const std::string& path) {
  RunConfig c;
  apply_file(c, path);
  return c;
}

void apply_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config file not found: '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_text(config, buf.str(), path);
}

std::string to_text(const RunConfig& config) {
  std::string out = "format_version = 1\n";
  for (const auto& k : keys()) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

}  // namespace residiff::config
