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

// Component networks: the non-stationary adapter, the point-forecast
// backbones, and the residual denoiser.
//
// Inputs are [B, D, time] tensors. Every map acts along the time axis and is
// applied to each channel independently, so the "T x D" windows of the math
// are rows of length T here.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "residiff/manifest.hpp"
#include "residiff/ops.hpp"
#include "residiff/rng.hpp"

namespace residiff::nets {

struct NamedParam {
  std::string name;
  ad::Tensor tensor;
};

class Module {
 public:
  virtual ~Module() = default;
  virtual std::vector<NamedParam> named_parameters() const = 0;

  std::vector<ad::Tensor> parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();
  // Writes / reads every parameter under "<prefix>.<name>".
  void save(Manifest& manifest, const std::string& prefix) const;
  void load(const Manifest& manifest, const std::string& prefix);
  // Flat copy of all parameter values, in named_parameters() order.
  std::vector<double> flat_values() const;
  void set_flat_values(std::span<const double> values);
};

// U(-1/sqrt(fan_in), 1/sqrt(fan_in)), the usual dense-layer default.
ad::Tensor uniform_param(ad::Shape shape, std::size_t fan_in, Rng& rng);

struct AdapterConfig {
  std::size_t lookback = 96;
  std::size_t horizon = 96;
  std::size_t hidden = 64;
};

// W3 ReLU(W2 [ReLU(W1 x_non); x]) per channel, no biases.
class NsAdapter : public Module {
 public:
  NsAdapter(AdapterConfig config, std::uint64_t seed);
  ad::Tensor forward(const ad::Tensor& x_non, const ad::Tensor& x) const;
  std::vector<NamedParam> named_parameters() const override;
  const AdapterConfig& config() const { return config_; }

  ad::Tensor w1, w2, w3;

 private:
  AdapterConfig config_;
};

struct BackboneConfig {
  std::string variant = "linear";  // "linear" or "mlp"
  std::size_t lookback = 96;
  std::size_t horizon = 96;
  std::size_t channels = 1;
  bool per_channel = false;  // linear only: one map per channel
  std::size_t hidden = 256;  // mlp only
};

class Backbone : public Module {
 public:
  virtual ad::Tensor forward(const ad::Tensor& x_stat) const = 0;
  virtual const BackboneConfig& config() const = 0;
};

class LinearBackbone : public Backbone {
 public:
  LinearBackbone(BackboneConfig config, std::uint64_t seed);
  ad::Tensor forward(const ad::Tensor& x_stat) const override;
  std::vector<NamedParam> named_parameters() const override;
  const BackboneConfig& config() const override { return config_; }

  // [T, S] and [S] when shared; [D, T, S] and [D, S] per channel.
  ad::Tensor weight, bias;

 private:
  BackboneConfig config_;
};

class MlpBackbone : public Backbone {
 public:
  MlpBackbone(BackboneConfig config, std::uint64_t seed);
  ad::Tensor forward(const ad::Tensor& x_stat) const override;
  std::vector<NamedParam> named_parameters() const override;
  const BackboneConfig& config() const override { return config_; }

  ad::Tensor w1, b1, w2, b2;

 private:
  BackboneConfig config_;
};

// ConfigError for unknown variants.
std::unique_ptr<Backbone> make_backbone(const BackboneConfig& config, std::uint64_t seed);

struct DenoiserConfig {
  std::size_t lookback = 96;
  std::size_t horizon = 96;
  std::size_t hidden = 128;  // H_d, must be even (step embedding)
  std::size_t layers = 2;
  std::size_t kernel = 25;  // moving-average window, odd
};

struct Modulation {
  ad::Tensor w, b;
};

struct EncoderLayer {
  Modulation season;  // H_d -> 3 H_d: (gamma, beta, gate)
  Modulation trend;
  ad::Tensor merge_w, merge_b;
};

// Residual denoiser returning a direct estimate of the clean residual.
// Modulation maps and the output map start at zero, so a fresh denoiser is
// the zero function and each encoder layer starts as the identity.
class DemaDenoiser : public Module {
 public:
  DemaDenoiser(DenoiserConfig config, std::uint64_t seed);

  struct Embedding {
    ad::Tensor h;  // [B, D, H_d]
    ad::Tensor e;  // [B, D, H_d]
  };
  // rk [B, D, S], one diffusion step per batch row, c [B, D, T].
  Embedding embed(const ad::Tensor& rk, std::span<const std::size_t> steps,
                  const ad::Tensor& c) const;
  ad::Tensor encoder_layer(std::size_t index, const ad::Tensor& h, const ad::Tensor& e) const;
  ad::Tensor forward(const ad::Tensor& rk, std::span<const std::size_t> steps,
                     const ad::Tensor& c) const;

  std::vector<NamedParam> named_parameters() const override;
  const DenoiserConfig& config() const { return config_; }

  ad::Tensor in_w, in_b;
  ad::Tensor step_w, step_b;
  ad::Tensor cond_w, cond_b;
  std::vector<EncoderLayer> layers;
  Modulation decoder;  // H_d -> 2 H_d: (gamma, beta)
  ad::Tensor out_w, out_b;

 private:
  DenoiserConfig config_;
};

// (gamma + 1) * LayerNorm(x) + beta.
ad::Tensor modulate(const ad::Tensor& x, const ad::Tensor& gamma, const ad::Tensor& beta);

struct ModelConfig {
  std::size_t lookback = 96;
  std::size_t horizon = 96;
  std::size_t channels = 1;
  std::size_t top = 2;     // K1
  std::size_t bottom = 2;  // K2
  std::size_t adapter_hidden = 64;
  std::string backbone = "linear";
  bool per_channel = false;
  std::size_t backbone_hidden = 256;
  std::size_t denoiser_hidden = 128;
  std::size_t layers = 2;
  std::size_t kernel = 25;
  std::size_t diffusion_steps = 1000;  // K
  std::uint64_t seed = 0;
};

// The three networks plus the configuration that shaped them.
struct Model {
  explicit Model(const ModelConfig& config);

  ModelConfig config;
  NsAdapter adapter;
  std::unique_ptr<Backbone> backbone;
  DemaDenoiser denoiser;

  // Y_non_hat + Y_stat_hat for [B, D, T] inputs.
  struct Point {
    ad::Tensor non;
    ad::Tensor stat;
    ad::Tensor total;
  };
  Point point_forecast(const ad::Tensor& x, const ad::Tensor& x_non,
                       const ad::Tensor& x_stat) const;

  std::vector<ad::Tensor> point_parameters() const;
  std::vector<ad::Tensor> all_parameters() const;

  // Section [model] plus parameter blobs under adapter./backbone./denoiser.
  void save(Manifest& manifest) const;
  static Model load(const Manifest& manifest);
};

}  // namespace residiff::nets
