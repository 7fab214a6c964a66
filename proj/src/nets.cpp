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

#include "residiff/nets.hpp"

#include <cmath>

#include "residiff/errors.hpp"

namespace residiff::nets {

using ad::Tensor;

std::vector<Tensor> Module::parameters() const {
  std::vector<Tensor> out;
  for (auto& p : named_parameters()) out.push_back(p.tensor);
  return out;
}

std::size_t Module::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : named_parameters()) n += p.tensor.size();
  return n;
}

void Module::zero_grad() {
  for (auto& p : named_parameters()) p.tensor.zero_grad();
}

void Module::save(Manifest& manifest, const std::string& prefix) const {
  for (const auto& p : named_parameters()) manifest.put_tensor(prefix + "." + p.name, p.tensor);
}

void Module::load(const Manifest& manifest, const std::string& prefix) {
  for (auto& p : named_parameters()) manifest.load_tensor(prefix + "." + p.name, p.tensor);
}

std::vector<double> Module::flat_values() const {
  std::vector<double> out;
  for (const auto& p : named_parameters()) {
    out.insert(out.end(), p.tensor.values().begin(), p.tensor.values().end());
  }
  return out;
}

void Module::set_flat_values(std::span<const double> values) {
  std::size_t offset = 0;
  for (auto& p : named_parameters()) {
    auto dst = p.tensor.mutable_values();
    if (offset + dst.size() > values.size()) {
      throw DimensionError("set_flat_values: too few values for the parameter list");
    }
    std::copy(values.begin() + static_cast<std::ptrdiff_t>(offset),
              values.begin() + static_cast<std::ptrdiff_t>(offset + dst.size()), dst.begin());
    offset += dst.size();
  }
  if (offset != values.size()) {
    throw DimensionError("set_flat_values: " + std::to_string(values.size()) +
                         " values for " + std::to_string(offset) + " parameters");
  }
}

Tensor uniform_param(ad::Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (double& v : t.mutable_values()) v = rng.uniform(-bound, bound);
  return t;
}

namespace {

void require_shape(const Tensor& x, std::size_t last, const char* who, const char* what) {
  if (x.rank() != 3 || x.dim(-1) != last) {
    throw DimensionError(std::string(who) + ": " + what + " must be [B, D, " +
                         std::to_string(last) + "], got " + ad::shape_string(x.shape()));
  }
}

Tensor zero_param(ad::Shape shape) { return Tensor::zeros(std::move(shape), true); }

}  // namespace

// ---------------------------------------------------------------------------

NsAdapter::NsAdapter(AdapterConfig config, std::uint64_t seed) : config_(config) {
  if (config.lookback < 1 || config.horizon < 1 || config.hidden < 1) {
    throw ConfigError("ns adapter: lookback, horizon and hidden must be positive");
  }
  Rng rng(seed);
  const std::size_t t = config.lookback, h = config.hidden, s = config.horizon;
  w1 = uniform_param({t, h}, t, rng);
  w2 = uniform_param({h + t, h}, h + t, rng);
  w3 = uniform_param({h, s}, h, rng);
}

Tensor NsAdapter::forward(const Tensor& x_non, const Tensor& x) const {
  require_shape(x_non, config_.lookback, "ns adapter", "x_non");
  require_shape(x, config_.lookback, "ns adapter", "x");
  if (x_non.shape() != x.shape()) {
    throw DimensionError("ns adapter: x_non " + ad::shape_string(x_non.shape()) +
                         " and x " + ad::shape_string(x.shape()) + " differ");
  }
  const Tensor a = ad::relu(ad::linear(x_non, w1));
  const Tensor b = ad::relu(ad::linear(ad::concat_last(a, x), w2));
  return ad::linear(b, w3);
}

std::vector<NamedParam> NsAdapter::named_parameters() const {
  return {{"w1", w1}, {"w2", w2}, {"w3", w3}};
}

// ---------------------------------------------------------------------------

LinearBackbone::LinearBackbone(BackboneConfig config, std::uint64_t seed)
    : config_(std::move(config)) {
  if (config_.lookback < 1 || config_.horizon < 1 || config_.channels < 1) {
    throw ConfigError("linear backbone: lookback, horizon and channels must be positive");
  }
  Rng rng(seed);
  const std::size_t t = config_.lookback, s = config_.horizon, d = config_.channels;
  if (config_.per_channel) {
    weight = uniform_param({d, t, s}, t, rng);
    bias = uniform_param({d, s}, t, rng);
  } else {
    weight = uniform_param({t, s}, t, rng);
    bias = uniform_param({s}, t, rng);
  }
}

Tensor LinearBackbone::forward(const Tensor& x_stat) const {
  require_shape(x_stat, config_.lookback, "linear backbone", "input");
  if (config_.per_channel) {
    if (x_stat.dim(1) != config_.channels) {
      throw DimensionError("linear backbone: built for " + std::to_string(config_.channels) +
                           " channels, input " + ad::shape_string(x_stat.shape()));
    }
    return ad::linear_per_channel(x_stat, weight, bias);
  }
  return ad::linear(x_stat, weight, bias);
}

std::vector<NamedParam> LinearBackbone::named_parameters() const {
  return {{"weight", weight}, {"bias", bias}};
}

MlpBackbone::MlpBackbone(BackboneConfig config, std::uint64_t seed) : config_(std::move(config)) {
  if (config_.lookback < 1 || config_.horizon < 1 || config_.hidden < 1) {
    throw ConfigError("mlp backbone: lookback, horizon and hidden must be positive");
  }
  Rng rng(seed);
  const std::size_t t = config_.lookback, h = config_.hidden, s = config_.horizon;
  w1 = uniform_param({t, h}, t, rng);
  b1 = uniform_param({h}, t, rng);
  w2 = uniform_param({h, s}, h, rng);
  b2 = uniform_param({s}, h, rng);
}

Tensor MlpBackbone::forward(const Tensor& x_stat) const {
  require_shape(x_stat, config_.lookback, "mlp backbone", "input");
  return ad::linear(ad::relu(ad::linear(x_stat, w1, b1)), w2, b2);
}

std::vector<NamedParam> MlpBackbone::named_parameters() const {
  return {{"w1", w1}, {"b1", b1}, {"w2", w2}, {"b2", b2}};
}

std::unique_ptr<Backbone> make_backbone(const BackboneConfig& config, std::uint64_t seed) {
  if (config.variant == "linear") return std::make_unique<LinearBackbone>(config, seed);
  if (config.variant == "mlp") return std::make_unique<MlpBackbone>(config, seed);
  throw ConfigError("unknown backbone variant '" + config.variant + "' (expected linear or mlp)");
}

// ---------------------------------------------------------------------------

Tensor modulate(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  return ad::add_scalar(gamma, 1.0) * ad::layer_norm(x) + beta;
}

DemaDenoiser::DemaDenoiser(DenoiserConfig config, std::uint64_t seed) : config_(config) {
  const std::size_t h = config.hidden;
  if (h < 2 || h % 2 != 0) {
    throw ConfigError("denoiser: hidden size must be even and at least 2, got " +
                      std::to_string(h));
  }
  if (config.kernel % 2 == 0) {
    throw ConfigError("denoiser: moving-average kernel must be odd, got " +
                      std::to_string(config.kernel));
  }
  if (config.lookback < 1 || config.horizon < 1) {
    throw ConfigError("denoiser: lookback and horizon must be positive");
  }
  Rng rng(seed);
  in_w = uniform_param({config.horizon, h}, config.horizon, rng);
  in_b = uniform_param({h}, config.horizon, rng);
  step_w = uniform_param({h, h}, h, rng);
  step_b = uniform_param({h}, h, rng);
  cond_w = uniform_param({config.lookback, h}, config.lookback, rng);
  cond_b = uniform_param({h}, config.lookback, rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    EncoderLayer layer;
    layer.season = {zero_param({h, 3 * h}), zero_param({3 * h})};
    layer.trend = {zero_param({h, 3 * h}), zero_param({3 * h})};
    layer.merge_w = uniform_param({h, h}, h, rng);
    layer.merge_b = uniform_param({h}, h, rng);
    layers.push_back(std::move(layer));
  }
  decoder = {zero_param({h, 2 * h}), zero_param({2 * h})};
  out_w = zero_param({h, config.horizon});
  out_b = zero_param({config.horizon});
}

DemaDenoiser::Embedding DemaDenoiser::embed(const Tensor& rk, std::span<const std::size_t> steps,
                                            const Tensor& c) const {
  require_shape(rk, config_.horizon, "denoiser", "noisy residual");
  require_shape(c, config_.lookback, "denoiser", "condition");
  const std::size_t batch = rk.dim(0), channels = rk.dim(1);
  if (c.dim(0) != batch || c.dim(1) != channels) {
    throw DimensionError("denoiser: condition " + ad::shape_string(c.shape()) +
                         " does not match residual " + ad::shape_string(rk.shape()));
  }
  if (steps.size() != batch) {
    throw DimensionError("denoiser: " + std::to_string(steps.size()) + " steps for batch of " +
                         std::to_string(batch));
  }
  const std::size_t h = config_.hidden;
  Embedding out;
  out.h = ad::linear(rk, in_w, in_b);
  Tensor pe = ad::linear(ad::sinusoidal_embedding(steps, h), step_w, step_b);  // [B, H]
  pe = ad::repeat_axis(ad::reshape(pe, {batch, 1, h}), 1, channels);
  out.e = pe + ad::linear(c, cond_w, cond_b);
  return out;
}

Tensor DemaDenoiser::encoder_layer(std::size_t index, const Tensor& h, const Tensor& e) const {
  const EncoderLayer& layer = layers.at(index);
  const std::size_t n = config_.hidden;
  const Tensor trend = ad::moving_average(h, config_.kernel);
  const Tensor season = h - trend;
  const Tensor se = ad::silu(e);
  const Tensor ms = ad::linear(se, layer.season.w, layer.season.b);
  const Tensor mt = ad::linear(se, layer.trend.w, layer.trend.b);
  const Tensor bar_s =
      modulate(season, ad::slice_last(ms, 0, n), ad::slice_last(ms, n, n));
  const Tensor bar_t = modulate(trend, ad::slice_last(mt, 0, n), ad::slice_last(mt, n, n));
  const Tensor gate = ad::slice_last(ms, 2 * n, n) + ad::slice_last(mt, 2 * n, n);
  return h + gate * ad::linear(bar_s + bar_t, layer.merge_w, layer.merge_b);
}

Tensor DemaDenoiser::forward(const Tensor& rk, std::span<const std::size_t> steps,
                             const Tensor& c) const {
  const auto emb = embed(rk, steps, c);
  Tensor h = emb.h;
  for (std::size_t l = 0; l < layers.size(); ++l) h = encoder_layer(l, h, emb.e);
  const std::size_t n = config_.hidden;
  const Tensor md = ad::linear(ad::silu(emb.e), decoder.w, decoder.b);
  const Tensor hn = modulate(h, ad::slice_last(md, 0, n), ad::slice_last(md, n, n));
  return ad::linear(hn, out_w, out_b);
}

std::vector<NamedParam> DemaDenoiser::named_parameters() const {
  std::vector<NamedParam> out = {{"in.w", in_w},     {"in.b", in_b},     {"step.w", step_w},
                                 {"step.b", step_b}, {"cond.w", cond_w}, {"cond.b", cond_b}};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    out.push_back({p + "season.w", layers[l].season.w});
    out.push_back({p + "season.b", layers[l].season.b});
    out.push_back({p + "trend.w", layers[l].trend.w});
    out.push_back({p + "trend.b", layers[l].trend.b});
    out.push_back({p + "merge.w", layers[l].merge_w});
    out.push_back({p + "merge.b", layers[l].merge_b});
  }
  out.push_back({"decoder.w", decoder.w});
  out.push_back({"decoder.b", decoder.b});
  out.push_back({"out.w", out_w});
  out.push_back({"out.b", out_b});
  return out;
}

}  // namespace residiff::nets

namespace residiff::nets {

namespace {

BackboneConfig backbone_config(const ModelConfig& c) {
  BackboneConfig b;
  b.variant = c.backbone;
  b.lookback = c.lookback;
  b.horizon = c.horizon;
  b.channels = c.channels;
  b.per_channel = c.per_channel;
  b.hidden = c.backbone_hidden;
  return b;
}

}  // namespace

Model::Model(const ModelConfig& c)
    : config(c),
      adapter({c.lookback, c.horizon, c.adapter_hidden}, Rng::derive(c.seed, 11)),
      backbone(make_backbone(backbone_config(c), Rng::derive(c.seed, 12))),
      denoiser({c.lookback, c.horizon, c.denoiser_hidden, c.layers, c.kernel},
               Rng::derive(c.seed, 13)) {}

Model::Point Model::point_forecast(const Tensor& x, const Tensor& x_non,
                                   const Tensor& x_stat) const {
  Point p;
  p.non = adapter.forward(x_non, x);
  p.stat = backbone->forward(x_stat);
  p.total = p.non + p.stat;
  return p;
}

std::vector<Tensor> Model::point_parameters() const {
  auto out = adapter.parameters();
  for (auto& t : backbone->parameters()) out.push_back(t);
  return out;
}

std::vector<Tensor> Model::all_parameters() const {
  auto out = point_parameters();
  for (auto& t : denoiser.parameters()) out.push_back(t);
  return out;
}

void Model::save(Manifest& m) const {
  const std::string s = "model";
  m.set_int(s, "lookback", static_cast<std::int64_t>(config.lookback));
  m.set_int(s, "horizon", static_cast<std::int64_t>(config.horizon));
  m.set_int(s, "channels", static_cast<std::int64_t>(config.channels));
  m.set_int(s, "k1", static_cast<std::int64_t>(config.top));
  m.set_int(s, "k2", static_cast<std::int64_t>(config.bottom));
  m.set_int(s, "adapter_hidden", static_cast<std::int64_t>(config.adapter_hidden));
  m.set(s, "backbone", config.backbone);
  m.set(s, "per_channel", config.per_channel ? "true" : "false");
  m.set_int(s, "backbone_hidden", static_cast<std::int64_t>(config.backbone_hidden));
  m.set_int(s, "hidden", static_cast<std::int64_t>(config.denoiser_hidden));
  m.set_int(s, "layers", static_cast<std::int64_t>(config.layers));
  m.set_int(s, "kernel", static_cast<std::int64_t>(config.kernel));
  m.set_int(s, "diffusion_steps", static_cast<std::int64_t>(config.diffusion_steps));
  m.set(s, "seed", std::to_string(config.seed));
  adapter.save(m, "adapter");
  backbone->save(m, "backbone");
  denoiser.save(m, "denoiser");
}

Model Model::load(const Manifest& m) {
  const std::string s = "model";
  auto count = [&](const char* key) {
    const auto v = m.get_int(s, key);
    if (v < 0) throw CompatibilityError(std::string("manifest: model.") + key + " is negative");
    return static_cast<std::size_t>(v);
  };
  ModelConfig c;
  c.lookback = count("lookback");
  c.horizon = count("horizon");
  c.channels = count("channels");
  c.top = count("k1");
  c.bottom = count("k2");
  c.adapter_hidden = count("adapter_hidden");
  c.backbone = m.get(s, "backbone");
  c.per_channel = m.get(s, "per_channel") == "true";
  c.backbone_hidden = count("backbone_hidden");
  c.denoiser_hidden = count("hidden");
  c.layers = count("layers");
  c.kernel = count("kernel");
  c.diffusion_steps = count("diffusion_steps");
  c.seed = std::stoull(m.get(s, "seed"));
  Model model(c);
  model.adapter.load(m, "adapter");
  model.backbone->load(m, "backbone");
  model.denoiser.load(m, "denoiser");
  return model;
}

}  // namespace residiff::nets
