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

#include "residiff/forecast.hpp"

#include <filesystem>
#include <fstream>

#include "residiff/data.hpp"
#include "residiff/errors.hpp"
#include "residiff/manifest.hpp"
#include "residiff/rng.hpp"
#include "residiff/spectral.hpp"

namespace residiff::pipeline {

using ad::Tensor;

Ensemble forecast(const nets::Model& model, const diffusion::NoiseSchedule& schedule,
                  const Frame& x, const SamplerOptions& options, std::uint64_t window_index) {
  const auto& cfg = model.config;
  if (x.steps != cfg.lookback) {
    throw CompatibilityError("forecast: window has " + std::to_string(x.steps) +
                             " steps, model lookback is " + std::to_string(cfg.lookback));
  }
  if (cfg.per_channel && x.channels != cfg.channels) {
    throw CompatibilityError("forecast: window has " + std::to_string(x.channels) +
                             " channels, model was built for " + std::to_string(cfg.channels));
  }
  if (schedule.steps() != cfg.diffusion_steps) {
    throw CompatibilityError("forecast: schedule has " + std::to_string(schedule.steps()) +
                             " steps, model expects " + std::to_string(cfg.diffusion_steps));
  }
  if (options.n_samples < 1) throw ConfigError("forecast: need at least one sample");
  ad::NoGradGuard no_grad;

  const std::size_t n = options.n_samples, d = x.channels, s = cfg.horizon, t = cfg.lookback;
  const auto parts = spectral::decompose(x, cfg.top, cfg.bottom);
  auto as_tensor = [&](const Frame& f) { return Tensor::from({1, d, t}, f.data); };
  const auto point = model.point_forecast(as_tensor(x), as_tensor(parts.non), as_tensor(parts.stat));

  Ensemble out;
  out.n_samples = n;
  out.channels = d;
  out.steps = s;
  out.point = Frame(d, s);
  std::copy(point.total.values().begin(), point.total.values().end(), out.point.data.begin());

  // Condition: the noise part of the lookback, repeated for every sample.
  std::vector<double> cond(n * d * t);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(parts.noise.data.begin(), parts.noise.data.end(), cond.begin() + i * d * t);
  }
  const Tensor c = Tensor::from({n, d, t}, std::move(cond));

  const std::size_t cells = d * s;
  std::vector<Rng> streams;
  streams.reserve(n);
  std::vector<double> r(n * cells);
  for (std::size_t i = 0; i < n; ++i) {
    streams.emplace_back(Rng::derive(options.seed, window_index, i));
    streams.back().fill_normal(std::span<double>(r.data() + i * cells, cells));
  }

  const auto ts = diffusion::ddim_timesteps(schedule.steps(), options.sampling_steps);
  std::vector<double> z(n * cells), next(n * cells);
  for (std::size_t step = 0; step < ts.size(); ++step) {
    const std::size_t k = ts[step];
    const std::size_t k_prev = step + 1 < ts.size() ? ts[step + 1] : 0;
    const std::vector<std::size_t> ks(n, k);
    const Tensor r0 = model.denoiser.forward(Tensor::from({n, d, s}, r), ks, c);
    for (std::size_t i = 0; i < n; ++i) {
      std::span<double> zi(z.data() + i * cells, cells);
      if (k_prev > 0 && options.eta > 0.0) {
        streams[i].fill_normal(zi);
      } else {
        std::fill(zi.begin(), zi.end(), 0.0);
      }
    }
    diffusion::ddim_step(r, r0.values(), k, k_prev, options.eta, schedule, z, next);
    r.swap(next);
  }

  out.samples.resize(n * cells);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < cells; ++j) out.samples[i * cells + j] = out.point.data[j] + r[i * cells + j];
  return out;
}

EvalResult evaluate(const nets::Model& model, const diffusion::NoiseSchedule& schedule,
                    const Frame& test_split, const EvalOptions& options) {
  const auto& cfg = model.config;
  if (options.stride < 1) throw ConfigError("evaluate: stride must be at least 1");
  const std::size_t count =
      data::window_count(test_split.steps, cfg.lookback, cfg.horizon, "test");
  if (!options.dump_dir.empty()) std::filesystem::create_directories(options.dump_dir);

  metrics::MetricAccumulator acc(options.sampler.n_samples, options.qice_bins);
  EvalResult result;
  for (std::size_t w = 0; w < count; w += options.stride) {
    const Frame x = test_split.slice(w, cfg.lookback);
    const Frame y = test_split.slice(w + cfg.lookback, cfg.horizon);
    const auto ens = forecast(model, schedule, x, options.sampler, w);
    acc.add(ens.samples, y.data, y.channels, y.steps);
    if (!options.dump_dir.empty()) {
      write_ensemble(options.dump_dir + "/window_" + std::to_string(w) + ".csv", ens);
    }
    ++result.windows;
  }
  result.report = acc.report();
  return result;
}

void write_ensemble(const std::string& path, const Ensemble& e) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "# format_version 1; " << e.n_samples << " samples x " << e.channels << " channels x "
      << e.steps << " steps; column c<channel>_s<step>, standardized scale\n";
  for (std::size_t c = 0; c < e.channels; ++c) {
    for (std::size_t t = 0; t < e.steps; ++t) {
      if (c || t) out << ',';
      out << 'c' << c << "_s" << t;
    }
  }
  out << '\n';
  for (std::size_t n = 0; n < e.n_samples; ++n) {
    const auto row = e.sample(n);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << format_double(row[j]);
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace residiff::pipeline
