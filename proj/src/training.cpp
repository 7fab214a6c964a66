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

#include "residiff/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "residiff/adam.hpp"
#include "residiff/errors.hpp"
#include "residiff/manifest.hpp"

namespace residiff::training {

using ad::Tensor;

void TrainConfig::validate(std::size_t diffusion_steps) const {
  if (period < 1) throw ConfigError("period (Delta) must be at least 1");
  if (finetune_step < 1 || finetune_step > diffusion_steps) {
    throw ConfigError("finetune step k' = " + std::to_string(finetune_step) + " outside [1, " +
                      std::to_string(diffusion_steps) + "]");
  }
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(max_seconds >= 0.0)) throw ConfigError("max_seconds must be non-negative");
}

ScheduleFlags schedule(std::size_t epoch, std::size_t pretrain_epochs, std::size_t period) {
  if (period < 1) throw ConfigError("period (Delta) must be at least 1");
  if (epoch < pretrain_epochs) return {};
  const bool on_period = epoch % period == 0;
  return {!on_period, on_period};
}

PointLosses loss_point_and_non(const Tensor& y, const Tensor& y_hat, const Tensor& y_non,
                               const Tensor& y_non_hat) {
  return {ad::mean_abs_error(y_non, y_non_hat), ad::mean_abs_error(y, y_hat)};
}

AlterLosses loss_alter(const Tensor& residual, std::size_t k, std::size_t k_prime,
                       const Tensor& condition, const nets::DemaDenoiser& denoiser,
                       ScheduleFlags flags, std::span<const double> eps,
                       const diffusion::NoiseSchedule& schedule) {
  const std::size_t k_max = schedule.steps();
  if (k < 1 || k > k_max || k_prime < 1 || k_prime > k_max) {
    throw RangeError("loss_alter: steps k = " + std::to_string(k) + ", k' = " +
                     std::to_string(k_prime) + " must lie in [1, " + std::to_string(k_max) + "]");
  }
  if (eps.size() != residual.size()) {
    throw DimensionError("loss_alter: noise has " + std::to_string(eps.size()) +
                         " values, residual " + std::to_string(residual.size()));
  }
  const std::size_t batch = residual.dim(0);
  AlterLosses out;
  auto noised = [&](std::size_t step) {
    std::vector<double> v(residual.size());
    diffusion::q_sample(residual.values(), step, eps, schedule, v);
    return Tensor::from(residual.shape(), std::move(v));
  };
  if (flags.lambda) {
    const Tensor target = ad::detach(residual);
    const std::vector<std::size_t> steps(batch, k);
    out.l_diffusion = ad::mean_squared_error(target, denoiser.forward(noised(k), steps, condition));
  }
  if (flags.eta) {
    Tensor estimate;
    {
      ad::NoGradGuard guard;
      const std::vector<std::size_t> steps(batch, k_prime);
      estimate = ad::detach(denoiser.forward(noised(k_prime), steps, condition));
    }
    out.l_finetune = ad::mean_squared_error(residual, estimate);
  }
  return out;
}

Tensor stack(std::span<const Frame* const> frames, bool requires_grad) {
  if (frames.empty()) throw DimensionError("stack: no frames");
  const std::size_t d = frames[0]->channels, len = frames[0]->steps;
  std::vector<double> values;
  values.reserve(frames.size() * d * len);
  for (const Frame* f : frames) {
    if (f->channels != d || f->steps != len) throw DimensionError("stack: frames differ in shape");
    values.insert(values.end(), f->data.begin(), f->data.end());
  }
  return Tensor::from({frames.size(), d, len}, std::move(values), requires_grad);
}

namespace {

struct Batch {
  Tensor x, x_non, x_stat, x_noise, y, y_non;
};

Batch gather(const std::vector<data::Window>& windows, std::span<const std::size_t> idx) {
  std::vector<const Frame*> f(idx.size());
  auto pick = [&](auto member) {
    for (std::size_t i = 0; i < idx.size(); ++i) f[i] = &(windows[idx[i]].*member);
    return stack(f);
  };
  return {pick(&data::Window::x),       pick(&data::Window::x_non), pick(&data::Window::x_stat),
          pick(&data::Window::x_noise), pick(&data::Window::y),     pick(&data::Window::y_non)};
}

}  // namespace

double validation_point_loss(const nets::Model& model, const std::vector<data::Window>& windows,
                             std::size_t batch_size) {
  if (windows.empty()) throw ConfigError("validation split has no windows");
  ad::NoGradGuard guard;
  double sum = 0.0;
  std::size_t count = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < windows.size(); start += batch_size) {
    const std::size_t end = std::min(windows.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Batch b = gather(windows, idx);
    const auto p = model.point_forecast(b.x, b.x_non, b.x_stat);
    sum += ad::mean_abs_error(b.y, p.total).item() * static_cast<double>(b.y.size());
    count += b.y.size();
  }
  return sum / static_cast<double>(count);
}

TrainResult train(nets::Model& model, const std::vector<data::Window>& train_windows,
                  const std::vector<data::Window>& val_windows, const TrainConfig& config,
                  const diffusion::NoiseSchedule& schedule, std::ostream* log,
                  const BatchHook& hook) {
  config.validate(schedule.steps());
  if (train_windows.empty()) throw ConfigError("training split has no windows");
  if (val_windows.empty()) throw ConfigError("validation split has no windows");

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  ad::Adam optimizer(model.all_parameters(), {config.learning_rate, 0.9, 0.999, 1e-8});
  TrainResult result;
  std::vector<double> best_adapter = model.adapter.flat_values();
  std::vector<double> best_backbone = model.backbone->flat_values();
  result.best_val_point = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train_windows.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const ScheduleFlags flags = training::schedule(epoch, config.pretrain_epochs, config.period);
    Rng shuffle_rng(Rng::derive(config.seed, 0x5348, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

    LossBreakdown sums;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const Batch b = gather(train_windows, idx);

      const auto p = model.point_forecast(b.x, b.x_non, b.x_stat);
      const auto point = loss_point_and_non(b.y, p.total, b.y_non, p.non);
      Tensor total = point.l_non + point.l_point;
      LossBreakdown lb;
      lb.flags = flags;
      lb.l_non = point.l_non.item();
      lb.l_point = point.l_point.item();
      if (flags.lambda || flags.eta) {
        Rng rng(Rng::derive(config.seed, epoch + 1, batches));
        const std::size_t k = rng.uniform_int(1, schedule.steps());
        std::vector<double> eps(b.y.size());
        rng.fill_normal(eps);
        const Tensor residual = b.y - p.total;
        const auto alter = loss_alter(residual, k, config.finetune_step, b.x_noise,
                                      model.denoiser, flags, eps, schedule);
        if (flags.lambda) {
          lb.l_diffusion = alter.l_diffusion.item();
          total = total + alter.l_diffusion;
        }
        if (flags.eta) {
          lb.l_finetune = alter.l_finetune.item();
          total = total + alter.l_finetune;
        }
      }
      lb.total = total.item();
      if (!std::isfinite(lb.total)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batches));
      }
      optimizer.zero_grad();
      ad::backward(total);
      optimizer.step();

      sums.l_non += lb.l_non;
      sums.l_point += lb.l_point;
      sums.l_diffusion += lb.l_diffusion;
      sums.l_finetune += lb.l_finetune;
      if (hook) hook(epoch, batches, lb);
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const double nb = static_cast<double>(batches);
    rec.train.flags = flags;
    rec.train.l_non = sums.l_non / nb;
    rec.train.l_point = sums.l_point / nb;
    rec.train.l_diffusion = sums.l_diffusion / nb;
    rec.train.l_finetune = sums.l_finetune / nb;
    rec.train.total = rec.train.l_non + rec.train.l_point +
                      (flags.lambda ? rec.train.l_diffusion : 0.0) +
                      (flags.eta ? rec.train.l_finetune : 0.0);
    rec.val_point = validation_point_loss(model, val_windows);
    rec.seconds = elapsed();
    result.history.push_back(rec);
    if (log) {
      *log << "epoch " << epoch << " lambda " << flags.lambda << " eta " << flags.eta
           << " total " << format_double(rec.train.total) << " val_point "
           << format_double(rec.val_point) << " (" << rec.seconds << " s)\n";
    }

    if (rec.val_point < result.best_val_point) {
      result.best_val_point = rec.val_point;
      result.best_epoch = epoch;
      best_adapter = model.adapter.flat_values();
      best_backbone = model.backbone->flat_values();
      since_best = 0;
    } else if (++since_best >= config.patience) {
      result.stopped_early = true;
      break;
    }
    if (config.max_seconds > 0.0 && rec.seconds >= config.max_seconds) {
      result.hit_time_limit = true;
      break;
    }
  }
  model.adapter.set_flat_values(best_adapter);
  model.backbone->set_flat_values(best_backbone);
  return result;
}

void write_history(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,lambda,eta,l_non,l_point,l_diffusion,l_finetune,total,val_point,seconds\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << r.train.flags.lambda << ',' << r.train.flags.eta << ','
        << format_double(r.train.l_non) << ',' << format_double(r.train.l_point) << ','
        << format_double(r.train.l_diffusion) << ',' << format_double(r.train.l_finetune) << ','
        << format_double(r.train.total) << ',' << format_double(r.val_point) << ','
        << r.seconds << '\n';
  }
}

}  // namespace residiff::training
