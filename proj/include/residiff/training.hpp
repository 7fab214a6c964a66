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

// Losses, the alternating lambda/eta schedule, and the training loop with
// early stopping.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "residiff/data.hpp"
#include "residiff/diffusion.hpp"
#include "residiff/nets.hpp"

namespace residiff::training {

struct TrainConfig {
  std::size_t pretrain_epochs = 0;  // delta
  std::size_t period = 3;           // Delta
  std::size_t finetune_step = 100;  // k'
  std::size_t max_epochs = 200;
  std::size_t patience = 5;
  std::size_t batch_size = 32;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;
  double max_seconds = 0.0;  // wall-clock budget, 0 = none

  // ConfigError on delta/Delta/k' violations.
  void validate(std::size_t diffusion_steps) const;
};

struct ScheduleFlags {
  bool lambda = false;  // train the denoiser
  bool eta = false;     // finetune the point models
};

ScheduleFlags schedule(std::size_t epoch, std::size_t pretrain_epochs, std::size_t period);

struct PointLosses {
  ad::Tensor l_non;
  ad::Tensor l_point;
};

// L1 on the non-stationary part and on the full point forecast.
PointLosses loss_point_and_non(const ad::Tensor& y, const ad::Tensor& y_hat,
                               const ad::Tensor& y_non, const ad::Tensor& y_non_hat);

struct AlterLosses {
  ad::Tensor l_diffusion;  // undefined unless lambda
  ad::Tensor l_finetune;   // undefined unless eta
};

// Both noisings use the same `eps`. The diffusion term sees only a detached
// residual; the finetune term sees only a detached denoiser output.
AlterLosses loss_alter(const ad::Tensor& residual, std::size_t k, std::size_t k_prime,
                       const ad::Tensor& condition, const nets::DemaDenoiser& denoiser,
                       ScheduleFlags flags, std::span<const double> eps,
                       const diffusion::NoiseSchedule& schedule);

struct LossBreakdown {
  double l_non = 0.0;
  double l_point = 0.0;
  double l_diffusion = 0.0;
  double l_finetune = 0.0;
  double total = 0.0;
  ScheduleFlags flags;
};

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown train;  // batch means
  double val_point = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_point = 0.0;
  bool stopped_early = false;
  bool hit_time_limit = false;
};

// [B, D, len] tensor from frames of equal shape (batch rows in order).
ad::Tensor stack(std::span<const Frame* const> frames, bool requires_grad = false);

// Mean L1 of the point forecast over `windows`, no gradients.
double validation_point_loss(const nets::Model& model, const std::vector<data::Window>& windows,
                             std::size_t batch_size = 256);

// Called after each batch, for logging and tests.
using BatchHook = std::function<void(std::size_t epoch, std::size_t batch, const LossBreakdown&)>;

// Adam over every parameter; per epoch the early-stopping monitor is the
// validation point loss. On return the point models hold their best-epoch
// parameters while the denoiser keeps its final state.
TrainResult train(nets::Model& model, const std::vector<data::Window>& train_windows,
                  const std::vector<data::Window>& val_windows, const TrainConfig& config,
                  const diffusion::NoiseSchedule& schedule, std::ostream* log = nullptr,
                  const BatchHook& hook = {});

// Delimited history: epoch,lambda,eta,l_non,l_point,l_diffusion,l_finetune,total,val_point,seconds
void write_history(std::ostream& out, const std::vector<EpochRecord>& history);

}  // namespace residiff::training
