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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "residiff/data.hpp"
#include "residiff/diffusion.hpp"
#include "residiff/errors.hpp"
#include "residiff/training.hpp"
#include "test_util.hpp"

namespace residiff::training {
namespace {

using ad::Tensor;
using testing::random_tensor;

TEST(Schedule, ClosedFormFlags) {
  // delta = 2, Delta = 3.
  const bool lambda[] = {0, 0, 1, 0, 1, 1, 0, 1, 1, 0};
  const bool eta[] = {0, 0, 0, 1, 0, 0, 1, 0, 0, 1};
  for (std::size_t s = 0; s < 10; ++s) {
    const auto f = schedule(s, 2, 3);
    EXPECT_EQ(f.lambda, lambda[s]) << s;
    EXPECT_EQ(f.eta, eta[s]) << s;
  }
  // Never both at once.
  for (std::size_t s = 0; s < 50; ++s) {
    const auto f = schedule(s, 0, 4);
    EXPECT_FALSE(f.lambda && f.eta);
    EXPECT_TRUE(f.lambda || f.eta);
  }
  EXPECT_THROW(schedule(0, 0, 0), ConfigError);
}

TEST(Losses, PointLossesAreL1) {
  auto y = Tensor::from({1, 1, 2}, {1, 2}), yh = Tensor::from({1, 1, 2}, {0, 4});
  auto yn = Tensor::from({1, 1, 2}, {0, 0}), ynh = Tensor::from({1, 1, 2}, {1, -3});
  const auto l = loss_point_and_non(y, yh, yn, ynh);
  EXPECT_DOUBLE_EQ(l.l_point.item(), 1.5);
  EXPECT_DOUBLE_EQ(l.l_non.item(), 2.0);
}

struct AlterFixture : ::testing::Test {
  diffusion::NoiseSchedule sched = diffusion::NoiseSchedule::linear(100);
  nets::DemaDenoiser denoiser{{6, 4, 8, 1, 3}, 1};
  Rng rng{2};
  Tensor point_param, residual, condition;
  std::vector<double> eps;

  void SetUp() override {
    testing::randomize(denoiser, rng, 0.3);
    point_param = random_tensor({2, 1, 4}, rng, 1.0, true);
    residual = ad::scale(point_param, -1.0);  // stands in for y - y_hat
    condition = random_tensor({2, 1, 6}, rng);
    eps.resize(8);
    rng.fill_normal(eps);
  }
};

TEST_F(AlterFixture, DiffusionTermTrainsOnlyTheDenoiser) {
  const auto l = loss_alter(residual, 40, 10, condition, denoiser, {true, false}, eps, sched);
  ASSERT_TRUE(l.l_diffusion.defined());
  EXPECT_FALSE(l.l_finetune.defined());
  ad::backward(l.l_diffusion);
  EXPECT_TRUE(point_param.grad().empty());
  EXPECT_FALSE(denoiser.out_w.grad().empty());
  // Value: mean (r - D(q_sample(r, k), k, c))^2.
  std::vector<double> rk(8);
  diffusion::q_sample(residual.values(), 40, eps, sched, rk);
  const std::size_t steps[] = {40, 40};
  const auto pred = denoiser.forward(Tensor::from({2, 1, 4}, rk), steps, condition);
  double want = 0;
  for (int i = 0; i < 8; ++i) want += std::pow(residual.values()[i] - pred.values()[i], 2) / 8;
  EXPECT_NEAR(l.l_diffusion.item(), want, 1e-14);
}

TEST_F(AlterFixture, FinetuneTermTrainsOnlyThePointPath) {
  const auto l = loss_alter(residual, 40, 10, condition, denoiser, {false, true}, eps, sched);
  ASSERT_TRUE(l.l_finetune.defined());
  EXPECT_FALSE(l.l_diffusion.defined());
  ad::backward(l.l_finetune);
  EXPECT_FALSE(point_param.grad().empty());
  for (const auto& p : denoiser.parameters()) EXPECT_TRUE(p.grad().empty());
}

TEST_F(AlterFixture, RejectsBadSteps) {
  EXPECT_THROW(loss_alter(residual, 0, 10, condition, denoiser, {true, false}, eps, sched), RangeError);
  EXPECT_THROW(loss_alter(residual, 10, 101, condition, denoiser, {true, false}, eps, sched), RangeError);
  std::vector<double> short_eps(3);
  EXPECT_THROW(loss_alter(residual, 10, 10, condition, denoiser, {true, false}, short_eps, sched),
               DimensionError);
}

struct SmallRun {
  std::vector<data::Window> train, val;
  nets::ModelConfig model_cfg;
  TrainConfig cfg;
  diffusion::NoiseSchedule sched = diffusion::NoiseSchedule::linear(100);

  SmallRun() {
    data::SynthOptions so;
    so.length = 400;
    so.channels = 2;
    const auto synth = data::synthesize(so);
    const auto splits = data::split_and_standardize(synth.table.values, {});
    data::WindowOptions wo{24, 12, 2, 2, 4};
    train = data::make_windows(splits.train, wo);
    val = data::make_windows(splits.val, wo);
    model_cfg.lookback = 24;
    model_cfg.horizon = 12;
    model_cfg.channels = 2;
    model_cfg.adapter_hidden = 8;
    model_cfg.denoiser_hidden = 8;
    model_cfg.kernel = 5;
    model_cfg.diffusion_steps = 100;
    cfg.max_epochs = 6;
    cfg.patience = 100;
    cfg.batch_size = 16;
    cfg.learning_rate = 1e-3;
    cfg.finetune_step = 10;
  }
};

TEST(Train, DeterministicForFixedSeed) {
  SmallRun run;
  nets::Model a(run.model_cfg), b(run.model_cfg);
  const auto ra = train(a, run.train, run.val, run.cfg, run.sched);
  const auto rb = train(b, run.train, run.val, run.cfg, run.sched);
  ASSERT_EQ(ra.history.size(), rb.history.size());
  for (std::size_t e = 0; e < ra.history.size(); ++e) {
    EXPECT_EQ(ra.history[e].train.total, rb.history[e].train.total);
    EXPECT_EQ(ra.history[e].val_point, rb.history[e].val_point);
  }
  EXPECT_EQ(a.denoiser.flat_values(), b.denoiser.flat_values());
}

TEST(Train, DenoiserFrozenDuringPretraining) {
  SmallRun run;
  run.cfg.pretrain_epochs = 2;
  run.cfg.period = 2;
  run.cfg.max_epochs = 4;
  nets::Model m(run.model_cfg);
  const auto initial = m.denoiser.flat_values();
  std::vector<double> after_pretrain;
  std::vector<ScheduleFlags> seen;
  train(m, run.train, run.val, run.cfg, run.sched, nullptr,
        [&](std::size_t epoch, std::size_t, const LossBreakdown& lb) {
          if (epoch < 2) {
            EXPECT_FALSE(lb.flags.lambda);
            EXPECT_FALSE(lb.flags.eta);
            EXPECT_EQ(lb.l_diffusion, 0.0);
            EXPECT_EQ(m.denoiser.flat_values(), initial);
          }
        });
  // Epoch 2 finetunes (2 mod 2 == 0), epoch 3 trains the denoiser.
  EXPECT_NE(m.denoiser.flat_values(), initial);
}

TEST(Train, RestoresBestPointModels) {
  SmallRun run;
  run.cfg.max_epochs = 8;
  nets::Model m(run.model_cfg);
  const auto r = train(m, run.train, run.val, run.cfg, run.sched);
  EXPECT_EQ(validation_point_loss(m, run.val), r.best_val_point);
  EXPECT_EQ(r.history[r.best_epoch].val_point, r.best_val_point);
}

TEST(Train, EarlyStoppingAfterPatience) {
  SmallRun run;
  run.cfg.max_epochs = 200;
  run.cfg.patience = 1;
  run.cfg.learning_rate = 0.5;  // unstable enough to stop quickly
  nets::Model m(run.model_cfg);
  const auto r = train(m, run.train, run.val, run.cfg, run.sched);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.history.size(), r.best_epoch + 2);
}

TEST(Train, LogsTotalsFromComputedTermsOnly) {
  SmallRun run;
  run.cfg.max_epochs = 4;
  nets::Model m(run.model_cfg);
  const auto r = train(m, run.train, run.val, run.cfg, run.sched);
  for (const auto& rec : r.history) {
    const auto f = schedule(rec.epoch, 0, 3);
    EXPECT_EQ(rec.train.flags.lambda, f.lambda);
    if (!f.lambda) {
      EXPECT_EQ(rec.train.l_diffusion, 0.0);
    }
    if (!f.eta) {
      EXPECT_EQ(rec.train.l_finetune, 0.0);
    }
    EXPECT_DOUBLE_EQ(rec.train.total, rec.train.l_non + rec.train.l_point + rec.train.l_diffusion +
                                          rec.train.l_finetune);
  }
  std::ostringstream out;
  write_history(out, r.history);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            "epoch,lambda,eta,l_non,l_point,l_diffusion,l_finetune,total,val_point,seconds");
}

TEST(Train, NonFiniteLossIsNumericError) {
  SmallRun run;
  run.train[0].y.data[0] = std::nan("");
  nets::Model m(run.model_cfg);
  EXPECT_THROW(train(m, run.train, run.val, run.cfg, run.sched), NumericError);
}

TEST(Train, ConfigValidation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate(1000));
  c.finetune_step = 1001;
  EXPECT_THROW(c.validate(1000), ConfigError);
  c = {};
  c.period = 0;
  EXPECT_THROW(c.validate(1000), ConfigError);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(1000), ConfigError);
}

}  // namespace
}  // namespace residiff::training
