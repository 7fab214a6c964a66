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
#include <numeric>

#include "residiff/adam.hpp"
#include "residiff/errors.hpp"
#include "residiff/ops.hpp"
#include "residiff/tensor.hpp"
#include "test_util.hpp"

namespace residiff::ad {
namespace {

using testing::check_gradients;
using testing::probe;
using testing::random_tensor;

constexpr double kTol = 1e-6;

TEST(Gradcore, LinearForwardMatchesHandComputation) {
  auto x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  auto w = Tensor::from({3, 2}, {1, 0, 0, 1, 1, 1});
  auto b = Tensor::from({2}, {0.5, -0.5});
  auto y = linear(x, w, b);
  ASSERT_EQ(y.shape(), (Shape{2, 2}));
  const std::vector<double> want{1 + 3 + 0.5, 2 + 3 - 0.5, 4 + 6 + 0.5, 5 + 6 - 0.5};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(y.values()[i], want[i]);
}

TEST(Gradcore, ElementwiseAndReductionGradients) {
  Rng rng(3);
  for (int draw = 0; draw < 5; ++draw) {
    auto a = random_tensor({2, 3, 4}, rng, 1.0, true);
    auto b = random_tensor({2, 3, 4}, rng, 1.0, true);
    auto r = random_tensor({2, 3, 4}, rng);
    auto f = [&] {
      Tensor t = mul(add(a, scale(b, 0.3)), sub(a, b));
      t = add(silu(t), square(add_scalar(a, 0.1)));
      return add(probe(t, r), mean(b));
    };
    auto res = check_gradients(f, {a, b}, rng);
    EXPECT_LE(res.max_rel, kTol) << res.worst;
  }
}

TEST(Gradcore, LinearAndPerChannelGradients) {
  Rng rng(4);
  for (int draw = 0; draw < 5; ++draw) {
    auto x = random_tensor({3, 2, 5}, rng, 1.0, true);
    auto w = random_tensor({5, 4}, rng, 1.0, true);
    auto b = random_tensor({4}, rng, 1.0, true);
    auto wc = random_tensor({2, 5, 4}, rng, 1.0, true);
    auto bc = random_tensor({2, 4}, rng, 1.0, true);
    auto r = random_tensor({3, 2, 4}, rng);
    auto f = [&] { return add(probe(linear(x, w, b), r), probe(linear_per_channel(x, wc, bc), r)); };
    auto res = check_gradients(f, {x, w, b, wc, bc}, rng);
    EXPECT_LE(res.max_rel, kTol) << res.worst;
  }
}

TEST(Gradcore, LayerNormMovingAverageAndShapeOpGradients) {
  Rng rng(5);
  for (int draw = 0; draw < 5; ++draw) {
    auto x = random_tensor({2, 3, 7}, rng, 1.0, true);
    auto y = random_tensor({2, 3, 2}, rng, 1.0, true);
    auto r = random_tensor({2, 3, 9}, rng);
    auto r1 = random_tensor({2, 1, 7}, rng);
    auto f = [&] {
      Tensor t = layer_norm(x);
      t = add(t, moving_average(x, 5));
      t = concat_last(t, y);
      Tensor s = slice_last(reshape(x, {2, 21}), 3, 7);
      Tensor rep = repeat_axis(reshape(slice_last(s, 0, 7), {2, 1, 7}), 1, 3);
      return add(probe(t, r), add(probe(rep, repeat_axis(r1, 1, 3)), mean_squared_error(x, rep)));
    };
    auto res = check_gradients(f, {x, y}, rng);
    EXPECT_LE(res.max_rel, kTol) << res.worst;
  }
}

TEST(Gradcore, AbsAndReluAwayFromKinks) {
  Rng rng(6);
  auto x = random_tensor({20}, rng, 1.0, true);
  for (auto& v : x.mutable_values()) v += (v >= 0 ? 0.1 : -0.1);
  auto z = random_tensor({20}, rng);
  for (auto& v : z.mutable_values()) v = v * 0.01;
  auto f = [&] { return add(sum(relu(x)), add(sum(abs(x)), mean_abs_error(x, z))); };
  auto res = check_gradients(f, {x}, rng);
  EXPECT_LE(res.max_rel, kTol) << res.worst;
}

TEST(Gradcore, LayerNormForwardIsStandardized) {
  auto x = Tensor::from({1, 4}, {1, 2, 3, 4});
  auto y = layer_norm(x);
  const double var = 1.25;
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(y.values()[i], (i + 1 - 2.5) / std::sqrt(var + 1e-5), 1e-15);
  }
}

TEST(Gradcore, MovingAverageReplicatesEdges) {
  auto x = Tensor::from({5}, {1, 2, 3, 4, 10});
  auto y = moving_average(x, 3);
  const std::vector<double> want{(1 + 1 + 2) / 3.0, 2, 3, (3 + 4 + 10) / 3.0, (4 + 10 + 10) / 3.0};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(y.values()[i], want[i], 1e-15);
  EXPECT_THROW(moving_average(x, 4), ConfigError);
}

TEST(Gradcore, SinusoidalEmbeddingValues) {
  auto e = sinusoidal_embedding(7.0, 6);
  for (std::size_t i = 0; i < 3; ++i) {
    const double freq = std::pow(10000.0, -2.0 * i / 6.0);
    EXPECT_NEAR(e.values()[2 * i], std::sin(7.0 * freq), 1e-12);
    EXPECT_NEAR(e.values()[2 * i + 1], std::cos(7.0 * freq), 1e-12);
  }
  EXPECT_THROW(sinusoidal_embedding(1.0, 5), ConfigError);
}

TEST(Gradcore, ShapeMismatchesThrow) {
  auto a = Tensor::zeros({2, 3});
  auto b = Tensor::zeros({3, 2});
  EXPECT_THROW(add(a, b), DimensionError);
  EXPECT_THROW(linear(a, Tensor::zeros({2, 2})), DimensionError);
  EXPECT_THROW(linear(a, Tensor::zeros({3, 2}), Tensor::zeros({3})), DimensionError);
  EXPECT_THROW(backward(a), ContractError);
  EXPECT_THROW((void)a.item(), ContractError);
}

TEST(Gradcore, GradientsAccumulateUntilZeroed) {
  auto w = Tensor::from({2}, {1.0, -2.0}, true);
  backward(sum(scale(w, 3.0)));
  backward(sum(scale(w, 3.0)));
  EXPECT_EQ(w.grad()[0], 6.0);
  EXPECT_EQ(w.grad()[1], 6.0);
  w.zero_grad();
  EXPECT_TRUE(w.grad().empty());
}

TEST(Gradcore, TapeIsReleasedAfterBackward) {
  auto w = Tensor::from({3}, {1, 2, 3}, true);
  Tensor hidden = square(w);
  Tensor loss = sum(hidden);
  backward(loss);
  EXPECT_FALSE(hidden.requires_grad());
  EXPECT_TRUE(hidden.node()->parents.empty());
  EXPECT_TRUE(hidden.grad().empty());
  EXPECT_EQ(w.grad()[2], 6.0);
  // Backward through a consumed graph is a no-op rather than a crash.
  backward(loss);
  EXPECT_EQ(w.grad()[2], 6.0);
}

TEST(Gradcore, SharedSubexpressionsSumBothPaths) {
  auto w = Tensor::from({1}, {2.0}, true);
  Tensor s = square(w);               // 4
  Tensor loss = sum(mul(s, add(s, w)));  // s^2 + s w = w^4 + w^3
  backward(loss);
  EXPECT_DOUBLE_EQ(w.grad()[0], 4 * 8.0 + 3 * 4.0);
}

TEST(Gradcore, NoGradGuardRecordsNothing) {
  auto w = Tensor::from({2}, {1, 2}, true);
  Tensor y;
  {
    NoGradGuard guard;
    EXPECT_FALSE(grad_enabled());
    y = square(w);
  }
  EXPECT_TRUE(grad_enabled());
  EXPECT_FALSE(y.requires_grad());
  EXPECT_TRUE(y.node()->parents.empty());
}

TEST(Gradcore, DetachStopsGradient) {
  auto w = Tensor::from({2}, {1, 2}, true);
  backward(sum(add(detach(square(w)), w)));
  EXPECT_EQ(w.grad()[0], 1.0);
  EXPECT_EQ(w.grad()[1], 1.0);
}

TEST(Adam, FirstStepsMatchClosedForm) {
  auto w = Tensor::from({2}, {1.0, -1.0}, true);
  AdamOptions opt{0.1, 0.9, 0.999, 1e-8};
  Adam adam({w}, opt);
  std::vector<double> m(2, 0), v(2, 0), ref{1.0, -1.0};
  for (int t = 1; t <= 3; ++t) {
    adam.zero_grad();
    backward(sum(square(w)));  // g = 2w
    adam.step();
    for (int i = 0; i < 2; ++i) {
      const double g = 2 * ref[i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, t));
      const double vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
      EXPECT_NEAR(w.values()[i], ref[i], 1e-15);
    }
  }
  EXPECT_EQ(adam.steps_taken(), 3);
}

TEST(Adam, ParametersWithoutGradientAreUntouched) {
  auto used = Tensor::from({1}, {1.0}, true);
  auto idle = Tensor::from({1}, {5.0}, true);
  Adam adam({used, idle}, {});
  backward(sum(square(used)));
  backward(sum(square(idle)));
  adam.step();  // both move
  const double idle_after_one = idle.values()[0];
  const auto idle_m = adam.first_moment(1);
  for (int i = 0; i < 3; ++i) {
    adam.zero_grad();
    backward(sum(square(used)));
    adam.step();
  }
  EXPECT_EQ(idle.values()[0], idle_after_one);
  EXPECT_EQ(adam.first_moment(1), idle_m);
  EXPECT_NE(used.values()[0], 1.0);
}

TEST(Adam, ReducesAQuadratic) {
  Rng rng(9);
  auto w = random_tensor({10}, rng, 3.0, true);
  Adam adam({w}, {0.05});
  double first = 0, last = 0;
  for (int i = 0; i < 400; ++i) {
    adam.zero_grad();
    Tensor loss = mean(square(add_scalar(w, -1.0)));
    if (i == 0) first = loss.item();
    last = loss.item();
    backward(loss);
    adam.step();
  }
  EXPECT_LT(last, 1e-3 * first);
}

}  // namespace
}  // namespace residiff::ad
