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

// Differentiable operations. Unless noted, an op works along the last axis
// and treats all leading axes as a flat batch of rows.

#include <cstddef>
#include <span>

#include "residiff/tensor.hpp"

namespace residiff::ad {

// x[..., in] * w[in, out] (+ b[out]).
Tensor linear(const Tensor& x, const Tensor& w);
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// Channel-specific affine map. x[B, D, in], w[D, in, out], b[D, out].
Tensor linear_per_channel(const Tensor& x, const Tensor& w);
Tensor linear_per_channel(const Tensor& x, const Tensor& w, const Tensor& b);

// Elementwise on equal shapes.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& x, double c);
Tensor scale(const Tensor& x, double c);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

Tensor relu(const Tensor& x);
Tensor silu(const Tensor& x);
Tensor abs(const Tensor& x);  // subgradient 0 at 0
Tensor square(const Tensor& x);

// Zero mean, unit (biased) variance per row, eps = 1e-5 inside the root.
// No affine parameters. Rows shorter than 2 are rejected.
Tensor layer_norm(const Tensor& x, double eps = 1e-5);

// Centered mean over an odd window with replicate padding of (a - 1) / 2 at
// both ends; output length equals input length.
Tensor moving_average(const Tensor& x, std::size_t window);

// Same values, no gradient path back to `x`.
Tensor detach(const Tensor& x);

Tensor concat_last(const Tensor& a, const Tensor& b);
Tensor slice_last(const Tensor& x, std::size_t start, std::size_t length);
Tensor reshape(const Tensor& x, Shape shape);
// Tiles a size-1 axis `count` times.
Tensor repeat_axis(const Tensor& x, int axis, std::size_t count);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
// mean |a - b| and mean (a - b)^2, fused.
Tensor mean_abs_error(const Tensor& a, const Tensor& b);
Tensor mean_squared_error(const Tensor& a, const Tensor& b);

// Transformer-style position code for diffusion step `k`:
// out[2i] = sin(k / 10000^(2i/H)), out[2i+1] = cos(k / 10000^(2i/H)).
// Odd H is a ConfigError.
Tensor sinusoidal_embedding(double k, std::size_t dim);
// One row per entry of `steps`: shape [steps.size(), dim].
Tensor sinusoidal_embedding(std::span<const std::size_t> steps, std::size_t dim);

}  // namespace residiff::ad
