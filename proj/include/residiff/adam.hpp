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

#include <cstdint>
#include <vector>

#include "residiff/tensor.hpp"

namespace residiff::ad {

struct AdamOptions {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam over a fixed parameter list. Moment buffers mirror the
// parameter shapes. A parameter whose gradient buffer is empty (nothing
// flowed into it since the last zero_grad) is skipped: neither its value nor
// its moments change, and its bias-correction count does not advance.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamOptions options);

  // One update from the currently accumulated gradients. Gradients are left
  // in place; call zero_grad() before the next forward pass.
  void step();
  void zero_grad();

  std::int64_t steps_taken() const { return t_; }
  const AdamOptions& options() const { return options_; }
  const std::vector<double>& first_moment(std::size_t i) const { return m_[i]; }
  const std::vector<double>& second_moment(std::size_t i) const { return v_[i]; }

 private:
  std::vector<Tensor> params_;
  AdamOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::vector<std::int64_t> param_steps_;
  std::int64_t t_ = 0;
};

}  // namespace residiff::ad
