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

#include <cstddef>
#include <span>
#include <vector>

namespace residiff {

// Multichannel series block, channel-major: data[c * steps + t].
// A window written "S x D" elsewhere is a Frame with steps = S, channels = D.
struct Frame {
  std::size_t channels = 0;
  std::size_t steps = 0;
  std::vector<double> data;

  Frame() = default;
  Frame(std::size_t channel_count, std::size_t step_count, double fill = 0.0)
      : channels(channel_count), steps(step_count), data(channel_count * step_count, fill) {}

  double& at(std::size_t c, std::size_t t) { return data[c * steps + t]; }
  double at(std::size_t c, std::size_t t) const { return data[c * steps + t]; }
  std::span<double> channel(std::size_t c) { return {data.data() + c * steps, steps}; }
  std::span<const double> channel(std::size_t c) const { return {data.data() + c * steps, steps}; }
  std::size_t size() const { return data.size(); }

  // Steps [start, start + count) of every channel.
  Frame slice(std::size_t start, std::size_t count) const {
    Frame out(channels, count);
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t t = 0; t < count; ++t) out.at(c, t) = at(c, start + t);
    return out;
  }

  friend bool operator==(const Frame&, const Frame&) = default;
};

}  // namespace residiff
