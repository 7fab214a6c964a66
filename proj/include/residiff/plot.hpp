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

// Static SVG rendering of one channel of a forecast ensemble: truth line,
// median line, and shaded 50% (25-75) and 90% (5-95) percentile bands.

#include <cstddef>
#include <span>
#include <string>

#include "residiff/forecast.hpp"

namespace residiff::pipeline {

struct PlotBands {
  std::vector<double> p05, p25, median, p75, p95;
};

// Per-step percentiles of channel `channel`.
PlotBands ensemble_bands(const Ensemble& ensemble, std::size_t channel);

// `history` (may be empty) is drawn before the forecast; `truth` (may be
// empty) over it. Returns the SVG text.
std::string render_svg(const Ensemble& ensemble, std::size_t channel,
                       std::span<const double> history, std::span<const double> truth,
                       const std::string& title);

void write_svg(const std::string& path, const std::string& svg);

}  // namespace residiff::pipeline
