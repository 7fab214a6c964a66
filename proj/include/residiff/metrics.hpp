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

// Point and probabilistic forecast metrics over sample ensembles.
//
// Ensembles are flat: samples[n * cells + i] is sample n of cell i, where a
// cell is one (channel, step) position of the forecast window. Truth holds
// one value per cell.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace residiff::metrics {

struct PointErrors {
  double mse = 0.0;
  double mae = 0.0;
};
PointErrors mse_mae(std::span<const double> pred, std::span<const double> truth);

// Energy-form CRPS (biased estimator):
// mean|x_i - y| - 1/(2N^2) sum_ij |x_i - x_j|, computed in O(N log N).
double crps_empirical(std::span<const double> samples, double y);

// Empirical quantile with linear interpolation between order statistics
// (position q * (N - 1)). `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double q);

// Per-cell medians of an ensemble.
std::vector<double> ensemble_median(std::span<const double> samples, std::size_t n_samples,
                                    std::size_t cells);

// Mean CRPS over cells.
double crps_mean(std::span<const double> samples, std::size_t n_samples,
                 std::span<const double> truth);

struct CrpsSum {
  double normalized = 0.0;
  double raw = 0.0;
};
// Sums samples and truth over channels, CRPS per step, mean over steps;
// normalized divides by the mean |summed truth|. Layout is channel-major
// cells (cell = c * steps + t).
CrpsSum crps_sum(std::span<const double> samples, std::size_t n_samples,
                 std::span<const double> truth, std::size_t channels, std::size_t steps);

// Percentage of cells whose truth lies within [q_lo, q_hi] of the ensemble.
double picp(std::span<const double> samples, std::size_t n_samples,
            std::span<const double> truth, double lo = 0.025, double hi = 0.975);

// Mean over M equal-probability bins of |observed fraction - 1/M|. Truths
// below the first or above the last quantile count toward the end bins.
double qice(std::span<const double> samples, std::size_t n_samples,
            std::span<const double> truth, std::size_t bins = 10);

struct MetricReport {
  double mse = 0.0;
  double mae = 0.0;
  double crps = 0.0;
  double crps_sum = 0.0;
  double crps_sum_raw = 0.0;
  double picp = 0.0;
  double qice = 0.0;
  std::size_t n_samples = 0;
  std::size_t m_bins = 10;

  // "format_version: 1" then key: value lines with fixed key names.
  std::string to_text() const;
  static MetricReport parse(const std::string& text);
};

// Accumulates per-window results; every window weighs by its cell count.
class MetricAccumulator {
 public:
  MetricAccumulator(std::size_t n_samples, std::size_t bins = 10);
  // Window samples [N, D, S] flattened, truth [D, S].
  void add(std::span<const double> samples, std::span<const double> truth, std::size_t channels,
           std::size_t steps);
  MetricReport report() const;
  std::size_t windows() const { return windows_; }

 private:
  std::size_t n_samples_, bins_;
  std::size_t windows_ = 0;
  std::size_t cells_ = 0;
  std::size_t sum_steps_ = 0;
  double se_ = 0.0, ae_ = 0.0, crps_ = 0.0, covered_ = 0.0;
  double crps_sum_raw_ = 0.0, abs_sum_truth_ = 0.0;
  std::vector<double> bin_counts_;
};

}  // namespace residiff::metrics
