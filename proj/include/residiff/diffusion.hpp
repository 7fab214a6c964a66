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

// Noise schedules, forward noising, DDPM and DDIM reverse steps, and the
// prior-shifted ("CARD") chain together with a numerical check that its
// residual y_k - f follows the plain DDPM dynamics.
//
// All samplers take their Gaussian draws from the caller so that shared-noise
// comparisons and seeded runs are reproducible. Vectors are flat spans; the
// caller decides the layout.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace residiff::diffusion {

class NoiseSchedule {
 public:
  // beta linearly spaced from beta_start to beta_end inclusive.
  static NoiseSchedule linear(std::size_t steps, double beta_start = 1e-4, double beta_end = 0.02);
  // Explicit beta_1..beta_K, each in (0, 1).
  static NoiseSchedule from_betas(std::span<const double> betas);

  std::size_t steps() const { return beta_.size() - 1; }
  // Step-indexed accessors; k in [1, K] (alpha_bar also accepts 0).
  double beta(std::size_t k) const;
  double alpha(std::size_t k) const;
  double alpha_bar(std::size_t k) const;
  // (1 - abar_{k-1}) / (1 - abar_k) * beta_k
  double posterior_variance(std::size_t k) const;

 private:
  explicit NoiseSchedule(std::vector<double> betas);
  void check_step(std::size_t k, std::size_t lowest) const;

  // Index 0 holds the k = 0 convention: beta 0, alpha 1, alpha_bar 1.
  std::vector<double> beta_;
  std::vector<double> alpha_;
  std::vector<double> alpha_bar_;
};

// sqrt(abar_k) r0 + sqrt(1 - abar_k) eps.
void q_sample(std::span<const double> r0, std::size_t k, std::span<const double> eps,
              const NoiseSchedule& schedule, std::span<double> out);

struct PosteriorCoefficients {
  double data;   // multiplies the clean estimate
  double state;  // multiplies the current noisy state
};
PosteriorCoefficients ddpm_posterior_coefficients(std::size_t k, const NoiseSchedule& schedule);

// One ancestral step k -> k-1 using a direct clean-signal estimate:
// mean = A r0_hat + B rk, out = mean + sqrt(posterior_variance) z.
// z is ignored at k = 1.
void ddpm_posterior_step(std::span<const double> rk, std::span<const double> r0_hat,
                         std::size_t k, const NoiseSchedule& schedule,
                         std::span<const double> z, std::span<double> out);

// One DDIM step k -> k_prev (k_prev < k, k_prev may be 0) from a clean-signal
// estimate. eta = 0 is deterministic, eta = 1 with k_prev = k - 1 reproduces
// the ancestral step in distribution. Returns true when the direction
// coefficient 1 - abar_prev - sigma^2 went negative and was clamped to 0.
bool ddim_step(std::span<const double> rk, std::span<const double> r0_hat, std::size_t k,
               std::size_t k_prev, double eta, const NoiseSchedule& schedule,
               std::span<const double> z, std::span<double> out);

// Number of clamps seen by ddim_step in this process.
std::uint64_t ddim_clamp_count();

// Descending visit order for accelerated sampling: K, K - stride, ...,
// stride with stride = K / count. Sampling ends at step 0.
std::vector<std::size_t> ddim_timesteps(std::size_t total_steps, std::size_t count);

// Prior-shifted forward step:
// y_k = sqrt(alpha_k) y_{k-1} + (1 - sqrt(1 - beta_k)) f + sqrt(beta_k) z_k.
void card_forward_step(std::span<const double> y_prev, std::span<const double> prior,
                       std::size_t k, const NoiseSchedule& schedule, std::span<const double> z,
                       std::span<double> out);

// Plain forward step: r_k = sqrt(alpha_k) r_{k-1} + sqrt(beta_k) z_k.
void ddpm_forward_step(std::span<const double> r_prev, std::size_t k,
                       const NoiseSchedule& schedule, std::span<const double> z,
                       std::span<double> out);

// Whole chains y_0..y_K. noise[k - 1] is the draw used at step k.
std::vector<std::vector<double>> card_forward_chain(std::span<const double> y0,
                                                    std::span<const double> prior,
                                                    const NoiseSchedule& schedule,
                                                    std::span<const std::vector<double>> noise);
std::vector<std::vector<double>> ddpm_forward_chain(std::span<const double> r0,
                                                    const NoiseSchedule& schedule,
                                                    std::span<const std::vector<double>> noise);

// Coefficients of the prior-shifted posterior mean
//   m_k = A y0 + B yk + C f.
struct CardPosteriorCoefficients {
  double a;
  double b;
  double c;
};
CardPosteriorCoefficients card_posterior_coefficients(std::size_t k,
                                                      const NoiseSchedule& schedule);

struct EquivalenceReport {
  std::size_t trials = 0;
  std::size_t steps = 0;
  std::size_t dimension = 0;
  double pathwise_max_abs = 0.0;     // max |(y_k - f) - r_k| over trials, k, elements
  double posterior_max_abs = 0.0;    // max |(m_k - f) - mu_k| at random states
  double coefficient_max_abs = 0.0;  // max_k |A_k + B_k + C_k - 1|
  bool zero_prior_bit_identical = false;
  double pathwise_tolerance = 1e-9;
  double posterior_tolerance = 1e-10;
  double coefficient_tolerance = 1e-12;
  double seconds = 0.0;

  bool pathwise_ok() const { return pathwise_max_abs <= pathwise_tolerance; }
  bool posterior_ok() const { return posterior_max_abs <= posterior_tolerance; }
  bool coefficient_ok() const { return coefficient_max_abs <= coefficient_tolerance; }
  bool passed() const {
    return pathwise_ok() && posterior_ok() && coefficient_ok() && zero_prior_bit_identical;
  }
  // key: value lines.
  std::string to_text() const;
};

// Runs the three checks on `trials` random problems of `dimension` elements.
EquivalenceReport verify_equivalence(std::size_t trials, const NoiseSchedule& schedule,
                               std::uint64_t seed = 0, std::size_t dimension = 16);

}  // namespace residiff::diffusion
