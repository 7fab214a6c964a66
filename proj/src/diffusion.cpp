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

#include "residiff/diffusion.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <sstream>

#include "residiff/errors.hpp"
#include "residiff/rng.hpp"

namespace residiff::diffusion {
namespace {

std::atomic<std::uint64_t> clamp_counter{0};

void check_sizes(std::size_t expected, std::initializer_list<std::size_t> sizes, const char* op) {
  for (std::size_t s : sizes) {
    if (s != expected) {
      throw DimensionError(std::string(op) + ": operand sizes " + std::to_string(expected) +
                           " and " + std::to_string(s) + " differ");
    }
  }
}

}  // namespace

NoiseSchedule::NoiseSchedule(std::vector<double> betas) {
  const std::size_t k_max = betas.size();
  beta_.assign(k_max + 1, 0.0);
  alpha_.assign(k_max + 1, 1.0);
  alpha_bar_.assign(k_max + 1, 1.0);
  for (std::size_t k = 1; k <= k_max; ++k) {
    const double b = betas[k - 1];
    if (!(b > 0.0 && b < 1.0)) {
      throw ConfigError("noise schedule: beta_" + std::to_string(k) + " = " + std::to_string(b) +
                        " is outside (0, 1)");
    }
    alpha_[k] = 1.0 - b;
    // Store the exact complement so that 1 - alpha_k == beta_k bit for bit.
    beta_[k] = 1.0 - alpha_[k];
    alpha_bar_[k] = alpha_bar_[k - 1] * alpha_[k];
  }
}

NoiseSchedule NoiseSchedule::linear(std::size_t steps, double beta_start, double beta_end) {
  if (steps < 1) throw ConfigError("linear_schedule: need at least one diffusion step");
  std::vector<double> betas(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    betas[i] = beta_start + (beta_end - beta_start) * frac;
  }
  betas.back() = steps == 1 ? beta_start : beta_end;
  return NoiseSchedule(std::move(betas));
}

NoiseSchedule NoiseSchedule::from_betas(std::span<const double> betas) {
  if (betas.empty()) throw ConfigError("noise schedule: need at least one diffusion step");
  return NoiseSchedule(std::vector<double>(betas.begin(), betas.end()));
}

void NoiseSchedule::check_step(std::size_t k, std::size_t lowest) const {
  if (k < lowest || k > steps()) {
    throw RangeError("diffusion step " + std::to_string(k) + " outside [" +
                     std::to_string(lowest) + ", " + std::to_string(steps()) + "]");
  }
}

double NoiseSchedule::beta(std::size_t k) const {
  check_step(k, 1);
  return beta_[k];
}

double NoiseSchedule::alpha(std::size_t k) const {
  check_step(k, 1);
  return alpha_[k];
}

double NoiseSchedule::alpha_bar(std::size_t k) const {
  check_step(k, 0);
  return alpha_bar_[k];
}

double NoiseSchedule::posterior_variance(std::size_t k) const {
  check_step(k, 1);
  return (1.0 - alpha_bar_[k - 1]) / (1.0 - alpha_bar_[k]) * beta_[k];
}

void q_sample(std::span<const double> r0, std::size_t k, std::span<const double> eps,
              const NoiseSchedule& schedule, std::span<double> out) {
  check_sizes(r0.size(), {eps.size(), out.size()}, "q_sample");
  const double ab = schedule.alpha_bar(k);
  if (k == 0) throw RangeError("q_sample: diffusion step 0 outside [1, K]");
  const double s_data = std::sqrt(ab);
  const double s_noise = std::sqrt(1.0 - ab);
  for (std::size_t i = 0; i < r0.size(); ++i) out[i] = s_data * r0[i] + s_noise * eps[i];
}

PosteriorCoefficients ddpm_posterior_coefficients(std::size_t k, const NoiseSchedule& schedule) {
  const double ab = schedule.alpha_bar(k);
  if (k == 0) throw RangeError("posterior step: diffusion step 0 outside [1, K]");
  const double ab_prev = schedule.alpha_bar(k - 1);
  const double denom = 1.0 - ab;
  return {std::sqrt(ab_prev) * schedule.beta(k) / denom,
          std::sqrt(schedule.alpha(k)) * (1.0 - ab_prev) / denom};
}

void ddpm_posterior_step(std::span<const double> rk, std::span<const double> r0_hat,
                         std::size_t k, const NoiseSchedule& schedule,
                         std::span<const double> z, std::span<double> out) {
  check_sizes(rk.size(), {r0_hat.size(), z.size(), out.size()}, "ddpm_posterior_step");
  const auto coef = ddpm_posterior_coefficients(k, schedule);
  const double sd = k == 1 ? 0.0 : std::sqrt(schedule.posterior_variance(k));
  for (std::size_t i = 0; i < rk.size(); ++i) {
    const double mean = coef.data * r0_hat[i] + coef.state * rk[i];
    out[i] = k == 1 ? mean : mean + sd * z[i];
  }
}

bool ddim_step(std::span<const double> rk, std::span<const double> r0_hat, std::size_t k,
               std::size_t k_prev, double eta, const NoiseSchedule& schedule,
               std::span<const double> z, std::span<double> out) {
  check_sizes(rk.size(), {r0_hat.size(), z.size(), out.size()}, "ddim_step");
  if (k == 0 || k_prev >= k) {
    throw RangeError("ddim_step: need 0 <= k_prev < k, got k = " + std::to_string(k) +
                     ", k_prev = " + std::to_string(k_prev));
  }
  const double ab = schedule.alpha_bar(k);
  const double ab_prev = schedule.alpha_bar(k_prev);
  const double sigma =
      eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab)) * std::sqrt(1.0 - ab / ab_prev);
  double dir2 = 1.0 - ab_prev - sigma * sigma;
  bool clamped = false;
  if (dir2 < 0.0) {
    dir2 = 0.0;
    clamped = true;
    clamp_counter.fetch_add(1, std::memory_order_relaxed);
  }
  const double dir = std::sqrt(dir2);
  const double s_ab = std::sqrt(ab);
  const double s_noise = std::sqrt(1.0 - ab);
  const double s_ab_prev = std::sqrt(ab_prev);
  for (std::size_t i = 0; i < rk.size(); ++i) {
    const double eps_hat = (rk[i] - s_ab * r0_hat[i]) / s_noise;
    out[i] = s_ab_prev * r0_hat[i] + dir * eps_hat + sigma * z[i];
  }
  return clamped;
}

std::uint64_t ddim_clamp_count() { return clamp_counter.load(std::memory_order_relaxed); }

std::vector<std::size_t> ddim_timesteps(std::size_t total_steps, std::size_t count) {
  if (count == 0 || count > total_steps) {
    throw ConfigError("ddim_timesteps: need 1 <= sampling steps <= " +
                      std::to_string(total_steps) + ", got " + std::to_string(count));
  }
  const std::size_t stride = total_steps / count;
  std::vector<std::size_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = total_steps - i * stride;
  return out;
}

void card_forward_step(std::span<const double> y_prev, std::span<const double> prior,
                       std::size_t k, const NoiseSchedule& schedule, std::span<const double> z,
                       std::span<double> out) {
  check_sizes(y_prev.size(), {prior.size(), z.size(), out.size()}, "card_forward_step");
  const double b = schedule.beta(k);
  const double s_alpha = std::sqrt(schedule.alpha(k));
  const double s_prior = 1.0 - std::sqrt(1.0 - b);
  const double s_noise = std::sqrt(b);
  for (std::size_t i = 0; i < y_prev.size(); ++i) {
    out[i] = s_alpha * y_prev[i] + s_prior * prior[i] + s_noise * z[i];
  }
}

void ddpm_forward_step(std::span<const double> r_prev, std::size_t k,
                       const NoiseSchedule& schedule, std::span<const double> z,
                       std::span<double> out) {
  check_sizes(r_prev.size(), {z.size(), out.size()}, "ddpm_forward_step");
  const double s_alpha = std::sqrt(schedule.alpha(k));
  const double s_noise = std::sqrt(schedule.beta(k));
  for (std::size_t i = 0; i < r_prev.size(); ++i) out[i] = s_alpha * r_prev[i] + s_noise * z[i];
}

std::vector<std::vector<double>> card_forward_chain(std::span<const double> y0,
                                                    std::span<const double> prior,
                                                    const NoiseSchedule& schedule,
                                                    std::span<const std::vector<double>> noise) {
  if (noise.size() != schedule.steps()) {
    throw DimensionError("card_forward_chain: " + std::to_string(noise.size()) +
                         " noise draws for " + std::to_string(schedule.steps()) + " steps");
  }
  std::vector<std::vector<double>> chain(schedule.steps() + 1);
  chain[0].assign(y0.begin(), y0.end());
  for (std::size_t k = 1; k <= schedule.steps(); ++k) {
    chain[k].resize(y0.size());
    card_forward_step(chain[k - 1], prior, k, schedule, noise[k - 1], chain[k]);
  }
  return chain;
}

std::vector<std::vector<double>> ddpm_forward_chain(std::span<const double> r0,
                                                    const NoiseSchedule& schedule,
                                                    std::span<const std::vector<double>> noise) {
  if (noise.size() != schedule.steps()) {
    throw DimensionError("ddpm_forward_chain: " + std::to_string(noise.size()) +
                         " noise draws for " + std::to_string(schedule.steps()) + " steps");
  }
  std::vector<std::vector<double>> chain(schedule.steps() + 1);
  chain[0].assign(r0.begin(), r0.end());
  for (std::size_t k = 1; k <= schedule.steps(); ++k) {
    chain[k].resize(r0.size());
    ddpm_forward_step(chain[k - 1], k, schedule, noise[k - 1], chain[k]);
  }
  return chain;
}

CardPosteriorCoefficients card_posterior_coefficients(std::size_t k,
                                                      const NoiseSchedule& schedule) {
  const double ab = schedule.alpha_bar(k);
  if (k == 0) throw RangeError("card posterior: diffusion step 0 outside [1, K]");
  const double ab_prev = schedule.alpha_bar(k - 1);
  const double a = schedule.alpha(k);
  const double b = schedule.beta(k);
  const double denom = 1.0 - ab;
  return {b * std::sqrt(ab_prev) / denom, (1.0 - ab_prev) * std::sqrt(a) / denom,
          1.0 + (std::sqrt(ab) - 1.0) * (std::sqrt(a) + std::sqrt(ab_prev)) / denom};
}

std::string EquivalenceReport::to_text() const {
  std::ostringstream out;
  out.precision(6);
  out << std::scientific;
  out << "trials: " << trials << '\n'
      << "steps: " << steps << '\n'
      << "dimension: " << dimension << '\n'
      << "pathwise_max_abs_diff: " << pathwise_max_abs << '\n'
      << "pathwise_tolerance: " << pathwise_tolerance << '\n'
      << "pathwise_pass: " << (pathwise_ok() ? "true" : "false") << '\n'
      << "posterior_max_abs_diff: " << posterior_max_abs << '\n'
      << "posterior_tolerance: " << posterior_tolerance << '\n'
      << "posterior_pass: " << (posterior_ok() ? "true" : "false") << '\n'
      << "coefficient_max_abs: " << coefficient_max_abs << '\n'
      << "coefficient_tolerance: " << coefficient_tolerance << '\n'
      << "coefficient_pass: " << (coefficient_ok() ? "true" : "false") << '\n'
      << "zero_prior_bit_identical: " << (zero_prior_bit_identical ? "true" : "false") << '\n'
      << std::fixed << "seconds: " << seconds << '\n'
      << "passed: " << (passed() ? "true" : "false") << '\n';
  return out.str();
}

EquivalenceReport verify_equivalence(std::size_t trials, const NoiseSchedule& schedule,
                               std::uint64_t seed, std::size_t dimension) {
  if (trials < 1) throw ConfigError("verify_equivalence: need at least one trial");
  if (dimension < 1) throw ConfigError("verify_equivalence: need a positive dimension");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t k_max = schedule.steps();
  EquivalenceReport report;
  report.trials = trials;
  report.steps = k_max;
  report.dimension = dimension;
  report.zero_prior_bit_identical = true;

  std::vector<double> y(dimension), y_next(dimension), r(dimension), r_next(dimension);
  std::vector<double> prior(dimension), zero(dimension, 0.0), z(dimension);
  std::vector<double> y_plain(dimension), y_plain_next(dimension);

  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(Rng::derive(seed, trial));
    for (std::size_t i = 0; i < dimension; ++i) {
      y[i] = 2.0 * rng.normal();
      prior[i] = 3.0 * rng.normal();
      r[i] = y[i] - prior[i];
      y_plain[i] = y[i];
    }
    // (a) Same draws drive the shifted chain, the plain chain on y0 - f, and
    // the shifted chain with a zero prior (which must equal the plain chain
    // started from y0).
    std::vector<double> plain_from_y0 = y;
    std::vector<double> plain_next(dimension);
    for (std::size_t k = 1; k <= k_max; ++k) {
      rng.fill_normal(z);
      card_forward_step(y, prior, k, schedule, z, y_next);
      ddpm_forward_step(r, k, schedule, z, r_next);
      card_forward_step(y_plain, zero, k, schedule, z, y_plain_next);
      ddpm_forward_step(plain_from_y0, k, schedule, z, plain_next);
      for (std::size_t i = 0; i < dimension; ++i) {
        report.pathwise_max_abs =
            std::max(report.pathwise_max_abs, std::abs((y_next[i] - prior[i]) - r_next[i]));
        if (y_plain_next[i] != plain_next[i]) report.zero_prior_bit_identical = false;
      }
      y.swap(y_next);
      r.swap(r_next);
      y_plain.swap(y_plain_next);
      plain_from_y0.swap(plain_next);
    }

    // (b) Posterior means at random states and random steps.
    for (int probe = 0; probe < 10; ++probe) {
      const std::size_t k = static_cast<std::size_t>(rng.uniform_int(1, k_max));
      const auto card = card_posterior_coefficients(k, schedule);
      const auto ddpm = ddpm_posterior_coefficients(k, schedule);
      for (std::size_t i = 0; i < dimension; ++i) {
        const double y0 = 2.0 * rng.normal();
        const double yk = 2.0 * rng.normal();
        const double f = 3.0 * rng.normal();
        const double shifted = card.a * y0 + card.b * yk + card.c * f - f;
        const double plain = ddpm.data * (y0 - f) + ddpm.state * (yk - f);
        report.posterior_max_abs = std::max(report.posterior_max_abs, std::abs(shifted - plain));
      }
    }
  }

  // (c) The prior's coefficient in m_k - f vanishes for every step.
  for (std::size_t k = 1; k <= k_max; ++k) {
    const auto c = card_posterior_coefficients(k, schedule);
    report.coefficient_max_abs = std::max(report.coefficient_max_abs, std::abs(c.a + c.b + c.c - 1.0));
  }

  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace residiff::diffusion
