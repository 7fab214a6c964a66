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

#include "residiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "residiff/errors.hpp"
#include "residiff/manifest.hpp"

namespace residiff::metrics {
namespace {

void check_ensemble(std::span<const double> samples, std::size_t n_samples,
                    std::span<const double> truth, const char* who) {
  if (n_samples == 0) throw ContractError(std::string(who) + ": empty ensemble");
  if (samples.size() != n_samples * truth.size()) {
    throw DimensionError(std::string(who) + ": " + std::to_string(samples.size()) +
                         " sample values for " + std::to_string(n_samples) + " x " +
                         std::to_string(truth.size()) + " cells");
  }
}

// Sample values of one cell, ascending.
void cell_sorted(std::span<const double> samples, std::size_t n_samples, std::size_t cells,
                 std::size_t cell, std::vector<double>& out) {
  out.resize(n_samples);
  for (std::size_t n = 0; n < n_samples; ++n) out[n] = samples[n * cells + cell];
  std::sort(out.begin(), out.end());
}

double crps_sorted(std::span<const double> sorted, double y) {
  const std::size_t n = sorted.size();
  // A point ensemble scores exactly its absolute error.
  if (sorted.front() == sorted.back()) return std::abs(sorted.front() - y);
  double abs_err = 0.0, spread = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    abs_err += std::abs(sorted[i] - y);
    spread += sorted[i] * (2.0 * static_cast<double>(i) - static_cast<double>(n) + 1.0);
  }
  const double nd = static_cast<double>(n);
  return abs_err / nd - spread / (nd * nd);
}

bool in_interval(std::span<const double> sorted, double y, double lo, double hi) {
  return y >= quantile_sorted(sorted, lo) && y <= quantile_sorted(sorted, hi);
}

// Bin (0..M-1) of `y` among the M+1 quantiles 0, 1/M, ..., 1.
std::size_t qice_bin(std::span<const double> sorted, double y, std::size_t bins) {
  std::size_t above = 0;
  for (std::size_t j = 0; j <= bins; ++j) {
    const double q = quantile_sorted(sorted, static_cast<double>(j) / static_cast<double>(bins));
    if (y - q > 0.0) ++above;
  }
  return std::clamp<std::size_t>(above, 1, bins) - 1;
}

double qice_from_counts(const std::vector<double>& counts, double total) {
  const double m = static_cast<double>(counts.size());
  double acc = 0.0;
  for (double c : counts) acc += std::abs(c / total - 1.0 / m);
  return acc / m;
}

}  // namespace

PointErrors mse_mae(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) {
    throw DimensionError("mse_mae: prediction has " + std::to_string(pred.size()) +
                         " values, truth " + std::to_string(truth.size()));
  }
  if (pred.empty()) throw DimensionError("mse_mae: empty input");
  PointErrors e;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    e.mse += d * d;
    e.mae += std::abs(d);
  }
  e.mse /= static_cast<double>(pred.size());
  e.mae /= static_cast<double>(pred.size());
  return e;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ContractError("quantile of an empty ensemble");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double crps_empirical(std::span<const double> samples, double y) {
  if (samples.empty()) throw ContractError("crps: empty ensemble");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  return crps_sorted(sorted, y);
}

std::vector<double> ensemble_median(std::span<const double> samples, std::size_t n_samples,
                                    std::size_t cells) {
  if (n_samples == 0) throw ContractError("median: empty ensemble");
  if (samples.size() != n_samples * cells) throw DimensionError("median: ensemble size mismatch");
  std::vector<double> out(cells), buf;
  for (std::size_t i = 0; i < cells; ++i) {
    cell_sorted(samples, n_samples, cells, i, buf);
    out[i] = quantile_sorted(buf, 0.5);
  }
  return out;
}

double crps_mean(std::span<const double> samples, std::size_t n_samples,
                 std::span<const double> truth) {
  check_ensemble(samples, n_samples, truth, "crps");
  std::vector<double> buf;
  double acc = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    cell_sorted(samples, n_samples, truth.size(), i, buf);
    acc += crps_sorted(buf, truth[i]);
  }
  return acc / static_cast<double>(truth.size());
}

CrpsSum crps_sum(std::span<const double> samples, std::size_t n_samples,
                 std::span<const double> truth, std::size_t channels, std::size_t steps) {
  check_ensemble(samples, n_samples, truth, "crps_sum");
  if (channels * steps != truth.size()) throw DimensionError("crps_sum: layout mismatch");
  std::vector<double> summed(n_samples);
  double raw = 0.0, denom = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    double y = 0.0;
    for (std::size_t c = 0; c < channels; ++c) y += truth[c * steps + t];
    for (std::size_t n = 0; n < n_samples; ++n) {
      double s = 0.0;
      for (std::size_t c = 0; c < channels; ++c) s += samples[n * truth.size() + c * steps + t];
      summed[n] = s;
    }
    raw += crps_empirical(summed, y);
    denom += std::abs(y);
  }
  CrpsSum out;
  out.raw = raw / static_cast<double>(steps);
  const double scale = denom / static_cast<double>(steps);
  out.normalized = scale > 0.0 ? out.raw / scale
                               : (out.raw == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  return out;
}

double picp(std::span<const double> samples, std::size_t n_samples, std::span<const double> truth,
            double lo, double hi) {
  check_ensemble(samples, n_samples, truth, "picp");
  if (n_samples < 2) throw ContractError("picp needs at least 2 samples per cell");
  if (!(lo >= 0.0 && lo <= hi && hi <= 1.0)) throw ConfigError("picp: need 0 <= lo <= hi <= 1");
  std::vector<double> buf;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    cell_sorted(samples, n_samples, truth.size(), i, buf);
    if (in_interval(buf, truth[i], lo, hi)) ++inside;
  }
  return 100.0 * static_cast<double>(inside) / static_cast<double>(truth.size());
}

double qice(std::span<const double> samples, std::size_t n_samples, std::span<const double> truth,
            std::size_t bins) {
  check_ensemble(samples, n_samples, truth, "qice");
  if (bins < 1) throw ConfigError("qice needs at least one bin");
  if (n_samples < bins) {
    throw ContractError("qice with " + std::to_string(bins) + " bins needs at least " +
                        std::to_string(bins) + " samples per cell, got " +
                        std::to_string(n_samples));
  }
  std::vector<double> buf, counts(bins, 0.0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    cell_sorted(samples, n_samples, truth.size(), i, buf);
    counts[qice_bin(buf, truth[i], bins)] += 1.0;
  }
  return qice_from_counts(counts, static_cast<double>(truth.size()));
}

// ---------------------------------------------------------------------------

std::string MetricReport::to_text() const {
  std::ostringstream out;
  out << "format_version: 1\n"
      << "mse: " << format_double(mse) << '\n'
      << "mae: " << format_double(mae) << '\n'
      << "crps: " << format_double(crps) << '\n'
      << "crps_sum: " << format_double(crps_sum) << '\n'
      << "crps_sum_raw: " << format_double(crps_sum_raw) << '\n'
      << "picp: " << format_double(picp) << '\n'
      << "qice: " << format_double(qice) << '\n'
      << "n_samples: " << n_samples << '\n'
      << "m_bins: " << m_bins << '\n';
  return out.str();
}

MetricReport MetricReport::parse(const std::string& text) {
  MetricReport r;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = line.substr(0, colon);
    const std::string value = line.substr(colon + 1);
    const std::string what = "report key '" + key + "'";
    if (key == "format_version") {
      if (parse_int(value, what) != 1) throw CompatibilityError("unsupported report version");
    } else if (key == "mse") {
      r.mse = parse_double(value, what);
    } else if (key == "mae") {
      r.mae = parse_double(value, what);
    } else if (key == "crps") {
      r.crps = parse_double(value, what);
    } else if (key == "crps_sum") {
      r.crps_sum = parse_double(value, what);
    } else if (key == "crps_sum_raw") {
      r.crps_sum_raw = parse_double(value, what);
    } else if (key == "picp") {
      r.picp = parse_double(value, what);
    } else if (key == "qice") {
      r.qice = parse_double(value, what);
    } else if (key == "n_samples") {
      r.n_samples = static_cast<std::size_t>(parse_int(value, what));
    } else if (key == "m_bins") {
      r.m_bins = static_cast<std::size_t>(parse_int(value, what));
    } else {
      throw ParseError("unknown report key '" + key + "'");
    }
  }
  return r;
}

MetricAccumulator::MetricAccumulator(std::size_t n_samples, std::size_t bins)
    : n_samples_(n_samples), bins_(bins), bin_counts_(bins, 0.0) {
  if (n_samples == 0) throw ContractError("metrics: empty ensemble");
  if (bins == 0) throw ConfigError("qice needs at least one bin");
}

void MetricAccumulator::add(std::span<const double> samples, std::span<const double> truth,
                            std::size_t channels, std::size_t steps) {
  check_ensemble(samples, n_samples_, truth, "metrics");
  if (channels * steps != truth.size()) throw DimensionError("metrics: layout mismatch");
  const std::size_t cells = truth.size();
  std::vector<double> buf;
  for (std::size_t i = 0; i < cells; ++i) {
    cell_sorted(samples, n_samples_, cells, i, buf);
    const double median = quantile_sorted(buf, 0.5);
    const double d = median - truth[i];
    se_ += d * d;
    ae_ += std::abs(d);
    crps_ += crps_sorted(buf, truth[i]);
    if (n_samples_ >= 2 && in_interval(buf, truth[i], 0.025, 0.975)) covered_ += 1.0;
    if (n_samples_ >= bins_) bin_counts_[qice_bin(buf, truth[i], bins_)] += 1.0;
  }
  const auto cs = crps_sum(samples, n_samples_, truth, channels, steps);
  crps_sum_raw_ += cs.raw * static_cast<double>(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    double y = 0.0;
    for (std::size_t c = 0; c < channels; ++c) y += truth[c * steps + t];
    abs_sum_truth_ += std::abs(y);
  }
  cells_ += cells;
  sum_steps_ += steps;
  ++windows_;
}

MetricReport MetricAccumulator::report() const {
  if (cells_ == 0) throw ContractError("metrics: no windows accumulated");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double cells = static_cast<double>(cells_);
  MetricReport r;
  r.mse = se_ / cells;
  r.mae = ae_ / cells;
  r.crps = crps_ / cells;
  r.crps_sum_raw = crps_sum_raw_ / static_cast<double>(sum_steps_);
  r.crps_sum = abs_sum_truth_ > 0.0 ? crps_sum_raw_ / abs_sum_truth_
                                    : (crps_sum_raw_ == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  r.picp = n_samples_ >= 2 ? 100.0 * covered_ / cells : nan;
  r.qice = n_samples_ >= bins_ ? qice_from_counts(bin_counts_, cells) : nan;
  r.n_samples = n_samples_;
  r.m_bins = bins_;
  return r;
}

}  // namespace residiff::metrics
