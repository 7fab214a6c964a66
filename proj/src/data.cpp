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

#include "residiff/data.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "residiff/errors.hpp"
#include "residiff/manifest.hpp"
#include "residiff/rng.hpp"
#include "residiff/spectral.hpp"

namespace residiff::data {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

// Hourly timestamps from 2000-01-01 00:00.
std::string timestamp(std::size_t hour_index) {
  using namespace std::chrono;
  const sys_days day = sys_days{year{2000} / January / 1} + days{hour_index / 24};
  const year_month_day ymd{day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02zu:00:00", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                hour_index % 24);
  return buf;
}

}  // namespace

Table parse_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  Table table;
  std::vector<std::vector<double>> rows;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (!header) {
      if (fields.empty() || fields[0] != "date") {
        throw ParseError(source + ": header must start with a 'date' column");
      }
      if (fields.size() < 2) throw ParseError(source + ": no value columns after 'date'");
      table.columns.assign(fields.begin() + 1, fields.end());
      header = true;
      continue;
    }
    if (fields.size() != table.columns.size() + 1) {
      throw ParseError(source + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(table.columns.size() + 1) + " fields, found " +
                       std::to_string(fields.size()));
    }
    table.dates.push_back(fields[0]);
    std::vector<double> row(table.columns.size());
    for (std::size_t c = 0; c < row.size(); ++c) {
      row[c] = parse_double(fields[c + 1], source + ":" + std::to_string(line_no) +
                                               " column '" + table.columns[c] + "'");
      if (!std::isfinite(row[c])) {
        throw ParseError(source + ":" + std::to_string(line_no) + ": non-finite value in column '" +
                         table.columns[c] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (!header) throw ParseError(source + ": empty file");
  if (rows.empty()) throw ParseError(source + ": no data rows");
  table.values = Frame(table.columns.size(), rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t)
    for (std::size_t c = 0; c < table.columns.size(); ++c) table.values.at(c, t) = rows[t][c];
  return table;
}

Table read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("data file not found: '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), path);
}

void write_csv(const std::string& path, const Table& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << "date";
  for (const auto& c : table.columns) out << ',' << c;
  out << '\n';
  for (std::size_t t = 0; t < table.values.steps; ++t) {
    out << (t < table.dates.size() ? table.dates[t] : std::to_string(t));
    for (std::size_t c = 0; c < table.values.channels; ++c) {
      out << ',' << format_double(table.values.at(c, t));
    }
    out << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------

void ScaleMeta::standardize(Frame& frame) const {
  if (frame.channels != mean.size()) {
    throw CompatibilityError("scale metadata covers " + std::to_string(mean.size()) +
                             " channels, data has " + std::to_string(frame.channels));
  }
  for (std::size_t c = 0; c < frame.channels; ++c)
    for (double& v : frame.channel(c)) v = (v - mean[c]) / std[c];
}

void ScaleMeta::destandardize(Frame& frame) const {
  if (frame.channels != mean.size()) {
    throw CompatibilityError("scale metadata covers " + std::to_string(mean.size()) +
                             " channels, data has " + std::to_string(frame.channels));
  }
  for (std::size_t c = 0; c < frame.channels; ++c)
    for (double& v : frame.channel(c)) v = v * std[c] + mean[c];
}

ScaleMeta fit_scale(const Frame& train) {
  if (train.steps == 0) throw ConfigError("cannot fit scale statistics on an empty split");
  ScaleMeta meta;
  const double n = static_cast<double>(train.steps);
  for (std::size_t c = 0; c < train.channels; ++c) {
    double sum = 0.0;
    for (double v : train.channel(c)) sum += v;
    const double mu = sum / n;
    double ss = 0.0;
    for (double v : train.channel(c)) ss += (v - mu) * (v - mu);
    double sd = std::sqrt(ss / n);
    const bool clamp = !(sd > 1e-12 * std::max(1.0, std::abs(mu)));
    if (clamp) {
      std::cerr << "warning: channel " << c << " is constant on the train split; std set to 1\n";
      sd = 1.0;
    }
    meta.mean.push_back(mu);
    meta.std.push_back(sd);
    meta.clamped.push_back(clamp);
  }
  return meta;
}

Splits split_and_standardize(const Frame& series, const SplitRatios& ratios,
                             const ScaleMeta* scale) {
  if (!(ratios.train > 0.0 && ratios.val >= 0.0 && ratios.train + ratios.val < 1.0)) {
    throw ConfigError("split ratios need train > 0, val >= 0 and train + val < 1");
  }
  const std::size_t n = series.steps;
  Splits s;
  s.train_length = static_cast<std::size_t>(std::floor(ratios.train * static_cast<double>(n)));
  s.val_length = static_cast<std::size_t>(std::floor(ratios.val * static_cast<double>(n)));
  if (s.train_length + s.val_length >= n) throw ConfigError("series too short to split");
  s.test_length = n - s.train_length - s.val_length;
  s.train = series.slice(0, s.train_length);
  s.val = series.slice(s.train_length, s.val_length);
  s.test = series.slice(s.train_length + s.val_length, s.test_length);
  s.scale = scale ? *scale : fit_scale(s.train);
  s.scale.standardize(s.train);
  s.scale.standardize(s.val);
  s.scale.standardize(s.test);
  return s;
}

std::size_t window_count(std::size_t split_length, std::size_t lookback, std::size_t horizon,
                         const std::string& split_name) {
  if (split_length < lookback + horizon) {
    throw ConfigError(split_name + " split has " + std::to_string(split_length) +
                      " steps, fewer than lookback + horizon = " +
                      std::to_string(lookback + horizon));
  }
  return split_length - lookback - horizon + 1;
}

Window make_window(const Frame& split, std::size_t start, const WindowOptions& options) {
  const std::size_t t = options.lookback, s = options.horizon;
  if (start + t + s > split.steps) throw RangeError("window start past the end of the split");
  Window w;
  w.x = split.slice(start, t);
  w.y = split.slice(start + t, s);
  auto dx = spectral::decompose(w.x, options.top, options.bottom);
  w.x_non = std::move(dx.non);
  w.x_stat = std::move(dx.stat);
  w.x_noise = std::move(dx.noise);
  w.y_non = Frame(w.y.channels, s);
  for (std::size_t c = 0; c < w.y.channels; ++c) {
    const auto series = w.y.channel(c);
    const auto spec = spectral::dft_real(series);
    const auto sel = spectral::select_bins(spec, std::min(options.top, spec.bin_count()), 0);
    const auto non = spectral::idft_real(spec, sel.top);
    std::copy(non.begin(), non.end(), w.y_non.channel(c).begin());
  }
  return w;
}

std::vector<Window> make_windows(const Frame& split, const WindowOptions& options,
                                 const std::string& split_name) {
  if (options.stride < 1) throw ConfigError("window stride must be at least 1");
  const std::size_t count = window_count(split.steps, options.lookback, options.horizon, split_name);
  std::vector<Window> out;
  out.reserve((count + options.stride - 1) / options.stride);
  for (std::size_t i = 0; i < count; i += options.stride) {
    out.push_back(make_window(split, i, options));
  }
  return out;
}

// ---------------------------------------------------------------------------

SynthResult synthesize(const SynthOptions& o) {
  if (o.length < 4) throw ConfigError("synth: length must be at least 4");
  if (o.channels < 1) throw ConfigError("synth: need at least one channel");
  if (!(o.sigma >= 0.0)) throw ConfigError("synth: sigma must be non-negative");
  const bool sinusoid = o.kind == "sinusoid-trend";
  const bool ar1 = o.kind == "ar1-seasonal";
  if (!sinusoid && !ar1) {
    throw ConfigError("synth: unknown kind '" + o.kind +
                      "' (expected sinusoid-trend or ar1-seasonal)");
  }
  if (ar1 && !(std::abs(o.phi) < 1.0)) throw ConfigError("synth: |phi| must be below 1");

  const double two_pi = 2.0 * std::numbers::pi;
  SynthResult r;
  r.table.values = Frame(o.channels, o.length);
  r.clean = Frame(o.channels, o.length);
  for (std::size_t c = 0; c < o.channels; ++c) {
    r.table.columns.push_back("ch" + std::to_string(c));
    Rng phase_rng(Rng::derive(o.seed, 1, c));
    const double phase = phase_rng.uniform(0.0, two_pi);
    r.phases.push_back(phase);
    Rng noise_rng(Rng::derive(o.seed, 2, c));
    double u = 0.0;
    if (ar1) u = o.sigma / std::sqrt(1.0 - o.phi * o.phi) * noise_rng.normal();
    for (std::size_t t = 0; t < o.length; ++t) {
      const double td = static_cast<double>(t);
      double clean, noise;
      if (sinusoid) {
        const double ramp = 2.0 * td / static_cast<double>(o.length - 1) - 1.0;
        clean = o.amplitude1 * std::sin(two_pi * td / o.period1 + phase) +
                o.amplitude2 * std::sin(two_pi * td / o.period2 + 0.5 * phase) + o.trend * ramp;
        noise = o.sigma * noise_rng.normal();
      } else {
        clean = o.seasonal_amplitude * std::sin(two_pi * td / o.seasonal_period + phase);
        if (t > 0) u = o.phi * u + o.sigma * noise_rng.normal();
        noise = u;
      }
      r.clean.at(c, t) = clean;
      r.table.values.at(c, t) = clean + noise;
    }
  }
  for (std::size_t t = 0; t < o.length; ++t) r.table.dates.push_back(timestamp(t));

  auto& m = r.meta;
  m.emplace_back("format_version", "1");
  m.emplace_back("kind", o.kind);
  m.emplace_back("length", std::to_string(o.length));
  m.emplace_back("channels", std::to_string(o.channels));
  m.emplace_back("sigma", format_double(o.sigma));
  m.emplace_back("seed", std::to_string(o.seed));
  if (sinusoid) {
    m.emplace_back("amplitude1", format_double(o.amplitude1));
    m.emplace_back("period1", format_double(o.period1));
    m.emplace_back("amplitude2", format_double(o.amplitude2));
    m.emplace_back("period2", format_double(o.period2));
    m.emplace_back("phase2_factor", "0.5");
    m.emplace_back("trend", format_double(o.trend));
  } else {
    m.emplace_back("phi", format_double(o.phi));
    m.emplace_back("seasonal_amplitude", format_double(o.seasonal_amplitude));
    m.emplace_back("seasonal_period", format_double(o.seasonal_period));
  }
  std::string phases;
  for (std::size_t c = 0; c < r.phases.size(); ++c) {
    if (c) phases += ' ';
    phases += format_double(r.phases[c]);
  }
  m.emplace_back("phases", phases);
  return r;
}

SynthResult write_synth(const std::string& path, const SynthOptions& options) {
  auto r = synthesize(options);
  write_csv(path, r.table);
  std::ofstream meta(path + ".meta", std::ios::binary);
  if (!meta) throw Error("cannot write '" + path + ".meta'");
  for (const auto& [k, v] : r.meta) meta << k << " = " << v << '\n';
  if (!meta) throw Error("failed writing '" + path + ".meta'");
  return r;
}

}  // namespace residiff::data
