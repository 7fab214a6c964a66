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
#include <filesystem>
#include <fstream>

#include "residiff/data.hpp"
#include "residiff/errors.hpp"
#include "residiff/spectral.hpp"

namespace residiff::data {
namespace {

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "residiff_data_test";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

TEST(Csv, ParsesHeaderAndColumns) {
  const auto t = parse_csv("date,a,b\n2020-01-01,1,2\n2020-01-02, 3.5 ,-4e-1\n\n");
  EXPECT_EQ(t.columns, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.dates.size(), 2u);
  EXPECT_EQ(t.values.channels, 2u);
  EXPECT_EQ(t.values.steps, 2u);
  EXPECT_EQ(t.values.at(0, 1), 3.5);
  EXPECT_EQ(t.values.at(1, 1), -0.4);
}

TEST(Csv, RejectsMalformedInput) {
  EXPECT_THROW(parse_csv("time,a\n1,2\n"), ParseError);
  EXPECT_THROW(parse_csv("date,a\nx,abc\n"), ParseError);
  EXPECT_THROW(parse_csv("date,a,b\nx,1\n"), ParseError);
  EXPECT_THROW(parse_csv("date,a\nx,nan\n"), ParseError);
  EXPECT_THROW(parse_csv("date,a\n"), ParseError);
  EXPECT_THROW(parse_csv(""), ParseError);
  EXPECT_THROW(read_csv(temp_path("does_not_exist.csv")), ConfigError);
}

TEST(Csv, WriteReadRoundTripIsExact) {
  Table t;
  t.columns = {"x", "y"};
  t.dates = {"d0", "d1", "d2"};
  t.values = Frame(2, 3);
  t.values.data = {0.1, 1.0 / 3.0, -2e-300, 1e300, 7.0, -0.0};
  const auto path = temp_path("round.csv");
  write_csv(path, t);
  const auto back = read_csv(path);
  EXPECT_EQ(back.values, t.values);
  EXPECT_EQ(back.dates, t.dates);
}

TEST(Splits, ChronologicalFloorLengths) {
  Frame f(1, 1001);
  for (std::size_t t = 0; t < 1001; ++t) f.at(0, t) = double(t);
  const auto s = split_and_standardize(f, {0.7, 0.1});
  EXPECT_EQ(s.train_length, 700u);
  EXPECT_EQ(s.val_length, 100u);
  EXPECT_EQ(s.test_length, 201u);
  // First val value is raw 700 standardized with train statistics.
  EXPECT_NEAR(s.val.at(0, 0) * s.scale.std[0] + s.scale.mean[0], 700.0, 1e-9);
  EXPECT_NEAR(s.test.at(0, 0) * s.scale.std[0] + s.scale.mean[0], 800.0, 1e-9);
}

TEST(Splits, StatisticsComeFromTrainOnly) {
  Frame f(2, 100);
  for (std::size_t t = 0; t < 100; ++t) {
    f.at(0, t) = t < 70 ? std::sin(0.3 * t) : 1000.0;  // val/test wildly different
    f.at(1, t) = 5.0 + (t < 70 ? 0.1 * t : -50.0);
  }
  const auto s = split_and_standardize(f, {});
  const auto direct = fit_scale(f.slice(0, 70));
  EXPECT_EQ(s.scale.mean, direct.mean);
  EXPECT_EQ(s.scale.std, direct.std);
  double mean = 0;
  for (double v : s.train.channel(0)) mean += v / 70;
  EXPECT_NEAR(mean, 0.0, 1e-12);
}

TEST(Splits, ConstantChannelIsClamped) {
  Frame f(1, 50, 3.0);
  const auto s = split_and_standardize(f, {});
  EXPECT_TRUE(s.scale.clamped[0]);
  EXPECT_EQ(s.scale.std[0], 1.0);
  EXPECT_EQ(s.train.at(0, 0), 0.0);
}

TEST(Splits, StoredScaleIsReusedExactly) {
  Frame f(1, 100);
  for (std::size_t t = 0; t < 100; ++t) f.at(0, t) = std::cos(0.1 * t) + 0.01 * t;
  const auto a = split_and_standardize(f, {});
  const auto b = split_and_standardize(f, {}, &a.scale);
  EXPECT_EQ(a.test, b.test);
}

TEST(Splits, RejectsBadRatios) {
  Frame f(1, 100);
  EXPECT_THROW(split_and_standardize(f, {0.0, 0.1}), ConfigError);
  EXPECT_THROW(split_and_standardize(f, {0.9, 0.1}), ConfigError);
}

TEST(Windows, CountMatchesClosedForm) {
  for (std::size_t len : {30u, 31u, 77u}) {
    Frame f(2, len);
    for (std::size_t i = 0; i < f.size(); ++i) f.data[i] = std::sin(0.7 * i);
    const auto w = make_windows(f, {10, 5, 1, 1, 1});
    EXPECT_EQ(w.size(), len - 10 - 5 + 1);
    EXPECT_EQ(window_count(len, 10, 5), len - 14);
    const auto strided = make_windows(f, {10, 5, 1, 1, 4});
    EXPECT_EQ(strided.size(), (len - 14 + 3) / 4);
  }
  EXPECT_THROW(window_count(14, 10, 5, "test"), ConfigError);
}

TEST(Windows, ContentsAndComponents) {
  Frame f(2, 40);
  for (std::size_t i = 0; i < f.size(); ++i) f.data[i] = std::sin(0.37 * i) + 0.01 * i;
  const WindowOptions o{12, 6, 2, 3, 1};
  const auto w = make_window(f, 5, o);
  EXPECT_EQ(w.x, f.slice(5, 12));
  EXPECT_EQ(w.y, f.slice(17, 6));
  for (std::size_t i = 0; i < w.x.size(); ++i) {
    EXPECT_NEAR(w.x_non.data[i] + w.x_stat.data[i] + w.x_noise.data[i], w.x.data[i], 1e-12);
  }
  const auto dy = spectral::decompose(w.y, 2, 0);
  for (std::size_t i = 0; i < w.y.size(); ++i) EXPECT_NEAR(w.y_non.data[i], dy.non.data[i], 1e-14);
  EXPECT_THROW(make_window(f, 23, o), RangeError);
}

TEST(Synth, DeterministicPerSeed) {
  SynthOptions o;
  o.length = 200;
  o.channels = 3;
  const auto a = synthesize(o), b = synthesize(o);
  EXPECT_EQ(a.table.values, b.table.values);
  o.seed = 1;
  EXPECT_NE(synthesize(o).table.values, a.table.values);
}

TEST(Synth, NoiselessSinusoidIsTheCleanSignal) {
  SynthOptions o;
  o.length = 96;
  o.sigma = 0.0;
  const auto r = synthesize(o);
  EXPECT_EQ(r.table.values, r.clean);
  const double ph = r.phases[0];
  for (std::size_t t = 0; t < 96; t += 17) {
    const double ramp = 2.0 * t / 95.0 - 1.0;
    const double want = std::sin(2 * M_PI * t / 24 + ph) + 0.5 * std::sin(2 * M_PI * t / 48 + 0.5 * ph) +
                        0.02 * ramp;
    EXPECT_NEAR(r.table.values.at(0, t), want, 1e-12);
  }
}

TEST(Synth, Ar1NoiseHasStationaryMoments) {
  SynthOptions o;
  o.kind = "ar1-seasonal";
  o.length = 200000;
  o.sigma = 1.0;
  o.phi = 0.4;
  const auto r = synthesize(o);
  double s = 0, s2 = 0, lag = 0;
  std::vector<double> u(o.length);
  for (std::size_t t = 0; t < o.length; ++t) u[t] = r.table.values.at(0, t) - r.clean.at(0, t);
  for (std::size_t t = 0; t < o.length; ++t) {
    s += u[t];
    s2 += u[t] * u[t];
    if (t) lag += u[t] * u[t - 1];
  }
  const double n = double(o.length), var = s2 / n;
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0 / (1 - 0.16), 0.03);
  EXPECT_NEAR(lag / (n - 1) / var, 0.4, 0.01);
}

TEST(Synth, WritesSidecar) {
  SynthOptions o;
  o.kind = "ar1-seasonal";
  o.length = 50;
  const auto path = temp_path("synth.csv");
  write_synth(path, o);
  std::ifstream meta(path + ".meta");
  std::string all((std::istreambuf_iterator<char>(meta)), {});
  EXPECT_NE(all.find("format_version = 1"), std::string::npos);
  EXPECT_NE(all.find("kind = ar1-seasonal"), std::string::npos);
  EXPECT_NE(all.find("phases = "), std::string::npos);
  EXPECT_EQ(read_csv(path).values.steps, 50u);
}

TEST(Synth, RejectsBadOptions) {
  SynthOptions o;
  o.kind = "walk";
  EXPECT_THROW(synthesize(o), ConfigError);
  o = {};
  o.kind = "ar1-seasonal";
  o.phi = 1.0;
  EXPECT_THROW(synthesize(o), ConfigError);
}

}  // namespace
}  // namespace residiff::data
