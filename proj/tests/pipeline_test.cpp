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
#include <sstream>

#include "residiff/config.hpp"
#include "residiff/errors.hpp"
#include "residiff/forecast.hpp"
#include "residiff/manifest.hpp"
#include "residiff/plot.hpp"
#include "residiff/runner.hpp"
#include "test_util.hpp"

namespace residiff {
namespace {

std::string temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "residiff_pipeline_test" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

// ---------------------------------------------------------------------------
// Manifest

TEST(Manifest, RoundTripPreservesBits) {
  Manifest m;
  m.set("run", "name", "abc");
  m.set_number("run", "x", 0.1);
  m.set_int("run", "n", -42);
  m.set_numbers("scale", "v", {1.0 / 3.0, -1e-300, 5e300});
  auto t = ad::Tensor::from({2, 2}, {1.0 / 7.0, 2.0, -3.5, 1e-17});
  m.put_tensor("w", t);
  const auto back = Manifest::parse(m.to_string());
  EXPECT_EQ(back.get("run", "name"), "abc");
  EXPECT_EQ(back.get_number("run", "x"), 0.1);
  EXPECT_EQ(back.get_int("run", "n"), -42);
  EXPECT_EQ(back.get_numbers("scale", "v"), (std::vector<double>{1.0 / 3.0, -1e-300, 5e300}));
  auto u = ad::Tensor::zeros({2, 2});
  back.load_tensor("w", u);
  EXPECT_TRUE(std::equal(u.values().begin(), u.values().end(), t.values().begin()));
  auto wrong = ad::Tensor::zeros({4});
  EXPECT_THROW(back.load_tensor("w", wrong), CompatibilityError);
  EXPECT_EQ(m.to_string().rfind("format_version = 1\n", 0), 0u);
}

TEST(Manifest, ErrorsAreTyped) {
  Manifest m;
  EXPECT_THROW(m.get("none", "x"), CompatibilityError);
  EXPECT_THROW(Manifest::parse("format_version = 1\nkey_without_section = 1\n"), ParseError);
  EXPECT_THROW(Manifest::parse("format_version = 2\n"), CompatibilityError);
  EXPECT_THROW(Manifest::load(temp_dir("missing") + "/nope.manifest"), ConfigError);
  EXPECT_THROW(parse_double("1.5x", "v"), ParseError);
  EXPECT_THROW(parse_int("2.0", "v"), ParseError);
}

// ---------------------------------------------------------------------------
// Config

TEST(Config, FileValuesAndComments) {
  config::RunConfig c;
  config::apply_text(c, "# comment\nlookback = 36  # trailing\nbackbone = mlp\nper_channel = true\n",
                     "t.conf");
  EXPECT_EQ(c.lookback, 36u);
  EXPECT_EQ(c.backbone, "mlp");
  EXPECT_TRUE(c.per_channel);
  EXPECT_THROW(config::apply_text(c, "bogus = 1\n", "t.conf"), ConfigError);
  EXPECT_THROW(config::apply_text(c, "lookback = ten\n", "t.conf"), ParseError);
  EXPECT_THROW(config::apply_text(c, "lookback 10\n", "t.conf"), ParseError);
  EXPECT_THROW(config::load_file(temp_dir("cfg") + "/missing.conf"), ConfigError);
}

TEST(Config, TextRoundTrip) {
  config::RunConfig c;
  c.learning_rate = 3e-4;
  c.data = "x.csv";
  c.dump_ensembles = true;
  config::RunConfig d;
  config::apply_text(d, config::to_text(c), "mem");
  EXPECT_EQ(config::to_text(d), config::to_text(c));
  Manifest m;
  c.save(m);
  EXPECT_EQ(config::to_text(config::RunConfig::load(m)), config::to_text(c));
}

TEST(Config, ValidationNamesTheKey) {
  auto expect_key = [](config::RunConfig c, const std::string& key) {
    try {
      c.validate();
      ADD_FAILURE() << "no error for " << key;
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
    }
  };
  config::RunConfig c;
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.hidden = 7;
  expect_key(bad, "hidden");
  bad = c;
  bad.kernel = 24;
  expect_key(bad, "kernel");
  bad = c;
  bad.k1 = 40;
  bad.k2 = 40;
  expect_key(bad, "k2");
  bad = c;
  bad.sampling_steps = 2000;
  expect_key(bad, "sampling_steps");
  bad = c;
  bad.backbone = "rnn";
  expect_key(bad, "backbone");
  bad = c;
  bad.train_ratio = 0.95;
  expect_key(bad, "val_ratio");
}

TEST(Config, EveryKeyIsListedOnce) {
  std::set<std::string> names;
  for (const auto& k : config::keys()) EXPECT_TRUE(names.insert(k.name).second) << k.name;
  EXPECT_NE(config::find_key("ddim_eta"), nullptr);
  EXPECT_EQ(config::find_key("nope"), nullptr);
}

// ---------------------------------------------------------------------------
// Forecast and evaluation

nets::ModelConfig tiny_model() {
  nets::ModelConfig c;
  c.lookback = 16;
  c.horizon = 8;
  c.channels = 2;
  c.adapter_hidden = 6;
  c.denoiser_hidden = 8;
  c.kernel = 5;
  c.diffusion_steps = 100;
  return c;
}

Frame wave(std::size_t channels, std::size_t steps) {
  Frame f(channels, steps);
  for (std::size_t i = 0; i < f.size(); ++i) f.data[i] = std::sin(0.3 * i) + 0.1 * std::cos(1.7 * i);
  return f;
}

TEST(Forecast, FreshDenoiserGivesPointEnsembleAtEtaZero) {
  nets::Model m(tiny_model());
  const auto sched = diffusion::NoiseSchedule::linear(100);
  const auto e = pipeline::forecast(m, sched, wave(2, 16), {10, 0.0, 5, 0});
  // Zero denoiser: r0_hat = 0 at every step, final step returns it.
  for (std::size_t n = 0; n < 5; ++n)
    for (std::size_t j = 0; j < 16; ++j) EXPECT_EQ(e.sample(n)[j], e.point.data[j]);
  const auto bands = pipeline::ensemble_bands(e, 1);
  for (std::size_t t = 0; t < 8; ++t) {
    EXPECT_EQ(bands.p05[t], bands.median[t]);
    EXPECT_EQ(bands.p95[t], bands.median[t]);
  }
}

TEST(Forecast, StreamsDependOnlyOnSeedWindowAndSample) {
  nets::Model m(tiny_model());
  Rng rng(40);
  testing::randomize(m.denoiser, rng, 0.2);
  const auto sched = diffusion::NoiseSchedule::linear(100);
  const Frame x = wave(2, 16);
  const auto a = pipeline::forecast(m, sched, x, {10, 1.0, 6, 3}, 7);
  const auto b = pipeline::forecast(m, sched, x, {10, 1.0, 6, 3}, 7);
  EXPECT_EQ(a.samples, b.samples);
  // A larger ensemble extends, rather than reshuffles, the smaller one.
  const auto c = pipeline::forecast(m, sched, x, {10, 1.0, 9, 3}, 7);
  EXPECT_TRUE(std::equal(a.samples.begin(), a.samples.end(), c.samples.begin()));
  const auto d = pipeline::forecast(m, sched, x, {10, 1.0, 6, 3}, 8);
  EXPECT_NE(a.samples, d.samples);
  // Spread is real: samples differ from one another.
  EXPECT_NE(std::vector<double>(a.sample(0).begin(), a.sample(0).end()),
            std::vector<double>(a.sample(1).begin(), a.sample(1).end()));
}

TEST(Forecast, EtaZeroIsBitDeterministic) {
  nets::Model m(tiny_model());
  Rng rng(41);
  testing::randomize(m.denoiser, rng, 0.2);
  const auto sched = diffusion::NoiseSchedule::linear(100);
  const auto a = pipeline::forecast(m, sched, wave(2, 16), {10, 0.0, 4, 0});
  const auto b = pipeline::forecast(m, sched, wave(2, 16), {10, 0.0, 4, 0});
  EXPECT_EQ(a.samples, b.samples);
}

TEST(Forecast, RejectsIncompatibleInputs) {
  nets::Model m(tiny_model());
  const auto sched = diffusion::NoiseSchedule::linear(100);
  EXPECT_THROW(pipeline::forecast(m, sched, wave(2, 15), {}), CompatibilityError);
  EXPECT_THROW(pipeline::forecast(m, diffusion::NoiseSchedule::linear(50), wave(2, 16), {}),
               CompatibilityError);
}

TEST(Evaluate, StrideAndDumps) {
  nets::Model m(tiny_model());
  const auto sched = diffusion::NoiseSchedule::linear(100);
  pipeline::EvalOptions o;
  o.sampler = {10, 1.0, 10, 0};
  o.stride = 3;
  o.dump_dir = temp_dir("dumps");
  const auto r = pipeline::evaluate(m, sched, wave(2, 40), o);
  EXPECT_EQ(r.windows, (40u - 24u + 1u + 2u) / 3u);
  EXPECT_TRUE(std::filesystem::exists(o.dump_dir + "/window_0.csv"));
  EXPECT_TRUE(std::filesystem::exists(o.dump_dir + "/window_15.csv"));
  std::ifstream f(o.dump_dir + "/window_3.csv");
  std::string comment, header, row;
  std::getline(f, comment);
  std::getline(f, header);
  EXPECT_EQ(comment[0], '#');
  EXPECT_EQ(header.substr(0, 12), "c0_s0,c0_s1,");
  std::size_t rows = 0;
  while (std::getline(f, row)) ++rows;
  EXPECT_EQ(rows, 10u);
}

// ---------------------------------------------------------------------------
// Plot

// Minimal well-formedness: declaration, balanced tags, single root.
bool balanced_xml(const std::string& s) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  bool root_closed = false;
  while ((i = s.find('<', i)) != std::string::npos) {
    const auto j = s.find('>', i);
    if (j == std::string::npos) return false;
    std::string tag = s.substr(i + 1, j - i - 1);
    i = j + 1;
    if (tag.empty() || tag[0] == '?' || tag[0] == '!') continue;
    if (root_closed) return false;
    if (tag.back() == '/') continue;
    if (tag[0] == '/') {
      const std::string name = tag.substr(1);
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
      if (stack.empty()) root_closed = true;
      continue;
    }
    stack.push_back(tag.substr(0, tag.find_first_of(" \t\n")));
  }
  return stack.empty() && root_closed;
}

TEST(Plot, SvgIsWellFormedWithBands) {
  nets::Model m(tiny_model());
  Rng rng(42);
  testing::randomize(m.denoiser, rng, 0.2);
  const auto sched = diffusion::NoiseSchedule::linear(100);
  const Frame x = wave(2, 16);
  const auto e = pipeline::forecast(m, sched, x, {10, 1.0, 50, 0});
  const std::vector<double> truth(8, 0.5);
  const auto svg = pipeline::render_svg(e, 0, x.channel(0), truth, "a < b & c");
  EXPECT_TRUE(balanced_xml(svg));
  EXPECT_NE(svg.find("class=\"band90\""), std::string::npos);
  EXPECT_NE(svg.find("class=\"band50\""), std::string::npos);
  EXPECT_NE(svg.find("class=\"median\""), std::string::npos);
  EXPECT_NE(svg.find("class=\"truth\""), std::string::npos);
  EXPECT_NE(svg.find("a &lt; b &amp; c"), std::string::npos);
  const auto b = pipeline::ensemble_bands(e, 0);
  for (std::size_t t = 0; t < 8; ++t) {
    EXPECT_LE(b.p05[t], b.p25[t]);
    EXPECT_LE(b.p25[t], b.median[t]);
    EXPECT_LE(b.median[t], b.p75[t]);
    EXPECT_LE(b.p75[t], b.p95[t]);
  }
}

// ---------------------------------------------------------------------------
// Runner

TEST(Runner, TrainSaveLoadEvaluate) {
  const auto dir = temp_dir("runner");
  data::SynthOptions so;
  so.length = 500;
  so.channels = 2;
  data::write_synth(dir + "/s.csv", so);
  config::RunConfig c;
  c.data = dir + "/s.csv";
  c.lookback = 24;
  c.horizon = 12;
  c.hidden = 8;
  c.adapter_hidden = 8;
  c.diffusion_steps = 100;
  c.finetune_step = 10;
  c.kernel = 5;
  c.max_epochs = 3;
  c.n_samples = 8;
  c.qice_bins = 4;
  c.eval_stride = 5;
  c.out_dir = dir + "/out";
  const auto run = pipeline::run_training(c);
  EXPECT_EQ(run.result.history.size(), 3u);
  EXPECT_TRUE(std::filesystem::exists(run.manifest_path));
  EXPECT_TRUE(std::filesystem::exists(run.history_path));

  const auto loaded = pipeline::load_run(run.manifest_path);
  EXPECT_EQ(config::to_text(loaded.config), config::to_text(c));
  const auto splits = pipeline::load_splits(loaded);
  const auto table = data::read_csv(c.data);
  const auto fresh = data::split_and_standardize(table.values, c.split_ratios());
  EXPECT_EQ(splits.test, fresh.test);

  const auto a = pipeline::run_evaluation(loaded, c);
  const auto b = pipeline::run_evaluation(loaded, c);
  EXPECT_EQ(a.result.report.to_text(), b.result.report.to_text());
  EXPECT_TRUE(std::filesystem::exists(a.report_path));

  auto other = c;
  other.lookback = 30;
  EXPECT_THROW(pipeline::check_compatible(loaded.config, other), CompatibilityError);
  other = c;
  other.n_samples = 3;  // sampling keys may differ
  EXPECT_NO_THROW(pipeline::check_compatible(loaded.config, other));
}

TEST(Runner, ShortSplitFailsBeforeTraining) {
  const auto dir = temp_dir("short");
  data::SynthOptions so;
  so.length = 100;
  data::write_synth(dir + "/s.csv", so);
  config::RunConfig c;
  c.data = dir + "/s.csv";
  c.lookback = 24;
  c.horizon = 12;
  c.out_dir = dir + "/out";
  EXPECT_THROW(pipeline::run_training(c), ConfigError);
  EXPECT_FALSE(std::filesystem::exists(c.out_dir));
}

}  // namespace
}  // namespace residiff
