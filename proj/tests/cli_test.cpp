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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "residiff/metrics.hpp"

namespace residiff {
namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "residiff");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "residiff_cli_test" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}).code, 0);
  EXPECT_EQ(run({"train", "--help"}).code, 0);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"fly"}).code, 1);
  EXPECT_EQ(run({"train", "--no-such-flag", "1"}).code, 1);
}

TEST(Cli, MissingConfigFileIsUserError) {
  const auto r = run({"train", "--config", temp_dir("cfg") + "/missing.conf"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("not found"), std::string::npos) << r.err;
}

TEST(Cli, InvalidValueNamesTheKey) {
  const auto r = run({"train", "--data", "x.csv", "--lookback", "0"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("lookback"), std::string::npos) << r.err;
}

TEST(Cli, VerifyEquivalence) {
  const auto r = run({"verify-equivalence", "--trials", "10"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("passed: true"), std::string::npos) << r.out;
}

TEST(Cli, DecomposeWritesComponents) {
  const auto dir = temp_dir("decompose");
  ASSERT_EQ(run({"synth", "--length", "200", "--out", dir + "/s.csv"}).code, 0);
  const auto r = run({"decompose", "--data", dir + "/s.csv", "--start", "10", "--length", "48"});
  EXPECT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header, "step,ch0_x,ch0_non,ch0_stat,ch0_noise");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(f, cell, ',')) v.push_back(std::stod(cell));
    ASSERT_EQ(v.size(), 5u);
    EXPECT_NEAR(v[2] + v[3] + v[4], v[1], 1e-9);
    ++rows;
  }
  EXPECT_EQ(rows, 48u);
}

// Noise-free data, tiny model: synth -> train -> eval -> forecast -> plot.
TEST(Cli, EndToEndOnNoiselessSeries) {
  const auto dir = temp_dir("e2e");
  ASSERT_EQ(run({"synth", "--length", "1000", "--sigma", "0", "--out", dir + "/s.csv"}).code, 0);
  {
    std::ofstream conf(dir + "/run.conf");
    conf << "data = " << dir << "/s.csv\nlookback = 48\nhorizon = 24\nhidden = 16\n"
         << "adapter_hidden = 16\nkernel = 5\nmax_epochs = 60\nlearning_rate = 3e-3\n"
         << "patience = 100\nn_samples = 10\neval_stride = 8\nout_dir = " << dir << "/run\n";
  }
  const auto t = run({"train", "--config", dir + "/run.conf"});
  ASSERT_EQ(t.code, 0) << t.err;
  const auto manifest = dir + "/run/model.manifest";
  ASSERT_TRUE(std::filesystem::exists(manifest));
  const auto e = run({"eval", "--manifest", manifest});
  ASSERT_EQ(e.code, 0) << e.err;
  std::ifstream rep(dir + "/run/report.txt");
  std::string text((std::istreambuf_iterator<char>(rep)), {});
  const auto report = metrics::MetricReport::parse(text);
  EXPECT_LE(report.mse, 5e-3);  // untrained is ~1
  const auto f = run({"forecast", "--manifest", manifest, "--window", "3"});
  EXPECT_EQ(f.code, 0) << f.err;
  EXPECT_TRUE(std::filesystem::exists(dir + "/run/forecast_3.csv"));
  const auto p = run({"plot", "--manifest", manifest, "--window", "3", "--out", dir + "/p.svg"});
  EXPECT_EQ(p.code, 0) << p.err;
  EXPECT_TRUE(std::filesystem::exists(dir + "/p.svg"));
  // A shaping key that disagrees with the manifest is rejected.
  const auto bad = run({"eval", "--manifest", manifest, "--lookback", "12"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_EQ(run({"forecast", "--manifest", manifest, "--window", "100000"}).code, 1);
}

}  // namespace
}  // namespace residiff
