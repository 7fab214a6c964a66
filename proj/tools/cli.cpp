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

#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "residiff/config.hpp"
#include "residiff/data.hpp"
#include "residiff/diffusion.hpp"
#include "residiff/errors.hpp"
#include "residiff/manifest.hpp"
#include "residiff/plot.hpp"
#include "residiff/runner.hpp"
#include "residiff/simd/kernels.hpp"
#include "residiff/spectral.hpp"

namespace residiff::cli {
namespace {

// Every run-config key becomes a --key flag (dashes accepted too).
struct KeyFlags {
  std::optional<std::string> config_path;
  std::map<std::string, std::string> values;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "key = value run configuration file");
    for (const auto& key : config::keys()) {
      std::string names = "--" + key.name;
      std::string dashed = key.name;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != key.name) names += ",--" + dashed;
      app.add_option(names, values[key.name], key.help);
    }
  }

  // File first, then flags.
  void apply(CLI::App& app, config::RunConfig& cfg) const {
    if (config_path) config::apply_file(cfg, *config_path);
    for (const auto& key : config::keys()) {
      if (app.count("--" + key.name) > 0) key.set(cfg, values.at(key.name));
    }
  }
};

std::string manifest_for(const config::RunConfig& cfg, const std::string& explicit_path) {
  return explicit_path.empty() ? cfg.out_dir + "/model.manifest" : explicit_path;
}

// Stored run config, then --config, then flags. The manifest is located
// from --manifest or from out_dir after the overrides.
pipeline::LoadedRun load_for_inference(CLI::App& app, const KeyFlags& flags,
                                       const std::string& manifest_path,
                                       config::RunConfig& requested) {
  config::RunConfig probe;
  flags.apply(app, probe);
  auto run = pipeline::load_run(manifest_for(probe, manifest_path));
  requested = run.config;
  flags.apply(app, requested);
  requested.validate();
  pipeline::check_compatible(run.config, requested);
  return run;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Residual diffusion forecasting toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "residiff 1.0");

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset and its .meta sidecar");
  data::SynthOptions so;
  std::string synth_out;
  synth->add_option("--kind", so.kind, "sinusoid-trend or ar1-seasonal")->capture_default_str();
  synth->add_option("--length", so.length, "number of steps")->capture_default_str();
  synth->add_option("--channels", so.channels, "number of channels")->capture_default_str();
  synth->add_option("--sigma", so.sigma, "noise level")->capture_default_str();
  synth->add_option("--seed", so.seed, "random seed")->capture_default_str();
  synth->add_option("--phi", so.phi, "ar1-seasonal: AR coefficient")->capture_default_str();
  synth->add_option("--seasonal-amplitude", so.seasonal_amplitude, "ar1-seasonal: amplitude")
      ->capture_default_str();
  synth->add_option("--seasonal-period", so.seasonal_period, "ar1-seasonal: period")
      ->capture_default_str();
  synth->add_option("--amplitude1", so.amplitude1, "sinusoid-trend: first amplitude")
      ->capture_default_str();
  synth->add_option("--period1", so.period1, "sinusoid-trend: first period")->capture_default_str();
  synth->add_option("--amplitude2", so.amplitude2, "sinusoid-trend: second amplitude")
      ->capture_default_str();
  synth->add_option("--period2", so.period2, "sinusoid-trend: second period")
      ->capture_default_str();
  synth->add_option("--trend", so.trend, "sinusoid-trend: ramp half-range")->capture_default_str();
  synth->add_option("--out", synth_out, "output CSV")->required();

  // decompose
  auto* decompose = app.add_subcommand("decompose", "dump one window's three Fourier components");
  std::string dec_data, dec_out;
  std::size_t dec_start = 0, dec_length = 96, dec_k1 = 2, dec_k2 = 2;
  decompose->add_option("--data", dec_data, "input CSV")->required();
  decompose->add_option("--start", dec_start, "first step of the window")->capture_default_str();
  decompose->add_option("--length", dec_length, "window length")->capture_default_str();
  decompose->add_option("--k1", dec_k1, "top-amplitude bins")->capture_default_str();
  decompose->add_option("--k2", dec_k2, "bottom-amplitude bins")->capture_default_str();
  decompose->add_option("--out", dec_out, "output file (default: stdout)");

  // train
  auto* train = app.add_subcommand("train", "train a model and write <out_dir>/model.manifest");
  KeyFlags train_flags;
  train_flags.attach(*train);

  // forecast
  auto* forecast = app.add_subcommand("forecast", "sample an ensemble for one test window");
  KeyFlags forecast_flags;
  forecast_flags.attach(*forecast);
  std::string fc_manifest, fc_out;
  std::size_t fc_window = 0;
  forecast->add_option("--manifest", fc_manifest, "trained manifest (default <out_dir>/model.manifest)");
  forecast->add_option("--window", fc_window, "test window index")->capture_default_str();
  forecast->add_option("--out", fc_out, "ensemble CSV (default <out_dir>/forecast_<window>.csv)");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate on the test split and write report.txt");
  KeyFlags eval_flags;
  eval_flags.attach(*eval);
  std::string ev_manifest;
  eval->add_option("--manifest", ev_manifest, "trained manifest (default <out_dir>/model.manifest)");

  // verify-equivalence
  auto* verify = app.add_subcommand("verify-equivalence",
                                    "check that the prior-shifted chain matches plain DDPM on the residual");
  std::size_t v_steps = 1000, v_trials = 100, v_dim = 16;
  std::uint64_t v_seed = 0;
  verify->add_option("--steps", v_steps, "diffusion steps K")->capture_default_str();
  verify->add_option("--trials", v_trials, "random problems")->capture_default_str();
  verify->add_option("--dimension", v_dim, "elements per problem")->capture_default_str();
  verify->add_option("--seed", v_seed, "random seed")->capture_default_str();

  // plot
  auto* plot = app.add_subcommand("plot", "render one test window's forecast as SVG");
  KeyFlags plot_flags;
  plot_flags.attach(*plot);
  std::string pl_manifest, pl_out;
  std::size_t pl_window = 0, pl_channel = 0;
  plot->add_option("--manifest", pl_manifest, "trained manifest (default <out_dir>/model.manifest)");
  plot->add_option("--window", pl_window, "test window index")->capture_default_str();
  plot->add_option("--channel", pl_channel, "channel to draw")->capture_default_str();
  plot->add_option("--out", pl_out, "output SVG (default <out_dir>/forecast_<window>.svg)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    const CLI::App* active = &app;
    for (auto* sub : app.get_subcommands()) active = sub;
    err << active->help();
    return 1;
  }

  try {
    if (synth->parsed()) {
      const auto r = data::write_synth(synth_out, so);
      out << "wrote " << synth_out << " (" << r.table.values.steps << " steps, "
          << r.table.values.channels << " channels) and " << synth_out << ".meta\n";
    } else if (decompose->parsed()) {
      const auto table = data::read_csv(dec_data);
      if (dec_start + dec_length > table.values.steps) {
        throw ConfigError("decompose: window [" + std::to_string(dec_start) + ", " +
                          std::to_string(dec_start + dec_length) + ") exceeds the " +
                          std::to_string(table.values.steps) + "-step series");
      }
      const Frame x = table.values.slice(dec_start, dec_length);
      const auto parts = spectral::decompose(x, dec_k1, dec_k2);
      std::ofstream file;
      std::ostream* dst = &out;
      if (!dec_out.empty()) {
        file.open(dec_out, std::ios::binary);
        if (!file) throw Error("cannot write '" + dec_out + "'");
        dst = &file;
      }
      *dst << "step";
      for (const auto& name : table.columns) {
        *dst << ',' << name << "_x," << name << "_non," << name << "_stat," << name << "_noise";
      }
      *dst << '\n';
      for (std::size_t t = 0; t < dec_length; ++t) {
        *dst << dec_start + t;
        for (std::size_t c = 0; c < x.channels; ++c) {
          *dst << ',' << format_double(x.at(c, t)) << ',' << format_double(parts.non.at(c, t))
               << ',' << format_double(parts.stat.at(c, t)) << ','
               << format_double(parts.noise.at(c, t));
        }
        *dst << '\n';
      }
    } else if (train->parsed()) {
      config::RunConfig cfg;
      train_flags.apply(*train, cfg);
      cfg.validate();
      const auto run = pipeline::run_training(cfg, &err);
      out << "kernels: " << simd::isa_name(simd::active().isa) << '\n'
          << "epochs: " << run.result.history.size() << '\n'
          << "best_epoch: " << run.result.best_epoch << '\n'
          << "best_val_point: " << format_double(run.result.best_val_point) << '\n'
          << "manifest: " << run.manifest_path << '\n'
          << "history: " << run.history_path << '\n';
    } else if (forecast->parsed()) {
      config::RunConfig cfg;
      const auto run = load_for_inference(*forecast, forecast_flags, fc_manifest, cfg);
      const auto splits = pipeline::load_splits(run);
      const auto& mc = run.model.config;
      const std::size_t count = data::window_count(splits.test.steps, mc.lookback, mc.horizon, "test");
      if (fc_window >= count) {
        throw ConfigError("forecast: window " + std::to_string(fc_window) + " outside the " +
                          std::to_string(count) + " test windows");
      }
      const auto schedule = diffusion::NoiseSchedule::linear(mc.diffusion_steps);
      const auto ens = pipeline::forecast(run.model, schedule, splits.test.slice(fc_window, mc.lookback),
                                          pipeline::sampler_options(cfg), fc_window);
      std::filesystem::create_directories(cfg.out_dir);
      const std::string path =
          fc_out.empty() ? cfg.out_dir + "/forecast_" + std::to_string(fc_window) + ".csv" : fc_out;
      pipeline::write_ensemble(path, ens);
      out << "wrote " << path << " (" << ens.n_samples << " samples)\n";
    } else if (eval->parsed()) {
      config::RunConfig cfg;
      const auto run = load_for_inference(*eval, eval_flags, ev_manifest, cfg);
      const auto result = pipeline::run_evaluation(run, cfg);
      out << result.result.report.to_text() << "windows: " << result.result.windows << '\n'
          << "report: " << result.report_path << '\n';
    } else if (verify->parsed()) {
      const auto schedule = diffusion::NoiseSchedule::linear(v_steps);
      const auto report = diffusion::verify_equivalence(v_trials, schedule, v_seed, v_dim);
      out << report.to_text();
      if (!report.passed()) {
        err << "equivalence check failed\n";
        return 2;
      }
    } else if (plot->parsed()) {
      config::RunConfig cfg;
      const auto run = load_for_inference(*plot, plot_flags, pl_manifest, cfg);
      const auto splits = pipeline::load_splits(run);
      const auto& mc = run.model.config;
      const std::size_t count = data::window_count(splits.test.steps, mc.lookback, mc.horizon, "test");
      if (pl_window >= count) {
        throw ConfigError("plot: window " + std::to_string(pl_window) + " outside the " +
                          std::to_string(count) + " test windows");
      }
      const auto schedule = diffusion::NoiseSchedule::linear(mc.diffusion_steps);
      const Frame x = splits.test.slice(pl_window, mc.lookback);
      const Frame y = splits.test.slice(pl_window + mc.lookback, mc.horizon);
      const auto ens = pipeline::forecast(run.model, schedule, x, pipeline::sampler_options(cfg), pl_window);
      if (pl_channel >= x.channels) throw ConfigError("plot: channel out of range");
      const std::string svg = pipeline::render_svg(
          ens, pl_channel, x.channel(pl_channel), y.channel(pl_channel),
          "test window " + std::to_string(pl_window) + ", channel " + std::to_string(pl_channel));
      std::filesystem::create_directories(cfg.out_dir);
      const std::string path =
          pl_out.empty() ? cfg.out_dir + "/forecast_" + std::to_string(pl_window) + ".svg" : pl_out;
      pipeline::write_svg(path, svg);
      out << "wrote " << path << '\n';
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const CompatibilityError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace residiff::cli
