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

#include "residiff/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "residiff/errors.hpp"
#include "residiff/metrics.hpp"

namespace residiff::pipeline {
namespace {

constexpr double kWidth = 800.0, kHeight = 360.0, kMargin = 40.0;

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

struct Axes {
  double x0, x1, y0, y1;
  double px(double x) const {
    return kMargin + (x - x0) / std::max(x1 - x0, 1e-12) * (kWidth - 2 * kMargin);
  }
  double py(double y) const {
    return kHeight - kMargin - (y - y0) / std::max(y1 - y0, 1e-12) * (kHeight - 2 * kMargin);
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string polyline(const Axes& ax, std::span<const double> ys, double offset,
                      const char* color, const char* name) {
  std::ostringstream out;
  out << "<polyline class=\"" << name << "\" fill=\"none\" stroke=\"" << color
      << "\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (i) out << ' ';
    out << fmt(ax.px(offset + static_cast<double>(i))) << ',' << fmt(ax.py(ys[i]));
  }
  out << "\"/>\n";
  return out.str();
}

std::string band(const Axes& ax, const std::vector<double>& lo, const std::vector<double>& hi,
                 double offset, const char* color, double opacity, const char* name) {
  std::ostringstream out;
  out << "<polygon class=\"" << name << "\" fill=\"" << color << "\" fill-opacity=\"" << opacity
      << "\" stroke=\"none\" points=\"";
  for (std::size_t i = 0; i < hi.size(); ++i) {
    out << fmt(ax.px(offset + static_cast<double>(i))) << ',' << fmt(ax.py(hi[i])) << ' ';
  }
  for (std::size_t i = lo.size(); i-- > 0;) {
    out << fmt(ax.px(offset + static_cast<double>(i))) << ',' << fmt(ax.py(lo[i]));
    if (i) out << ' ';
  }
  out << "\"/>\n";
  return out.str();
}

}  // namespace

PlotBands ensemble_bands(const Ensemble& e, std::size_t channel) {
  if (e.n_samples == 0) throw ContractError("plot: empty ensemble");
  if (channel >= e.channels) {
    throw RangeError("plot: channel " + std::to_string(channel) + " of " +
                     std::to_string(e.channels));
  }
  PlotBands b;
  std::vector<double> buf(e.n_samples);
  for (std::size_t t = 0; t < e.steps; ++t) {
    for (std::size_t n = 0; n < e.n_samples; ++n) buf[n] = e.sample(n)[channel * e.steps + t];
    std::sort(buf.begin(), buf.end());
    b.p05.push_back(metrics::quantile_sorted(buf, 0.05));
    b.p25.push_back(metrics::quantile_sorted(buf, 0.25));
    b.median.push_back(metrics::quantile_sorted(buf, 0.5));
    b.p75.push_back(metrics::quantile_sorted(buf, 0.75));
    b.p95.push_back(metrics::quantile_sorted(buf, 0.95));
  }
  return b;
}

std::string render_svg(const Ensemble& e, std::size_t channel, std::span<const double> history,
                       std::span<const double> truth, const std::string& title) {
  const PlotBands b = ensemble_bands(e, channel);
  if (!truth.empty() && truth.size() != e.steps) {
    throw DimensionError("plot: truth has " + std::to_string(truth.size()) + " steps, forecast " +
                         std::to_string(e.steps));
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  auto widen = [&](std::span<const double> v) {
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  };
  widen(b.p05);
  widen(b.p95);
  widen(history);
  widen(truth);
  if (lo == hi) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double offset = static_cast<double>(history.size());
  const Axes ax{0.0, offset + static_cast<double>(e.steps) - 1.0, lo, hi};

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "<title>" << escape(title) << "</title>\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\""
      << kWidth - kMargin << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"#444\"/>\n"
      << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin
      << "\" y2=\"" << kHeight - kMargin << "\" stroke=\"#444\"/>\n"
      << "<text x=\"" << kMargin << "\" y=\"" << kMargin - 12 << "\" font-family=\"sans-serif\" "
      << "font-size=\"13\">" << escape(title) << "</text>\n"
      << "<text x=\"4\" y=\"" << fmt(ax.py(hi)) << "\" font-family=\"sans-serif\" font-size=\"10\">"
      << fmt(hi) << "</text>\n"
      << "<text x=\"4\" y=\"" << fmt(ax.py(lo)) << "\" font-family=\"sans-serif\" font-size=\"10\">"
      << fmt(lo) << "</text>\n";
  out << band(ax, b.p05, b.p95, offset, "#4a7ab5", 0.25, "band90");
  out << band(ax, b.p25, b.p75, offset, "#4a7ab5", 0.45, "band50");
  if (!history.empty()) out << polyline(ax, history, 0.0, "#222", "history");
  if (!truth.empty()) out << polyline(ax, truth, offset, "#222", "truth");
  out << polyline(ax, b.median, offset, "#c0392b", "median");
  out << "</svg>\n";
  return out.str();
}

void write_svg(const std::string& path, const std::string& svg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << svg;
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace residiff::pipeline
