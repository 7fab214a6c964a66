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

#include "residiff/manifest.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "residiff/errors.hpp"

namespace residiff {
namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string param_section(const std::string& name) { return "param " + name; }

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

double parse_double(const std::string& token, const std::string& what) {
  const std::string t = trim(token);
  double v = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (!t.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (t.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(what + ": '" + token + "' is not a number");
  }
  return v;
}

std::int64_t parse_int(const std::string& token, const std::string& what) {
  const std::string t = trim(token);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ParseError(what + ": '" + token + "' is not an integer");
  }
  return v;
}

std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string token;
  while (in >> token) out.push_back(parse_double(token, what));
  return out;
}

Manifest::Section& Manifest::section(const std::string& name) {
  for (auto& s : sections_) {
    if (s.name == name) return s;
  }
  sections_.push_back({name, {}});
  return sections_.back();
}

const Manifest::Section* Manifest::find(const std::string& name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

bool Manifest::has(const std::string& section_name, const std::string& key) const {
  const Section* s = find(section_name);
  if (!s) return false;
  for (const auto& [k, v] : s->entries) {
    if (k == key) return true;
  }
  return false;
}

void Manifest::set(const std::string& section_name, const std::string& key, std::string value) {
  auto& s = section(section_name);
  for (auto& [k, v] : s.entries) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  s.entries.emplace_back(key, std::move(value));
}

void Manifest::set_number(const std::string& section_name, const std::string& key, double value) {
  set(section_name, key, format_double(value));
}

void Manifest::set_int(const std::string& section_name, const std::string& key,
                       std::int64_t value) {
  set(section_name, key, std::to_string(value));
}

void Manifest::set_numbers(const std::string& section_name, const std::string& key,
                           const std::vector<double>& values) {
  std::string text;
  text.reserve(values.size() * 24);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) text += ' ';
    text += format_double(values[i]);
  }
  set(section_name, key, std::move(text));
}

const std::string& Manifest::get(const std::string& section_name, const std::string& key) const {
  const Section* s = find(section_name);
  if (!s) throw CompatibilityError("manifest: missing section [" + section_name + "]");
  for (const auto& [k, v] : s->entries) {
    if (k == key) return v;
  }
  throw CompatibilityError("manifest: section [" + section_name + "] has no key '" + key + "'");
}

double Manifest::get_number(const std::string& section_name, const std::string& key) const {
  return parse_double(get(section_name, key), "manifest " + section_name + "." + key);
}

std::int64_t Manifest::get_int(const std::string& section_name, const std::string& key) const {
  return parse_int(get(section_name, key), "manifest " + section_name + "." + key);
}

std::vector<double> Manifest::get_numbers(const std::string& section_name,
                                          const std::string& key) const {
  return parse_doubles(get(section_name, key), "manifest " + section_name + "." + key);
}

void Manifest::put_tensor(const std::string& name, const ad::Tensor& tensor) {
  const std::string sec = param_section(name);
  std::string shape;
  for (std::size_t i = 0; i < tensor.rank(); ++i) {
    if (i) shape += ' ';
    shape += std::to_string(tensor.shape()[i]);
  }
  set(sec, "shape", shape);
  set_numbers(sec, "data", {tensor.values().begin(), tensor.values().end()});
}

void Manifest::load_tensor(const std::string& name, ad::Tensor& tensor) const {
  const std::string sec = param_section(name);
  std::istringstream in(get(sec, "shape"));
  ad::Shape shape;
  std::string token;
  while (in >> token) shape.push_back(static_cast<std::size_t>(parse_int(token, sec + ".shape")));
  if (shape != tensor.shape()) {
    throw CompatibilityError("manifest: parameter '" + name + "' has shape " +
                             ad::shape_string(shape) + ", model expects " +
                             ad::shape_string(tensor.shape()));
  }
  const auto data = get_numbers(sec, "data");
  if (data.size() != tensor.size()) {
    throw CompatibilityError("manifest: parameter '" + name + "' holds " +
                             std::to_string(data.size()) + " values, shape needs " +
                             std::to_string(tensor.size()));
  }
  std::copy(data.begin(), data.end(), tensor.mutable_values().begin());
}

std::string Manifest::to_string() const {
  std::ostringstream out;
  out << "format_version = " << kFormatVersion << '\n';
  for (const auto& s : sections_) {
    out << '[' << s.name << "]\n";
    for (const auto& [k, v] : s.entries) out << k << " = " << v << '\n';
  }
  return out.str();
}

Manifest Manifest::parse(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool saw_version = false;
  Section* current = nullptr;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = "manifest line " + std::to_string(line_no);
    if (t.front() == '[') {
      if (t.back() != ']') throw ParseError(where + ": unterminated section header");
      if (!saw_version) throw ParseError(where + ": format_version must come first");
      current = &m.section(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(where + ": expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!current) {
      if (key != "format_version") throw ParseError(where + ": entry outside any section");
      const auto version = parse_int(value, where);
      if (version != kFormatVersion) {
        throw CompatibilityError("manifest format_version " + std::to_string(version) +
                                 " is not supported (expected " +
                                 std::to_string(kFormatVersion) + ")");
      }
      saw_version = true;
      continue;
    }
    current->entries.emplace_back(key, value);
  }
  if (!saw_version) throw ParseError("manifest: missing format_version");
  return m;
}

void Manifest::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write manifest '" + path + "'");
  out << to_string();
  if (!out) throw Error("failed writing manifest '" + path + "'");
}

Manifest Manifest::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("manifest file not found: '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace residiff
