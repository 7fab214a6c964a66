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

// Named-section text document holding hyperparameters and flat parameter
// blobs. Layout:
//
//   format_version = 1
//   [model]
//   lookback = 96
//   [param dema.in.w]
//   shape = 192 128
//   data = 0.1 -0.2 ...
//
// Numbers are written with 17 significant digits so a save/load cycle
// reproduces every double bit for bit.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "residiff/tensor.hpp"

namespace residiff {

class Manifest {
 public:
  static constexpr int kFormatVersion = 1;

  struct Section {
    std::string name;
    std::vector<std::pair<std::string, std::string>> entries;
  };

  // Creates the section when missing. Insertion order is preserved.
  Section& section(const std::string& name);
  const Section* find(const std::string& name) const;
  bool has(const std::string& section_name, const std::string& key) const;

  void set(const std::string& section_name, const std::string& key, std::string value);
  void set_number(const std::string& section_name, const std::string& key, double value);
  void set_int(const std::string& section_name, const std::string& key, std::int64_t value);
  void set_numbers(const std::string& section_name, const std::string& key,
                   const std::vector<double>& values);

  // Missing sections or keys raise CompatibilityError.
  const std::string& get(const std::string& section_name, const std::string& key) const;
  double get_number(const std::string& section_name, const std::string& key) const;
  std::int64_t get_int(const std::string& section_name, const std::string& key) const;
  std::vector<double> get_numbers(const std::string& section_name, const std::string& key) const;

  // Parameter blobs live in sections named "param <name>".
  void put_tensor(const std::string& name, const ad::Tensor& tensor);
  // Copies stored values into `tensor`; the stored shape must match.
  void load_tensor(const std::string& name, ad::Tensor& tensor) const;

  const std::vector<Section>& sections() const { return sections_; }

  std::string to_string() const;
  static Manifest parse(const std::string& text);
  void save(const std::string& path) const;
  static Manifest load(const std::string& path);

 private:
  std::vector<Section> sections_;
};

std::string format_double(double value);
// Strict parse of a whole token; ParseError names `what` on failure.
double parse_double(const std::string& token, const std::string& what);
std::int64_t parse_int(const std::string& token, const std::string& what);
std::vector<double> parse_doubles(const std::string& text, const std::string& what);

}  // namespace residiff
