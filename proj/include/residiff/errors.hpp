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

#include <stdexcept>
#include <string>

namespace residiff {

// Everything the library throws derives from Error. The CLI maps the
// validation family (ConfigError, ParseError) to exit code 1 and all other
// errors to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes that cannot be combined. Messages name both offending shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Illegal hyperparameter or option value, unknown key, missing file.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input text (CSV cells, manifest sections, config lines).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Index or diffusion step outside its valid range.
class RangeError : public Error {
 public:
  using Error::Error;
};

// API misuse, e.g. backward() on a non-scalar.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Non-finite values during training.
class NumericError : public Error {
 public:
  using Error::Error;
};

// A manifest that does not fit the data it is applied to.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

}  // namespace residiff
