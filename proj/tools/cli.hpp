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

#include <iosfwd>

namespace residiff::cli {

// Runs the command line. Returns 0 on success, 1 on invalid input
// (usage, configuration, parse or compatibility errors), 2 on runtime
// failure.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace residiff::cli
