// Copyright 2026 The ngtestbed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ng/transport.hpp"

namespace ng::cli {

enum ExitCode { kOk = 0, kUserError = 1, kRemoteError = 2 };

/// What a user command runs against. The real binary fills it from the
/// environment (NG_SUBJECT, NG_GIIS) and a TCP transport.
struct Env {
  net::Transport* transport = nullptr;
  std::string subject;
  std::string giis = "127.0.0.1:39300";
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

/// The command names this tool answers to.
const std::vector<std::string>& command_names();

/// Runs one command. name is "ngsub", "ngstat", ... args exclude the name.
int run(const std::string& name, const std::vector<std::string>& args, Env& env);

}  // namespace ng::cli
