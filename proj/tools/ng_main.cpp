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

// Multi-call entry point: invoked as "ngsub", "ngstat", ... through a
// symlink, or as "ng <command> ...".

#include <cstdlib>
#include <iostream>

#include "commands.hpp"

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : std::move(fallback);
}

void usage() {
  std::cerr << "usage: ng <command> [args]\ncommands:";
  for (const auto& n : ng::cli::command_names()) std::cerr << " " << n;
  std::cerr << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  std::string self = ng::fs::path(argv[0]).filename().string();
  std::vector<std::string> args(argv + 1, argv + argc);
  if (self == "ng" || self == "ngtool") {
    if (args.empty() || args[0] == "-h" || args[0] == "--help") {
      usage();
      return args.empty() ? ng::cli::kUserError : ng::cli::kOk;
    }
    self = args[0];
    args.erase(args.begin());
  }

  ng::net::TcpTransport transport;
  ng::cli::Env env;
  env.transport = &transport;
  env.subject = env_or("NG_SUBJECT", "");
  env.giis = env_or("NG_GIIS", "127.0.0.1:39300");
  env.out = &std::cout;
  env.err = &std::cerr;
  return ng::cli::run(self, args, env);
}
