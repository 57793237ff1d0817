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

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ng/infomodel.hpp"
#include "ng/transport.hpp"

namespace ng::rc {

/// Flat lfn -> ordered pfn list. When a log path is given every change is
/// appended as "REG <lfn> <pfn>" / "UNREG <lfn> <pfn>" and replayed on load.
class ReplicaCatalog {
 public:
  ReplicaCatalog() = default;
  explicit ReplicaCatalog(fs::path log);

  /// Appends pfn if absent. Returns true when the catalog changed.
  bool register_replica(const std::string& lfn, const std::string& pfn);
  /// Removes pfn; drops the mapping with its last pfn. Absent pfn is a no-op.
  bool unregister_replica(const std::string& lfn, const std::string& pfn);
  std::optional<std::vector<std::string>> lookup(const std::string& lfn) const;
  std::map<std::string, std::vector<std::string>> snapshot() const;

  static bool valid_name(std::string_view s);

 private:
  bool apply(bool reg, const std::string& lfn, const std::string& pfn);

  mutable std::mutex mu_;
  std::map<std::string, std::vector<std::string>> map_;
  std::optional<fs::path> log_;
};

struct RcConfig {
  std::string name = "rc";
  std::string country;
  std::string url;                    // ngp://host:port
  std::vector<std::string> writers;   // subjects allowed to REG/UNREG
};

info::Entry rc_entry(const RcConfig& cfg, std::size_t mappings);

/// REG/UNREG/LOOKUP on "/rc/<lfn>" with the pfn in header "Pfn"; also a
/// GRIS for its own nordugrid-rc entry.
class RcService final : public net::Service {
 public:
  RcService(RcConfig config, ReplicaCatalog& catalog) : config_(std::move(config)), catalog_(catalog) {}
  wire::Response handle(const wire::Request& req) override;

 private:
  RcConfig config_;
  ReplicaCatalog& catalog_;
};

}  // namespace ng::rc
