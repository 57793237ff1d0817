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

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ng/infomodel.hpp"
#include "ng/transport.hpp"

namespace ng::info {

enum class ChildKind { Gris, Giis };

std::string_view to_string(ChildKind k);

struct GiisConfig {
  std::string name;
  std::string country;
  std::string endpoint;             // own address, used in upstream requests
  std::vector<std::string> allow;   // subjects permitted to ATTACH
  Duration default_ttl = std::chrono::seconds{30};
  std::string subject = "/O=Grid/CN=giis";
};

struct ChildInfo {
  std::string endpoint;
  ChildKind kind = ChildKind::Gris;
  Duration ttl{};
  bool fresh = false;
  std::size_t fetches = 0;
  std::size_t cached_entries = 0;
};

struct QueryResult {
  std::vector<Entry> entries;
  bool partial = false;
};

/// Aggregating index over GRISes and lower GIISes. Each child's complete
/// subtree is cached and refetched only once its ttl has elapsed; queries
/// are answered from the caches.
class GiisService final : public net::Service {
 public:
  GiisService(GiisConfig config, net::Transport& transport, Clock& clock);

  /// Idempotent. Children not re-attaching within 3 x ttl are pruned.
  void attach_child(const std::string& endpoint, ChildKind kind, std::optional<Duration> ttl = std::nullopt);
  QueryResult query(const Filter& f, bool recurse);

  std::vector<ChildInfo> children() const;
  std::size_t upstream_fetches(const std::string& endpoint) const;

  wire::Response handle(const wire::Request& req) override;

 private:
  struct Child {
    std::string endpoint;
    ChildKind kind = ChildKind::Gris;
    Duration ttl{};
    TimePoint last_attach{};
    std::mutex fetch_mu;  // held while fetching; coalesces concurrent refreshes
    std::shared_ptr<const std::vector<Entry>> cache;
    TimePoint last_fetch{};
    bool has_fetched = false;
    bool stale = true;
    std::size_t fetches = 0;
    bool partial = false;
  };

  void prune(TimePoint now);
  /// Returns the cache to serve, or null when the child could not be reached.
  std::shared_ptr<const std::vector<Entry>> refresh(Child& c, bool& partial);

  GiisConfig config_;
  net::Transport& transport_;
  Clock& clock_;
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<Child>> children_;
};

/// Keeps one service registered with its parent GIIS: ATTACH on the first
/// tick, then again whenever ttl has passed since the last success.
class Registrar {
 public:
  Registrar(std::string parent, std::string self, ChildKind kind, Duration ttl, std::string subject)
      : parent_(std::move(parent)), self_(std::move(self)), kind_(kind), ttl_(ttl), subject_(std::move(subject)) {}

  /// Returns true when an ATTACH was sent and accepted.
  bool tick(net::Transport& transport, Clock& clock, std::string_view role);
  const std::string& parent() const { return parent_; }
  const std::string& self() const { return self_; }
  std::size_t attaches() const { return attaches_; }

 private:
  std::string parent_;
  std::string self_;
  ChildKind kind_;
  Duration ttl_;
  std::string subject_;
  std::optional<TimePoint> last_;
  std::size_t attaches_ = 0;
};

}  // namespace ng::info
