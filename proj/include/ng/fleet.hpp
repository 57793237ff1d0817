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

#include <atomic>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ng/cluster.hpp"
#include "ng/giis.hpp"
#include "ng/replica_catalog.hpp"
#include "ng/storage_element.hpp"
#include "ng/transport.hpp"

namespace ng::fleet {

inline constexpr int kClusterPort = 39000;
inline constexpr int kSePort = 39100;
inline constexpr int kRcPort = 39200;
inline constexpr int kGiisPort = 39300;

struct GiisSpec {
  std::string name;
  std::string host;
  int port = 0;
  std::string country;
  std::string parent_giis;  // section name or host:port
  std::vector<std::string> allow;
  Duration ttl = std::chrono::seconds{30};
  std::string endpoint() const { return host + ":" + std::to_string(port); }
};

struct ClusterSpec {
  std::string name;
  std::string host;
  int port = 0;
  std::string country;
  std::string parent_giis;
  std::vector<std::string> aliases;
  std::vector<lrms::QueueConfig> queues;
  std::vector<std::string> gridmap;
  std::vector<std::string> runtimeenvironments;
  std::vector<std::string> localse;  // SE section names or directories
  Duration ttl = std::chrono::seconds{30};
  Duration lifetime = std::chrono::seconds{3600};
  std::string endpoint() const { return host + ":" + std::to_string(port); }
};

struct SeSpec {
  std::string name;
  std::string host;
  int port = 0;
  std::string country;
  std::string parent_giis;
  std::vector<se::AclLine> acl;
  std::uint64_t capacity_mb = 1024;
  fs::path root;  // empty: <dir>/se/<name>
  Duration ttl = std::chrono::seconds{30};
  std::string endpoint() const { return host + ":" + std::to_string(port); }
  std::string url() const { return "ngse://" + endpoint(); }
};

struct RcSpec {
  std::string name = "rc";
  std::string host;
  int port = 0;
  std::string country;
  std::string parent_giis;
  std::vector<std::string> writers;
  bool log = true;
  Duration ttl = std::chrono::seconds{30};
  std::string endpoint() const { return host + ":" + std::to_string(port); }
};

/// INI-style fleet description:
///
///   dir = ./fleet            (optional global keys)
///   host = 127.0.0.1
///   [giis "top"]             port, country, parent_giis, allow, ttl
///   [cluster "c1.example"]   port, country, parent_giis, queues, gridmap,
///                            allow, runtimeenvironment, localse, alias, ttl, lifetime
///   [se "se1"]               port, country, parent_giis, acl, access, capacity_mb, root, ttl
///   [rc]                     port, country, parent_giis, writers, log, ttl
///
/// Repeatable keys (allow, runtimeenvironment, localse, alias, access,
/// writers) accumulate; "queues" is a comma separated list of
/// name:max_cputime:max_memory:max_disk:cpus.
struct FleetConfig {
  fs::path dir = "ngfleet";
  std::string host = "127.0.0.1";
  std::vector<GiisSpec> giis;
  std::vector<ClusterSpec> clusters;
  std::vector<SeSpec> ses;
  std::optional<RcSpec> rc;

  const GiisSpec* find_giis(std::string_view name) const;
  const SeSpec* find_se(std::string_view name) const;
  /// Endpoint of a parent_giis value, resolving section names.
  std::string resolve_parent(const std::string& parent) const;
  /// The first GIIS without a parent.
  std::string top_giis() const;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Relative file paths (gridmap, acl, dir, root) resolve against base.
FleetConfig parse_fleet_config(std::string_view text, const fs::path& base = fs::current_path());
FleetConfig load_fleet_config(const fs::path& file);

/// Every service of a fleet inside one process, wired through an
/// InProcessNetwork and driven by tick().
class Fleet {
 public:
  Fleet(FleetConfig config, Clock& clock);
  ~Fleet();

  /// Registers every service with its parent GIIS.
  void boot();
  /// Re-registration when due, then one tick of every cluster.
  void tick();

  net::InProcessNetwork& network() { return network_; }
  Clock& clock() { return clock_; }
  const FleetConfig& config() const { return config_; }

  cluster::ClusterService& cluster(const std::string& name);
  se::StorageElement& se(const std::string& name);
  info::GiisService& giis(const std::string& name);
  rc::ReplicaCatalog& catalog();
  std::vector<std::string> cluster_names() const;

  std::string top_giis() const { return config_.top_giis(); }
  std::string rc_endpoint() const;

 private:
  struct SeNode {
    std::unique_ptr<se::StorageElement> store;
    std::unique_ptr<se::SeService> service;
  };

  FleetConfig config_;
  Clock& clock_;
  net::InProcessNetwork network_;
  std::map<std::string, std::unique_ptr<info::GiisService>> giis_;
  std::map<std::string, SeNode> ses_;
  std::unique_ptr<rc::ReplicaCatalog> catalog_;
  std::unique_ptr<rc::RcService> rc_;
  std::map<std::string, std::unique_ptr<cluster::ClusterService>> clusters_;
  std::vector<info::Registrar> registrars_;
};

/// Which services a daemon process runs.
enum class Role { Cluster, Se, Rc, Giis };

/// Runs the selected services of a fleet over TCP until stop becomes true.
/// name empty selects every service of that role.
int run_daemons(const FleetConfig& config, Role role, const std::string& name, const std::atomic<bool>& stop,
                std::ostream& log);

}  // namespace ng::fleet
