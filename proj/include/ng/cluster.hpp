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

#include "ng/giis.hpp"
#include "ng/grid_manager.hpp"
#include "ng/lrms.hpp"
#include "ng/transport.hpp"

namespace ng::cluster {

struct ClusterConfig {
  std::string name;      // front-end host name; prefixes every gridid
  std::string country;
  std::vector<std::string> aliases;
  std::string endpoint;  // host:port this cluster answers on
  std::vector<std::string> gridmap;
  std::vector<lrms::QueueConfig> queues;
  std::vector<std::string> runtimeenvironments;
  std::vector<fs::path> local_se_paths;
  fs::path dir;          // holds control/ and sessions/
  std::string rc_endpoint;
  std::string parent_giis;
  Duration ttl = std::chrono::seconds{30};
  Duration default_lifetime = std::chrono::seconds{3600};
  std::string subject;   // identity used towards SEs, the RC and the GIIS
};

/// One cluster front-end in a single service: gatekeeper on "/jobs",
/// session upload and download on "/sessions/<gridid>/<file>", and the
/// GRIS on "/mds". The LRMS and Grid Manager are driven by tick().
class ClusterService final : public net::Service {
 public:
  ClusterService(ClusterConfig config, net::Transport& transport, Clock& clock);
  ~ClusterService() override;

  wire::Response handle(const wire::Request& req) override;

  /// One scheduler pass, one Grid Manager step per job, and an ATTACH to
  /// the parent GIIS when due.
  void tick();

  /// Drops the Grid Manager and builds a fresh one from the status
  /// directory, as after a daemon crash. The LRMS keeps running.
  void restart_gm();
  /// Installs a fault hook on the current and every later Grid Manager.
  void set_fault_hook(std::function<void(std::string_view, const gm::JobRecord&)> hook);

  info::ClusterState state() const;
  std::vector<info::Entry> snapshot() const;

  /// The current Grid Manager; a restart replaces it.
  std::shared_ptr<gm::GridManager> gm() const;
  lrms::Lrms& lrms() { return lrms_; }
  const ClusterConfig& config() const { return config_; }
  /// "<verb> <subject> <gridid> <code>" per gatekeeper request.
  std::vector<std::string> gatekeeper_log() const;

 private:
  gm::GmConfig gm_config() const;
  wire::Response gatekeep(const wire::Request& req);
  wire::Response session(const wire::Request& req);
  void log(const wire::Request& req, const std::string& gridid, int code);

  ClusterConfig config_;
  net::Transport& transport_;
  Clock& clock_;
  lrms::Lrms lrms_;
  mutable std::mutex hook_mu_;
  std::function<void(std::string_view, const gm::JobRecord&)> fault_hook_;
  mutable std::mutex gm_mu_;
  std::shared_ptr<gm::GridManager> gm_;
  std::optional<info::Registrar> registrar_;
  mutable std::mutex log_mu_;
  std::vector<std::string> log_;
  std::mutex tick_mu_;
};

}  // namespace ng::cluster
