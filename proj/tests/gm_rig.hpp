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
// A single Grid Manager with its LRMS, one storage element and a replica
// catalog, all on an in-process network and a logical clock.

#include <signal.h>

#include <memory>
#include <thread>

#include "ng/grid_manager.hpp"
#include "ng/lrms.hpp"
#include "ng/replica_catalog.hpp"
#include "ng/storage_element.hpp"
#include "support.hpp"

namespace ngtest {

using namespace std::chrono_literals;

inline const std::string kOwner = "/O=Grid/CN=Alice";
inline const std::string kStranger = "/O=Grid/CN=Mallory";
inline const std::string kSe = "se1:39100";
inline const std::string kRc = "rc:39200";

struct GmRig {
  TempDir dir;
  ng::ManualClock clock;
  ng::net::InProcessNetwork net;
  ng::lrms::Lrms lrms{{{"short", 600, 512, 1024, 2}, {"long", 86400, 2048, 4096, 1}}, clock};
  ng::se::StorageElement store{[this] {
    ng::se::SeConfig c;
    c.root = dir / "se";
    c.acl = ng::se::parse_acl("rw / /O=Grid/*\n");
    c.advertised_name = "se1";
    c.base_url = "ngse://" + kSe;
    return c;
  }()};
  ng::se::SeService se_service{store};
  ng::rc::ReplicaCatalog catalog;
  ng::rc::RcService rc_service{{"rc", "", "ngp://" + kRc, {"/O=Grid/*"}}, catalog};
  std::unique_ptr<ng::gm::GridManager> gm;

  explicit GmRig(std::function<void(ng::gm::GmConfig&)> tweak = {}) {
    net.bind(kSe, &se_service, "se");
    net.bind(kRc, &rc_service, "rc");
    tweak_ = std::move(tweak);
    restart();
  }

  ng::gm::GmConfig config() const {
    ng::gm::GmConfig c;
    c.cluster_host = "c1.example";
    c.control_dir = dir.path() / "control";
    c.session_root = dir.path() / "sessions";
    c.rc_endpoint = kRc;
    c.subject = "/O=Grid/CN=c1.example";
    if (tweak_) tweak_(c);
    return c;
  }

  /// Drop the Grid Manager and build a new one from the status directory.
  void restart() {
    gm.reset();
    gm = std::make_unique<ng::gm::GridManager>(config(), lrms, net, clock);
  }

  std::string submit(const std::string& xrsl, const std::string& owner = kOwner) {
    return gm->submit(owner, ng::xrsl::parse_job(xrsl));
  }

  ng::gm::JobState state(const std::string& id) const { return gm->find(id)->state; }

  /// Scheduler pass, one GM step, then logical time moves on.
  void tick(std::chrono::milliseconds dt = 100ms) {
    lrms.scheduler_tick();
    gm->step_all();
    clock.advance(dt);
  }

  /// Ticks until pred holds; real processes get wall time to finish.
  template <class Pred>
  bool run_until(Pred pred, int max_ticks = 2000) {
    for (int i = 0; i < max_ticks; ++i) {
      if (pred()) return true;
      tick();
      if (lrms.free_cpus() < lrms.total_cpus()) std::this_thread::sleep_for(2ms);
    }
    return pred();
  }

  bool reach(const std::string& id, ng::gm::JobState s) {
    return run_until([&] { return state(id) == s; });
  }

  bool terminal(const std::string& id) {
    return run_until([&] { return ng::gm::is_terminal(state(id)); });
  }

  static bool alive(pid_t pid) { return pid > 0 && ::kill(pid, 0) == 0; }

 private:
  std::function<void(ng::gm::GmConfig&)> tweak_;
};

}  // namespace ngtest
