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
#include <optional>
#include <string>
#include <vector>

#include "ng/broker.hpp"
#include "ng/fleet.hpp"
#include "ng/grid_manager.hpp"

namespace ng::harness {

struct TaskflowOptions {
  std::string xrsl;
  std::string subject = "/O=Grid/O=NorduGrid/CN=Test User";
  /// Files the user uploads, by input name.
  std::map<std::string, std::string> uploads;
  /// Cancel as soon as the job is seen in this state.
  std::optional<gm::JobState> cancel_at;
  /// Restart the Grid Manager as soon as the job is seen in this state.
  std::optional<gm::JobState> restart_at;
  /// Crash the Grid Manager between recording the LRMS id and qsub.
  bool crash_after_localid = false;
  /// Storage element taken off the network right after submission.
  std::string se_down;
  /// Logical time added per harness iteration.
  Duration tick = std::chrono::milliseconds{100};
  /// Logical budget for each phase before the run is declared failed.
  Duration phase_timeout = std::chrono::seconds{600};
  fs::path workdir;  // local side of uploads and downloads
};

struct Event {
  Duration at{};  // logical time since the start of the run
  std::string step;
  std::string detail;
};

struct Transcript {
  std::vector<Event> events;
  std::string gridid;
  std::string cluster;
  std::string final_state;
  std::string failure;
  std::string failed_step;  // set when a phase timed out or threw
  std::map<std::string, std::string> downloads;
  std::vector<net::TransferRecord> ledger;
  std::size_t lrms_executions = 0;

  bool completed() const { return failed_step.empty(); }
  bool has(std::string_view step) const;
  /// One "<time> <step> <detail>" line per event. With mask, times become
  /// "T+*" and the gridid becomes "<gridid>".
  std::string render(bool mask = true) const;
};

/// Boots the fleet and walks one job through the whole life cycle:
/// discovery, replica lookup, submission, stage-in, upload, execution,
/// status monitoring, optional cancellation, stage-out with registration,
/// download and a final information-system refresh.
Transcript run_taskflow(fleet::Fleet& fleet, const TaskflowOptions& options);

/// Payload may only travel ui<->cluster, ui<->se and cluster<->se.
bool peer_to_peer(const std::vector<net::TransferRecord>& ledger, std::string* violation = nullptr);

/// Three clusters over two country GIISes under one top GIIS, two SEs and
/// one RC, rooted at dir. ttl is the registration/cache ttl in seconds.
std::string demo_fleet_config(const fs::path& dir, double ttl_seconds = 1.0);

/// Seeds the demo input "data.in" on se1 and registers it as lfn "data".
void seed_demo_data(fleet::Fleet& fleet, const std::string& content);

/// Echo job: one rc: input, one registered output, one retained output.
std::string demo_job_xrsl(const fleet::Fleet& fleet);

/// The user-side files of demo_job_xrsl.
std::map<std::string, std::string> demo_uploads();

/// Drives ticks until pred holds or the logical budget runs out.
bool run_until(fleet::Fleet& fleet, const std::function<bool()>& pred, Duration budget,
               Duration tick = std::chrono::milliseconds{100});

}  // namespace ng::harness
