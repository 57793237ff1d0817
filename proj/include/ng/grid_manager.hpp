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

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ng/infomodel.hpp"
#include "ng/lrms.hpp"
#include "ng/transport.hpp"
#include "ng/xrsl.hpp"

namespace ng::gm {

enum class JobState { Accepted, Preparing, InlrmsQ, InlrmsR, Finishing, Finished, Failed, Canceling, Deleted };

inline constexpr std::array kAllStates{JobState::Accepted, JobState::Preparing, JobState::InlrmsQ,
                                       JobState::InlrmsR,  JobState::Finishing, JobState::Finished,
                                       JobState::Failed,   JobState::Canceling, JobState::Deleted};

/// "ACCEPTED", "INLRMS:Q", ... as published in the information system.
std::string_view state_name(JobState s);
/// Accepts both "INLRMS:Q" and "INLRMS_Q".
std::optional<JobState> parse_state(std::string_view s);
bool is_terminal(JobState s);  // FINISHED or FAILED
bool is_active(JobState s);    // neither terminal, CANCELING nor DELETED

enum class JobEvent {
  Prepare,
  StageInDone,
  LrmsRunning,
  LrmsExited,
  StageOutDone,
  Failure,
  Cancel,
  CancelDone,
  Clean,
  LifetimeExpired,
};

inline constexpr std::array kAllEvents{JobEvent::Prepare,      JobEvent::StageInDone, JobEvent::LrmsRunning,
                                       JobEvent::LrmsExited,   JobEvent::StageOutDone, JobEvent::Failure,
                                       JobEvent::Cancel,       JobEvent::CancelDone,  JobEvent::Clean,
                                       JobEvent::LifetimeExpired};

std::string_view event_name(JobEvent e);

/// The job state machine. nullopt means the event does not apply in that
/// state and must be ignored.
std::optional<JobState> next_state(JobState s, JobEvent e);

/// Every edge next_state can produce.
bool legal_transition(JobState from, JobState to);

struct JobRecord {
  std::string gridid;
  std::string owner;
  xrsl::JobDescription job;
  std::string queue;  // effective LRMS queue
  JobState state = JobState::Accepted;
  fs::path session_dir;
  std::optional<std::int64_t> local_id;
  std::optional<int> exit_code;
  std::string failure_reason;
  TimePoint created{};
  TimePoint modified{};
  TimePoint phase_started{};
  Duration lifetime{};
  bool clean_requested = false;
};

/// <control>/jobs/<gridid>/{status,desc,owner,errors,meta}. Every file is
/// replaced by write-then-rename; "status" is written last.
class StatusDirectory {
 public:
  explicit StatusDirectory(fs::path control);

  void create(const JobRecord& r);
  void save(const JobRecord& r);
  std::vector<JobRecord> load_all(const fs::path& session_root) const;
  fs::path job_dir(const std::string& gridid) const;
  const fs::path& root() const { return control_; }

 private:
  fs::path control_;
};

class GmError : public Error {
 public:
  GmError(int code, const std::string& what) : Error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

/// Thrown by fault hooks to simulate the daemon dying mid-step. It is the
/// only exception step_all lets escape.
class InjectedCrash : public Error {
 public:
  using Error::Error;
};

struct GmConfig {
  std::string cluster_host;
  fs::path control_dir;
  fs::path session_root;
  std::vector<fs::path> local_se_paths;
  std::string rc_endpoint;  // empty: outputs are not registered
  std::string subject = "/O=Grid/CN=grid-manager";
  Duration default_lifetime = std::chrono::seconds{3600};
  Duration upload_timeout = std::chrono::seconds{60};
  int retries = 3;
  Duration retry_backoff = std::chrono::seconds{1};
  /// Test hook called at named points inside a step; throwing from it
  /// simulates a crash at that point.
  std::function<void(std::string_view point, const JobRecord&)> fault_hook;
};

struct SessionFile {
  std::string name;
  std::uint64_t size = 0;
};

/// Owns every grid job on one cluster: staging, LRMS submission, output
/// handling, notification and cleanup. The status directory is the only
/// durable state; a new GridManager over the same directories resumes
/// every job where it was.
class GridManager {
 public:
  GridManager(GmConfig config, lrms::Lrms& lrms, net::Transport& transport, Clock& clock);

  /// Creates the record in ACCEPTED and its session directory.
  std::string submit(const std::string& owner, xrsl::JobDescription job);
  void cancel(const std::string& gridid, const std::string& subject);
  /// On a finished job removes it; on a live job cancels first.
  void clean(const std::string& gridid, const std::string& subject);

  /// Advances every job by at most one transition.
  void step_all();
  /// Advances one job by at most one transition. Returns true if it moved.
  bool step(const std::string& gridid);

  void put_session_file(const std::string& gridid, const std::string& subject, const std::string& name,
                        std::string_view bytes);
  std::string get_session_file(const std::string& gridid, const std::string& subject, const std::string& name);
  /// Declared outputs kept for download that exist in the session directory.
  std::vector<SessionFile> list_session(const std::string& gridid, const std::string& subject);

  std::optional<JobRecord> find(const std::string& gridid) const;
  std::vector<JobRecord> jobs() const;
  /// Records not yet DELETED.
  std::size_t active_count() const;
  std::vector<info::JobInfo> job_infos() const;

  fs::path notification_log() const { return config_.control_dir / "notifications.log"; }
  const GmConfig& config() const { return config_; }

 private:
  struct Slot {
    std::mutex mu;
    JobRecord rec;
  };

  std::shared_ptr<Slot> slot(const std::string& gridid) const;
  std::shared_ptr<Slot> owned_slot(const std::string& gridid, const std::string& subject) const;
  bool apply(JobRecord& r, JobEvent e, std::string reason = {});
  void notify(const JobRecord& r, JobState from, JobState to);
  void fault(std::string_view point, const JobRecord& r) const;

  bool advance(JobRecord& r);
  bool guarded_advance(JobRecord& r);
  bool prepare(JobRecord& r);
  bool finish_outputs(JobRecord& r);
  void fetch_input(const JobRecord& r, const xrsl::InputFile& in);
  void store_output(const JobRecord& r, const xrsl::OutputFile& out);
  void with_retries(const std::function<void()>& fn);
  fs::path write_job_script(const JobRecord& r) const;
  std::string pick_queue(const xrsl::JobDescription& job) const;
  fs::path session_path(const JobRecord& r, const std::string& name) const;

  GmConfig config_;
  lrms::Lrms& lrms_;
  net::Transport& transport_;
  Clock& clock_;
  StatusDirectory status_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slot>> jobs_;
  std::uint64_t counter_ = 0;
  std::mutex notify_mu_;
};

}  // namespace ng::gm
