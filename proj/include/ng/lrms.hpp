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

#include <sys/types.h>

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ng/common.hpp"

namespace ng::lrms {

inline constexpr int kExitLimitExceeded = 152;
inline constexpr int kExitDeleted = 153;

struct QueueConfig {
  std::string name;
  std::uint64_t max_cputime = 3600;  // seconds
  std::uint64_t max_memory = 1024;   // MB, advisory
  std::uint64_t max_disk = 1024;     // MB
  int cpus = 1;
};

enum class LocalState { Queued, Running, Exited };

char state_letter(LocalState s);

struct Limits {
  std::uint64_t cputime = 0;  // 0 = queue maximum
  std::uint64_t memory = 0;
};

struct LocalJob {
  std::int64_t id = 0;
  fs::path script;
  fs::path workdir;
  std::string queue;
  Limits limits;
  LocalState state = LocalState::Queued;
  std::optional<int> exit_code;
  TimePoint submitted{};
  std::optional<TimePoint> started;
  std::optional<TimePoint> ended;
  pid_t pid = 0;  // process group leader while running
};

struct Transition {
  std::int64_t id = 0;
  LocalState from = LocalState::Queued;
  LocalState to = LocalState::Queued;
};

class LrmsError : public Error {
 public:
  using Error::Error;
};

/// PBS-like batch system: per-queue slot pools, FIFO within a queue and
/// round-robin across queues. Jobs are real /bin/sh processes, each in its
/// own process group, with a scrubbed environment and the session
/// directory as working directory. cputime is enforced as wall-clock.
class Lrms {
 public:
  Lrms(std::vector<QueueConfig> queues, Clock& clock);
  ~Lrms();
  Lrms(const Lrms&) = delete;
  Lrms& operator=(const Lrms&) = delete;

  /// Reserve an id so a caller can persist it before submitting.
  std::int64_t allocate_id();

  std::int64_t qsub(const fs::path& script, const fs::path& workdir, const std::string& queue, Limits limits);
  /// Submit under a reserved id. Returns false when that id was already
  /// submitted, which makes resubmission after a restart harmless.
  bool qsub(std::int64_t id, const fs::path& script, const fs::path& workdir, const std::string& queue,
            Limits limits);

  std::vector<Transition> scheduler_tick();
  std::vector<LocalJob> qstat() const;
  std::optional<LocalJob> find(std::int64_t id) const;
  void qdel(std::int64_t id);

  const std::vector<QueueConfig>& queues() const { return queues_; }
  int total_cpus() const;
  int free_cpus() const;
  int running_in(const std::string& queue) const;
  int queued_in(const std::string& queue) const;

  /// Number of processes ever started for an id.
  int executions(std::int64_t id) const;
  std::uint64_t total_executions() const;

 private:
  const QueueConfig* queue(const std::string& name) const;
  void validate(const std::string& queue, const Limits& limits) const;
  void start(LocalJob& job);
  void finish(LocalJob& job, int code, std::vector<Transition>& out);
  int running_locked(const std::string& queue) const;

  std::vector<QueueConfig> queues_;
  Clock& clock_;
  mutable std::mutex mu_;
  std::int64_t next_id_ = 1;
  std::map<std::int64_t, LocalJob> jobs_;
  std::vector<std::int64_t> order_;  // submission order
  std::map<std::int64_t, int> executions_;
  std::size_t rr_ = 0;
};

}  // namespace ng::lrms
