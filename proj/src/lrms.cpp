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

#include "ng/lrms.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

namespace ng::lrms {

char state_letter(LocalState s) {
  switch (s) {
    case LocalState::Queued: return 'Q';
    case LocalState::Running: return 'R';
    default: return 'E';
  }
}

Lrms::Lrms(std::vector<QueueConfig> queues, Clock& clock) : queues_(std::move(queues)), clock_(clock) {
  if (queues_.empty()) throw LrmsError("at least one queue is required");
  for (const auto& q : queues_) {
    if (q.cpus <= 0 || q.max_cputime == 0 || q.max_memory == 0 || q.max_disk == 0)
      throw LrmsError("queue " + q.name + ": limits must be positive");
  }
}

Lrms::~Lrms() {
  std::lock_guard lock(mu_);
  for (auto& [id, job] : jobs_) {
    if (job.state == LocalState::Running && job.pid > 0) {
      ::kill(-job.pid, SIGKILL);
      int status = 0;
      ::waitpid(job.pid, &status, 0);
    }
  }
}

const QueueConfig* Lrms::queue(const std::string& name) const {
  for (const auto& q : queues_)
    if (q.name == name) return &q;
  return nullptr;
}

void Lrms::validate(const std::string& name, const Limits& limits) const {
  const QueueConfig* q = queue(name);
  if (!q) throw LrmsError("unknown queue " + name);
  if (limits.cputime > q->max_cputime)
    throw LrmsError("cputime " + std::to_string(limits.cputime) + " exceeds queue maximum " +
                    std::to_string(q->max_cputime));
  if (limits.memory > q->max_memory)
    throw LrmsError("memory " + std::to_string(limits.memory) + " exceeds queue maximum " +
                    std::to_string(q->max_memory));
}

std::int64_t Lrms::allocate_id() {
  std::lock_guard lock(mu_);
  return next_id_++;
}

std::int64_t Lrms::qsub(const fs::path& script, const fs::path& workdir, const std::string& queue, Limits limits) {
  std::int64_t id = allocate_id();
  qsub(id, script, workdir, queue, limits);
  return id;
}

bool Lrms::qsub(std::int64_t id, const fs::path& script, const fs::path& workdir, const std::string& queue,
                Limits limits) {
  validate(queue, limits);
  std::lock_guard lock(mu_);
  if (jobs_.count(id)) return false;
  if (id >= next_id_) next_id_ = id + 1;
  LocalJob job;
  job.id = id;
  job.script = script;
  job.workdir = workdir;
  job.queue = queue;
  job.limits = limits;
  job.submitted = clock_.now();
  jobs_.emplace(id, std::move(job));
  order_.push_back(id);
  return true;
}

void Lrms::start(LocalJob& job) {
  std::string sh = "/bin/sh";
  std::string script = job.script.string();
  std::vector<std::string> env_strings = {
      "PATH=/usr/local/bin:/usr/bin:/bin",
      "HOME=" + job.workdir.string(),
      "TMPDIR=" + job.workdir.string(),
      "PWD=" + job.workdir.string(),
      "LANG=C",
  };
  std::vector<char*> argv{sh.data(), script.data(), nullptr};
  std::vector<char*> envp;
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addchdir_np(&actions, job.workdir.c_str());
  posix_spawn_file_actions_addopen(&actions, 0, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_addclosefrom_np(&actions, 3);
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setpgroup(&attr, 0);
  sigset_t defaults;
  sigemptyset(&defaults);
  sigaddset(&defaults, SIGPIPE);
  sigaddset(&defaults, SIGTERM);
  sigaddset(&defaults, SIGINT);
  posix_spawnattr_setsigdefault(&attr, &defaults);
  sigset_t none;
  sigemptyset(&none);
  posix_spawnattr_setsigmask(&attr, &none);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP | POSIX_SPAWN_SETSIGDEF | POSIX_SPAWN_SETSIGMASK);

  pid_t pid = 0;
  int rc = posix_spawn(&pid, sh.c_str(), &actions, &attr, argv.data(), envp.data());
  posix_spawn_file_actions_destroy(&actions);
  posix_spawnattr_destroy(&attr);

  job.state = LocalState::Running;
  job.started = clock_.now();
  ++executions_[job.id];
  if (rc != 0) {
    job.pid = 0;
    job.state = LocalState::Exited;
    job.exit_code = 127;
    job.ended = job.started;
    return;
  }
  job.pid = pid;
}

void Lrms::finish(LocalJob& job, int code, std::vector<Transition>& out) {
  out.push_back({job.id, job.state, LocalState::Exited});
  job.state = LocalState::Exited;
  job.exit_code = code;
  job.ended = clock_.now();
  job.pid = 0;
}

int Lrms::running_locked(const std::string& q) const {
  int n = 0;
  for (const auto& [id, job] : jobs_)
    if (job.queue == q && job.state == LocalState::Running) ++n;
  return n;
}

std::vector<Transition> Lrms::scheduler_tick() {
  std::lock_guard lock(mu_);
  std::vector<Transition> out;
  TimePoint now = clock_.now();

  for (auto& [id, job] : jobs_) {
    if (job.state != LocalState::Running || job.pid <= 0) continue;
    int status = 0;
    pid_t r = ::waitpid(job.pid, &status, WNOHANG);
    if (r == job.pid) {
      int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
      ::kill(-job.pid, SIGKILL);  // stray children of the job shell
      finish(job, code, out);
      continue;
    }
    const QueueConfig* q = queue(job.queue);
    std::uint64_t limit = job.limits.cputime ? job.limits.cputime : q->max_cputime;
    if (now - *job.started >= std::chrono::seconds(limit)) {
      ::kill(-job.pid, SIGKILL);
      ::waitpid(job.pid, &status, 0);
      finish(job, kExitLimitExceeded, out);
    }
  }

  // FIFO inside a queue, round-robin between queues
  bool started = true;
  while (started) {
    started = false;
    for (std::size_t k = 0; k < queues_.size(); ++k) {
      const QueueConfig& q = queues_[(rr_ + k) % queues_.size()];
      if (running_locked(q.name) >= q.cpus) continue;
      auto it = std::find_if(order_.begin(), order_.end(), [&](std::int64_t id) {
        const LocalJob& j = jobs_.at(id);
        return j.queue == q.name && j.state == LocalState::Queued;
      });
      if (it == order_.end()) continue;
      LocalJob& job = jobs_.at(*it);
      start(job);
      out.push_back({job.id, LocalState::Queued, LocalState::Running});
      if (job.state == LocalState::Exited) out.push_back({job.id, LocalState::Running, LocalState::Exited});
      rr_ = (rr_ + k + 1) % queues_.size();
      started = true;
      break;
    }
  }
  return out;
}

std::vector<LocalJob> Lrms::qstat() const {
  std::lock_guard lock(mu_);
  std::vector<LocalJob> out;
  for (std::int64_t id : order_) out.push_back(jobs_.at(id));
  return out;
}

std::optional<LocalJob> Lrms::find(std::int64_t id) const {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

void Lrms::qdel(std::int64_t id) {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw LrmsError("unknown job id " + std::to_string(id));
  LocalJob& job = it->second;
  std::vector<Transition> ignored;
  if (job.state == LocalState::Queued) {
    finish(job, kExitDeleted, ignored);
  } else if (job.state == LocalState::Running) {
    if (job.pid > 0) {
      ::kill(-job.pid, SIGKILL);
      int status = 0;
      ::waitpid(job.pid, &status, 0);
    }
    finish(job, kExitDeleted, ignored);
  }
}

int Lrms::total_cpus() const {
  int n = 0;
  for (const auto& q : queues_) n += q.cpus;
  return n;
}

int Lrms::free_cpus() const {
  std::lock_guard lock(mu_);
  int running = 0;
  for (const auto& [id, job] : jobs_)
    if (job.state == LocalState::Running) ++running;
  return std::max(0, total_cpus() - running);
}

int Lrms::running_in(const std::string& q) const {
  std::lock_guard lock(mu_);
  return running_locked(q);
}

int Lrms::queued_in(const std::string& q) const {
  std::lock_guard lock(mu_);
  int n = 0;
  for (const auto& [id, job] : jobs_)
    if (job.queue == q && job.state == LocalState::Queued) ++n;
  return n;
}

int Lrms::executions(std::int64_t id) const {
  std::lock_guard lock(mu_);
  auto it = executions_.find(id);
  return it == executions_.end() ? 0 : it->second;
}

std::uint64_t Lrms::total_executions() const {
  std::lock_guard lock(mu_);
  std::uint64_t n = 0;
  for (const auto& [id, c] : executions_) n += static_cast<std::uint64_t>(c);
  return n;
}

}  // namespace ng::lrms
