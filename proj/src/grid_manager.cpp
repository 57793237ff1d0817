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

#include "ng/grid_manager.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ng::gm {

std::string_view state_name(JobState s) {
  switch (s) {
    case JobState::Accepted: return "ACCEPTED";
    case JobState::Preparing: return "PREPARING";
    case JobState::InlrmsQ: return "INLRMS:Q";
    case JobState::InlrmsR: return "INLRMS:R";
    case JobState::Finishing: return "FINISHING";
    case JobState::Finished: return "FINISHED";
    case JobState::Failed: return "FAILED";
    case JobState::Canceling: return "CANCELING";
    case JobState::Deleted: return "DELETED";
  }
  return "UNKNOWN";
}

std::optional<JobState> parse_state(std::string_view s) {
  std::string norm(s);
  std::replace(norm.begin(), norm.end(), '_', ':');
  for (JobState st : kAllStates)
    if (state_name(st) == norm) return st;
  return std::nullopt;
}

bool is_terminal(JobState s) { return s == JobState::Finished || s == JobState::Failed; }

bool is_active(JobState s) {
  return s == JobState::Accepted || s == JobState::Preparing || s == JobState::InlrmsQ || s == JobState::InlrmsR ||
         s == JobState::Finishing;
}

std::string_view event_name(JobEvent e) {
  switch (e) {
    case JobEvent::Prepare: return "prepare";
    case JobEvent::StageInDone: return "stage-in-done";
    case JobEvent::LrmsRunning: return "lrms-running";
    case JobEvent::LrmsExited: return "lrms-exited";
    case JobEvent::StageOutDone: return "stage-out-done";
    case JobEvent::Failure: return "failure";
    case JobEvent::Cancel: return "cancel";
    case JobEvent::CancelDone: return "cancel-done";
    case JobEvent::Clean: return "clean";
    case JobEvent::LifetimeExpired: return "lifetime-expired";
  }
  return "?";
}

std::optional<JobState> next_state(JobState s, JobEvent e) {
  using S = JobState;
  switch (e) {
    case JobEvent::Prepare:
      if (s == S::Accepted) return S::Preparing;
      break;
    case JobEvent::StageInDone:
      if (s == S::Preparing) return S::InlrmsQ;
      break;
    case JobEvent::LrmsRunning:
      if (s == S::InlrmsQ) return S::InlrmsR;
      break;
    case JobEvent::LrmsExited:
      if (s == S::InlrmsR) return S::Finishing;
      break;
    case JobEvent::StageOutDone:
      if (s == S::Finishing) return S::Finished;
      break;
    case JobEvent::Failure:
      if (is_active(s)) return S::Failed;
      break;
    case JobEvent::Cancel:
      if (is_active(s)) return S::Canceling;
      break;
    case JobEvent::CancelDone:
      if (s == S::Canceling) return S::Failed;
      break;
    case JobEvent::Clean:
      if (is_active(s)) return S::Canceling;
      if (is_terminal(s)) return S::Deleted;
      break;
    case JobEvent::LifetimeExpired:
      if (is_terminal(s)) return S::Deleted;
      break;
  }
  return std::nullopt;
}

bool legal_transition(JobState from, JobState to) {
  using S = JobState;
  switch (to) {
    case S::Preparing: return from == S::Accepted;
    case S::InlrmsQ: return from == S::Preparing;
    case S::InlrmsR: return from == S::InlrmsQ;
    case S::Finishing: return from == S::InlrmsR;
    case S::Finished: return from == S::Finishing;
    case S::Failed: return is_active(from) || from == S::Canceling;
    case S::Canceling: return is_active(from);
    case S::Deleted: return is_terminal(from);
    case S::Accepted: return false;
  }
  return false;
}

// ---------------------------------------------------------------------------

namespace {

std::string meta_text(const JobRecord& r) {
  std::ostringstream m;
  m << "queue=" << r.queue << "\n";
  if (r.local_id) m << "local_id=" << *r.local_id << "\n";
  if (r.exit_code) m << "exit_code=" << *r.exit_code << "\n";
  m << "created=" << to_millis(r.created) << "\n";
  m << "modified=" << to_millis(r.modified) << "\n";
  m << "phase_started=" << to_millis(r.phase_started) << "\n";
  m << "lifetime_ms=" << r.lifetime.count() << "\n";
  m << "clean=" << (r.clean_requested ? 1 : 0) << "\n";
  return m.str();
}

std::int64_t to_i64(const std::string& s) { return std::stoll(s); }

}  // namespace

StatusDirectory::StatusDirectory(fs::path control) : control_(std::move(control)) {
  fs::create_directories(control_ / "jobs");
}

fs::path StatusDirectory::job_dir(const std::string& gridid) const { return control_ / "jobs" / gridid; }

void StatusDirectory::create(const JobRecord& r) {
  fs::path d = job_dir(r.gridid);
  fs::create_directories(d);
  write_file_atomic(d / "desc", xrsl::serialize(r.job));
  write_file_atomic(d / "owner", r.owner + "\n");
  save(r);
}

void StatusDirectory::save(const JobRecord& r) {
  fs::path d = job_dir(r.gridid);
  write_file_atomic(d / "meta", meta_text(r));
  write_file_atomic(d / "errors", r.failure_reason.empty() ? "" : r.failure_reason + "\n");
  write_file_atomic(d / "status", std::string(state_name(r.state)) + "\n");
}

std::vector<JobRecord> StatusDirectory::load_all(const fs::path& session_root) const {
  std::vector<JobRecord> out;
  for (const auto& de : fs::directory_iterator(control_ / "jobs")) {
    if (!de.is_directory()) continue;
    const fs::path& d = de.path();
    if (!fs::exists(d / "status") || !fs::exists(d / "desc")) continue;  // creation never completed
    JobRecord r;
    r.gridid = d.filename().string();
    auto st = parse_state(trim(read_file(d / "status")));
    if (!st) throw Error("bad status file for " + r.gridid);
    r.state = *st;
    r.job = xrsl::parse_job(read_file(d / "desc"));
    r.owner = trim(read_file(d / "owner"));
    r.failure_reason = trim(read_file(d / "errors"));
    r.session_dir = session_root / r.gridid;
    for (const auto& line : split(read_file(d / "meta"), '\n')) {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string k = line.substr(0, eq), v = line.substr(eq + 1);
      if (k == "queue") r.queue = v;
      else if (k == "local_id") r.local_id = to_i64(v);
      else if (k == "exit_code") r.exit_code = static_cast<int>(to_i64(v));
      else if (k == "created") r.created = from_millis(to_i64(v));
      else if (k == "modified") r.modified = from_millis(to_i64(v));
      else if (k == "phase_started") r.phase_started = from_millis(to_i64(v));
      else if (k == "lifetime_ms") r.lifetime = Duration{to_i64(v)};
      else if (k == "clean") r.clean_requested = v == "1";
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct SeUrl {
  std::string endpoint;
  std::string path;
  std::string lfn;
};

SeUrl parse_se_url(const std::string& url) {
  constexpr std::string_view kScheme = "ngse://";
  if (!starts_with(url, kScheme)) throw Error("not an ngse URL: " + url);
  std::string rest = url.substr(kScheme.size());
  SeUrl out;
  if (auto q = rest.find('?'); q != std::string::npos) {
    for (const auto& kv : split(rest.substr(q + 1), '&')) {
      if (starts_with(kv, "lfn=")) out.lfn = kv.substr(4);
    }
    rest = rest.substr(0, q);
  }
  auto slash = rest.find('/');
  if (slash == std::string::npos) throw Error("ngse URL without path: " + url);
  out.endpoint = net::endpoint_key(rest.substr(0, slash));
  out.path = rest.substr(slash);
  return out;
}

std::string strip_query(const std::string& url) { return url.substr(0, url.find('?')); }

fs::path file_url_path(const std::string& url) {
  std::string p = url.substr(5);  // after "file:"
  if (starts_with(p, "//")) p = p.substr(2);
  return fs::path(p).lexically_normal();
}

bool under(const fs::path& p, const fs::path& root) {
  auto rel = p.lexically_relative(root.lexically_normal());
  return !rel.empty() && *rel.begin() != "..";
}

}  // namespace

GridManager::GridManager(GmConfig config, lrms::Lrms& lrms, net::Transport& transport, Clock& clock)
    : config_(std::move(config)), lrms_(lrms), transport_(transport), clock_(clock), status_(config_.control_dir) {
  fs::create_directories(config_.session_root);
  for (auto& r : status_.load_all(config_.session_root)) {
    auto dash = r.gridid.rfind('-');
    auto colon = r.gridid.rfind(':');
    if (colon != std::string::npos && dash != std::string::npos && dash > colon) {
      if (auto n = parse_uint(r.gridid.substr(colon + 1, dash - colon - 1))) counter_ = std::max(counter_, *n);
    }
    auto s = std::make_shared<Slot>();
    s->rec = std::move(r);
    jobs_.emplace(s->rec.gridid, std::move(s));
  }
}

std::string GridManager::pick_queue(const xrsl::JobDescription& job) const {
  const auto& queues = lrms_.queues();
  if (!job.queue.empty()) {
    for (const auto& q : queues)
      if (q.name == job.queue) return q.name;
    throw GmError(400, "unknown queue " + job.queue);
  }
  for (const auto& q : queues) {
    if (job.cputime <= q.max_cputime && job.memory <= q.max_memory && job.disk <= q.max_disk) return q.name;
  }
  return queues.front().name;
}

std::string GridManager::submit(const std::string& owner, xrsl::JobDescription job) {
  if (job.action != xrsl::Action::Submit) throw GmError(400, "not a submission");
  try {
    xrsl::validate(job);
  } catch (const xrsl::ValidationError& e) {
    throw GmError(400, e.what());
  }
  JobRecord r;
  r.queue = pick_queue(job);
  r.owner = owner;
  r.lifetime = job.lifetime ? Duration{std::chrono::seconds(job.lifetime)} : config_.default_lifetime;
  r.job = std::move(job);
  r.state = JobState::Accepted;
  r.created = r.modified = r.phase_started = clock_.now();
  auto s = std::make_shared<Slot>();
  {
    std::lock_guard lock(mu_);
    r.gridid = config_.cluster_host + ":" + std::to_string(++counter_) + "-" + random_hex(6);
    r.session_dir = config_.session_root / r.gridid;
    fs::create_directories(r.session_dir);
    status_.create(r);
    s->rec = r;
    jobs_.emplace(r.gridid, s);
  }
  return r.gridid;
}

std::shared_ptr<GridManager::Slot> GridManager::slot(const std::string& gridid) const {
  std::lock_guard lock(mu_);
  auto it = jobs_.find(gridid);
  if (it == jobs_.end()) throw GmError(404, "unknown job " + gridid);
  return it->second;
}

std::shared_ptr<GridManager::Slot> GridManager::owned_slot(const std::string& gridid,
                                                           const std::string& subject) const {
  auto s = slot(gridid);
  std::lock_guard lock(s->mu);
  if (s->rec.state == JobState::Deleted) throw GmError(404, "job " + gridid + " deleted");
  if (s->rec.owner != subject) throw GmError(403, "not the owner of " + gridid);
  return s;
}

void GridManager::cancel(const std::string& gridid, const std::string& subject) {
  auto s = owned_slot(gridid, subject);
  std::lock_guard lock(s->mu);
  apply(s->rec, JobEvent::Cancel);
}

void GridManager::clean(const std::string& gridid, const std::string& subject) {
  auto s = owned_slot(gridid, subject);
  std::lock_guard lock(s->mu);
  JobRecord& r = s->rec;
  if (r.state == JobState::Deleted) return;
  r.clean_requested = true;
  if (is_active(r.state))
    apply(r, JobEvent::Clean);
  else
    status_.save(r);
}

void GridManager::fault(std::string_view point, const JobRecord& r) const {
  if (config_.fault_hook) config_.fault_hook(point, r);
}

bool GridManager::apply(JobRecord& r, JobEvent e, std::string reason) {
  auto to = next_state(r.state, e);
  if (!to) return false;
  JobState from = r.state;
  r.state = *to;
  r.modified = clock_.now();
  r.phase_started = r.modified;
  if (!reason.empty()) r.failure_reason = std::move(reason);
  status_.save(r);
  notify(r, from, *to);
  return true;
}

void GridManager::notify(const JobRecord& r, JobState from, JobState to) {
  if (r.job.notify.empty()) return;
  std::string line = rfc3339(clock_.now()) + " " + r.gridid + " " + std::string(state_name(from)) + "->" +
                     std::string(state_name(to)) + " notify:" + r.job.notify;
  std::lock_guard lock(notify_mu_);
  append_line(notification_log(), line);
}

void GridManager::step_all() {
  std::vector<std::shared_ptr<Slot>> slots;
  {
    std::lock_guard lock(mu_);
    for (auto& [id, s] : jobs_) slots.push_back(s);
  }
  for (auto& s : slots) {
    std::lock_guard lock(s->mu);
    guarded_advance(s->rec);
  }
}

bool GridManager::step(const std::string& gridid) {
  auto s = slot(gridid);
  std::lock_guard lock(s->mu);
  return guarded_advance(s->rec);
}

bool GridManager::guarded_advance(JobRecord& r) {
  try {
    return advance(r);
  } catch (const InjectedCrash&) {
    throw;
  } catch (const std::exception& e) {
    try {
      return apply(r, JobEvent::Failure, std::string("internal error: ") + e.what());
    } catch (const std::exception&) {
      return false;
    }
  }
}

bool GridManager::advance(JobRecord& r) {
  switch (r.state) {
    case JobState::Accepted:
      return apply(r, JobEvent::Prepare);

    case JobState::Preparing:
      return prepare(r);

    case JobState::InlrmsQ: {
      auto lj = r.local_id ? lrms_.find(*r.local_id) : std::nullopt;
      if (!lj) return apply(r, JobEvent::Failure, "job lost by LRMS");
      if (lj->state != lrms::LocalState::Queued) return apply(r, JobEvent::LrmsRunning);
      return false;
    }

    case JobState::InlrmsR: {
      auto lj = r.local_id ? lrms_.find(*r.local_id) : std::nullopt;
      if (!lj) return apply(r, JobEvent::Failure, "job lost by LRMS");
      if (lj->state != lrms::LocalState::Exited) return false;
      r.exit_code = lj->exit_code;
      return apply(r, JobEvent::LrmsExited);
    }

    case JobState::Finishing:
      return finish_outputs(r);

    case JobState::Canceling: {
      if (r.local_id) {
        if (auto lj = lrms_.find(*r.local_id); lj && lj->state != lrms::LocalState::Exited) {
          lrms_.qdel(*r.local_id);
          r.exit_code = lrms::kExitDeleted;
        }
      }
      return apply(r, JobEvent::CancelDone, "cancelled");
    }

    case JobState::Finished:
    case JobState::Failed: {
      JobEvent e;
      if (r.clean_requested)
        e = JobEvent::Clean;
      else if (clock_.now() - r.modified >= r.lifetime)
        e = JobEvent::LifetimeExpired;
      else
        return false;
      std::error_code ec;
      fs::remove_all(r.session_dir, ec);
      return apply(r, e);
    }

    case JobState::Deleted:
      return false;
  }
  return false;
}

void GridManager::with_retries(const std::function<void()>& fn) {
  for (int attempt = 0;; ++attempt) {
    try {
      fn();
      return;
    } catch (const std::exception&) {
      if (attempt >= config_.retries) throw;
      clock_.sleep_for(config_.retry_backoff);
    }
  }
}

fs::path GridManager::session_path(const JobRecord& r, const std::string& name) const {
  fs::path p = (r.session_dir / name).lexically_normal();
  if (!under(p, r.session_dir)) throw GmError(400, "file name escapes session directory: " + name);
  return p;
}

void GridManager::fetch_input(const JobRecord& r, const xrsl::InputFile& in) {
  fs::path dest = session_path(r, in.name);
  fs::create_directories(dest.parent_path());
  fs::path part = dest;
  part += ".part";
  std::string source = in.source;
  if (starts_with(source, "rc:")) {
    if (config_.rc_endpoint.empty()) throw Error("no replica catalog configured");
    std::string lfn = source.substr(3);
    while (starts_with(lfn, "/")) lfn = lfn.substr(1);
    wire::Request req{wire::Verb::Lookup, "/rc/" + lfn, {{"Subject", config_.subject}}, {}};
    wire::Response resp = transport_.call(config_.rc_endpoint, req, "cluster");
    if (!resp.ok()) throw Error("unresolved input " + lfn);
    source = trim(split(resp.body, '\n').front());
  }
  if (starts_with(source, "ngse://")) {
    SeUrl u = parse_se_url(source);
    wire::Request req{wire::Verb::Get, u.path, {{"Subject", config_.subject}}, {}};
    wire::Response resp = transport_.call(u.endpoint, req, "cluster");
    if (!resp.ok()) throw Error("GET " + source + ": " + std::to_string(resp.code) + " " + resp.reason);
    write_file_atomic(part, resp.body);
  } else if (starts_with(source, "file:")) {
    fs::path src = file_url_path(source);
    bool allowed = std::any_of(config_.local_se_paths.begin(), config_.local_se_paths.end(),
                               [&](const fs::path& root) { return under(src, root); });
    if (!allowed) throw Error("not on a local storage element: " + src.string());
    fs::copy_file(src, part, fs::copy_options::overwrite_existing);
  } else {
    throw Error("unsupported source " + source);
  }
  fs::rename(part, dest);
}

bool GridManager::prepare(JobRecord& r) {
  if (r.job.disk) {
    std::error_code ec;
    auto space = fs::space(r.session_dir, ec);
    if (!ec && space.available < r.job.disk * 1024 * 1024)
      return apply(r, JobEvent::Failure, "insufficient disk space");
  }
  for (const auto& in : r.job.inputfiles) {
    if (in.source.empty() || fs::exists(session_path(r, in.name))) continue;
    try {
      with_retries([&] { fetch_input(r, in); });
    } catch (const std::exception&) {
      return apply(r, JobEvent::Failure, "stage-in failed: " + in.name);
    }
  }
  for (const auto& in : r.job.inputfiles) {
    if (!in.source.empty() || fs::exists(session_path(r, in.name))) continue;
    if (clock_.now() - r.phase_started >= config_.upload_timeout)
      return apply(r, JobEvent::Failure, "input not uploaded: " + in.name);
    return false;  // still waiting for the user
  }

  fs::path script = write_job_script(r);
  if (!r.local_id) {
    r.local_id = lrms_.allocate_id();
    status_.save(r);
  }
  fault("after-localid", r);
  lrms::Limits limits{r.job.cputime, r.job.memory};
  try {
    lrms_.qsub(*r.local_id, script, r.session_dir, r.queue, limits);
  } catch (const lrms::LrmsError& e) {
    return apply(r, JobEvent::Failure, std::string("LRMS submission failed: ") + e.what());
  }
  fault("after-qsub", r);
  return apply(r, JobEvent::StageInDone);
}

fs::path GridManager::write_job_script(const JobRecord& r) const {
  const auto& job = r.job;
  std::string exe = job.executable;
  bool staged = std::any_of(job.inputfiles.begin(), job.inputfiles.end(),
                            [&](const xrsl::InputFile& f) { return f.name == exe; });
  if (exe.front() != '/' && (staged || fs::exists(r.session_dir / exe))) {
    std::error_code ec;
    fs::permissions(r.session_dir / exe, fs::perms::owner_exec | fs::perms::group_exec, fs::perm_options::add, ec);
    if (!starts_with(exe, "./")) exe = "./" + exe;
  }
  std::string line = "exec " + shell_quote(exe);
  for (const auto& a : job.arguments) line += " " + shell_quote(a);
  line += " </dev/null";
  line += " >" + (job.stdout_file.empty() ? std::string("/dev/null") : shell_quote(job.stdout_file));
  line += " 2>" + (job.stderr_file.empty() ? std::string("/dev/null") : shell_quote(job.stderr_file));
  std::string text = "#!/bin/sh\n# grid job " + r.gridid + "\n" + line + "\n";
  fs::path p = status_.job_dir(r.gridid) / "job.sh";
  write_file_atomic(p, text);
  return p;
}

void GridManager::store_output(const JobRecord& r, const xrsl::OutputFile& out) {
  fs::path src = session_path(r, out.name);
  if (starts_with(out.destination, "ngse://")) {
    SeUrl u = parse_se_url(out.destination);
    wire::Request put{wire::Verb::Put, u.path, {{"Subject", config_.subject}, {"Overwrite", "true"}}, {}};
    put.set_body(read_file(src));
    wire::Response resp = transport_.call(u.endpoint, put, "cluster");
    if (!resp.ok()) throw Error("PUT " + out.destination + ": " + std::to_string(resp.code));
    if (!u.lfn.empty()) {
      if (config_.rc_endpoint.empty()) throw Error("no replica catalog configured");
      wire::Request reg{wire::Verb::Reg,
                        "/rc/" + u.lfn,
                        {{"Subject", config_.subject}, {"Lfn", u.lfn}, {"Pfn", strip_query(out.destination)}},
                        {}};
      wire::Response rr = transport_.call(config_.rc_endpoint, reg, "cluster");
      if (!rr.ok()) throw Error("REG " + u.lfn + ": " + std::to_string(rr.code));
    }
  } else if (starts_with(out.destination, "file:")) {
    fs::path dst = file_url_path(out.destination);
    bool allowed = std::any_of(config_.local_se_paths.begin(), config_.local_se_paths.end(),
                               [&](const fs::path& root) { return under(dst, root); });
    if (!allowed) throw Error("not on a local storage element: " + dst.string());
    fs::create_directories(dst.parent_path());
    fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
  } else {
    throw Error("unsupported destination " + out.destination);
  }
}

bool GridManager::finish_outputs(JobRecord& r) {
  for (const auto& out : r.job.outputfiles) {
    if (!fs::exists(session_path(r, out.name)))
      return apply(r, JobEvent::Failure, "stage-out failed: " + out.name + " not produced");
  }
  for (const auto& out : r.job.outputfiles) {
    if (out.destination.empty()) continue;
    try {
      with_retries([&] { store_output(r, out); });
    } catch (const std::exception&) {
      return apply(r, JobEvent::Failure, "stage-out failed: " + out.name);
    }
  }
  if (r.exit_code == lrms::kExitLimitExceeded) return apply(r, JobEvent::Failure, "cputime limit exceeded");
  return apply(r, JobEvent::StageOutDone);
}

void GridManager::put_session_file(const std::string& gridid, const std::string& subject, const std::string& name,
                                   std::string_view bytes) {
  auto s = owned_slot(gridid, subject);
  std::lock_guard lock(s->mu);
  const JobRecord& r = s->rec;
  if (r.state != JobState::Accepted && r.state != JobState::Preparing)
    throw GmError(409, "job " + gridid + " no longer accepts uploads");
  bool declared = std::any_of(r.job.inputfiles.begin(), r.job.inputfiles.end(),
                              [&](const xrsl::InputFile& f) { return f.name == name && f.source.empty(); });
  if (!declared) throw GmError(409, name + " is not a user-uploaded input");
  fs::path p = session_path(r, name);
  fs::create_directories(p.parent_path());
  write_file_atomic(p, bytes);
}

std::string GridManager::get_session_file(const std::string& gridid, const std::string& subject,
                                          const std::string& name) {
  auto s = owned_slot(gridid, subject);
  std::lock_guard lock(s->mu);
  fs::path p = session_path(s->rec, name);
  if (!fs::is_regular_file(p)) throw GmError(404, "no such file " + name);
  return read_file(p);
}

std::vector<SessionFile> GridManager::list_session(const std::string& gridid, const std::string& subject) {
  auto s = owned_slot(gridid, subject);
  std::lock_guard lock(s->mu);
  std::vector<SessionFile> out;
  for (const auto& o : s->rec.job.outputfiles) {
    if (!o.destination.empty()) continue;
    fs::path p = session_path(s->rec, o.name);
    if (fs::is_regular_file(p)) out.push_back({o.name, fs::file_size(p)});
  }
  return out;
}

std::optional<JobRecord> GridManager::find(const std::string& gridid) const {
  std::shared_ptr<Slot> s;
  {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(gridid);
    if (it == jobs_.end()) return std::nullopt;
    s = it->second;
  }
  std::lock_guard lock(s->mu);
  return s->rec;
}

std::vector<JobRecord> GridManager::jobs() const {
  std::vector<std::shared_ptr<Slot>> slots;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, s] : jobs_) slots.push_back(s);
  }
  std::vector<JobRecord> out;
  for (auto& s : slots) {
    std::lock_guard lock(s->mu);
    out.push_back(s->rec);
  }
  return out;
}

std::size_t GridManager::active_count() const {
  std::size_t n = 0;
  for (const auto& r : jobs())
    if (r.state != JobState::Deleted) ++n;
  return n;
}

std::vector<info::JobInfo> GridManager::job_infos() const {
  std::vector<info::JobInfo> out;
  for (const auto& r : jobs()) {
    if (r.state == JobState::Deleted) continue;
    info::JobInfo j;
    j.gridid = r.gridid;
    j.owner = r.owner;
    j.status = std::string(state_name(r.state));
    j.queue = r.queue;
    j.jobname = r.job.jobname;
    j.submitted = r.created;
    if (r.state != JobState::Canceling && (r.state == JobState::Finishing || is_terminal(r.state)))
      j.exit_code = r.exit_code;
    j.failure = r.failure_reason;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace ng::gm
