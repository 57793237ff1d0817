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

#include "ng/cluster.hpp"

#include <algorithm>

#include "ng/xrsl.hpp"

namespace ng::cluster {

ClusterService::ClusterService(ClusterConfig config, net::Transport& transport, Clock& clock)
    : config_(std::move(config)), transport_(transport), clock_(clock), lrms_(config_.queues, clock) {
  if (config_.subject.empty()) config_.subject = "/O=Grid/CN=" + config_.name;
  fs::create_directories(config_.dir);
  gm_ = std::make_shared<gm::GridManager>(gm_config(), lrms_, transport_, clock_);
  if (!config_.parent_giis.empty())
    registrar_.emplace(config_.parent_giis, config_.endpoint, info::ChildKind::Gris, config_.ttl, config_.subject);
}

ClusterService::~ClusterService() = default;

gm::GmConfig ClusterService::gm_config() const {
  gm::GmConfig g;
  g.cluster_host = config_.name;
  g.control_dir = config_.dir / "control";
  g.session_root = config_.dir / "sessions";
  g.local_se_paths = config_.local_se_paths;
  g.rc_endpoint = config_.rc_endpoint;
  g.subject = config_.subject;
  g.default_lifetime = config_.default_lifetime;
  // indirection so a hook installed later reaches an existing manager
  g.fault_hook = [this](std::string_view point, const gm::JobRecord& r) {
    std::function<void(std::string_view, const gm::JobRecord&)> hook;
    {
      std::lock_guard lock(hook_mu_);
      hook = fault_hook_;
    }
    if (hook) hook(point, r);
  };
  return g;
}

std::shared_ptr<gm::GridManager> ClusterService::gm() const {
  std::lock_guard lock(gm_mu_);
  return gm_;
}

void ClusterService::restart_gm() {
  std::lock_guard tick(tick_mu_);
  auto fresh = std::make_shared<gm::GridManager>(gm_config(), lrms_, transport_, clock_);
  std::lock_guard lock(gm_mu_);
  gm_ = std::move(fresh);
}

void ClusterService::set_fault_hook(std::function<void(std::string_view, const gm::JobRecord&)> hook) {
  std::lock_guard lock(hook_mu_);
  fault_hook_ = std::move(hook);
}

void ClusterService::tick() {
  std::lock_guard lock(tick_mu_);
  if (registrar_) registrar_->tick(transport_, clock_, "cluster");
  lrms_.scheduler_tick();
  gm()->step_all();
}

info::ClusterState ClusterService::state() const {
  info::ClusterState c;
  c.name = config_.name;
  c.country = config_.country;
  c.aliases = config_.aliases;
  c.total_cpus = lrms_.total_cpus();
  c.free_cpus = lrms_.free_cpus();
  c.runtimeenvironments = {config_.runtimeenvironments.begin(), config_.runtimeenvironments.end()};
  for (const auto& p : config_.local_se_paths) c.local_se_paths.push_back(p.string());
  for (const auto& q : lrms_.queues()) {
    info::QueueState s;
    s.name = q.name;
    s.max_cputime = q.max_cputime;
    s.max_memory = q.max_memory;
    s.max_disk = q.max_disk;
    s.cpus = q.cpus;
    s.running = lrms_.running_in(q.name);
    s.queued = lrms_.queued_in(q.name);
    s.free_cpus_for_user = std::min(std::max(0, q.cpus - s.running), c.free_cpus);
    s.effective_queue_length = s.queued;
    c.queues.push_back(std::move(s));
  }
  c.authorized = config_.gridmap;
  c.contact = "ngp://" + config_.endpoint;
  return c;
}

std::vector<info::Entry> ClusterService::snapshot() const {
  info::ClusterState c = state();
  return info::gris_snapshot(c, gm()->job_infos(), c.authorized);
}

std::vector<std::string> ClusterService::gatekeeper_log() const {
  std::lock_guard lock(log_mu_);
  return log_;
}

void ClusterService::log(const wire::Request& req, const std::string& gridid, int code) {
  std::string line = std::string(wire::to_string(req.verb)) + " " + req.headers.get("Subject") + " " +
                     (gridid.empty() ? "-" : gridid) + " " + std::to_string(code);
  std::lock_guard lock(log_mu_);
  log_.push_back(line);
  append_line(config_.dir / "gatekeeper.log", line);
}

wire::Response ClusterService::handle(const wire::Request& req) {
  using wire::Verb;
  try {
    if (req.verb == Verb::Query) {
      info::Filter f = info::parse_filter(req.headers.get("Filter", "(objectclass=*)"));
      return wire::make_response(200, "OK", info::serialize_entries(info::select(f, snapshot())));
    }
    if (req.target == "/jobs") return gatekeep(req);
    if (starts_with(req.target, "/sessions/")) return session(req);
    return wire::error_response(404, "no such target " + req.target);
  } catch (const gm::GmError& e) {
    return wire::error_response(e.code(), e.what());
  } catch (const ParseError& e) {
    return wire::error_response(400, e.what());
  }
}

wire::Response ClusterService::gatekeep(const wire::Request& req) {
  using wire::Verb;
  const std::string subject = req.headers.get("Subject");
  std::string gridid = req.headers.get("GridId");
  auto fail = [&](int code, const std::string& msg) {
    log(req, gridid, code);
    return wire::error_response(code, msg);
  };
  if (req.verb != Verb::Submit && req.verb != Verb::Cancel && req.verb != Verb::Clean)
    return fail(400, "unsupported verb " + std::string(wire::to_string(req.verb)) + " on /jobs");
  if (!wire::authorize(subject, config_.gridmap)) return fail(403, "subject not in grid-map: " + subject);

  xrsl::Action action = req.verb == Verb::Submit   ? xrsl::Action::Submit
                        : req.verb == Verb::Cancel ? xrsl::Action::Cancel
                                                   : xrsl::Action::Clean;
  std::optional<xrsl::JobDescription> job;
  if (!req.body.empty() || req.verb == Verb::Submit) {
    try {
      job = xrsl::parse_job(req.body);
    } catch (const ParseError& e) {
      return fail(400, std::string("xrsl: ") + e.what());
    } catch (const xrsl::ValidationError& e) {
      return fail(400, std::string("xrsl: ") + e.what());
    }
    if (req.verb == Verb::Submit)
      action = job->action;
    else if (job->action != action)
      return fail(400, "action attribute does not match the verb");
  }

  if (action == xrsl::Action::Submit) {
    try {
      gridid = gm()->submit(subject, std::move(*job));
    } catch (const gm::GmError& e) {
      return fail(e.code(), e.what());
    }
    log(req, gridid, 200);
    wire::Response r = wire::make_response(200);
    r.headers.set("GridId", gridid);
    return r;
  }

  if (gridid.empty()) return fail(400, "GridId header required");
  try {
    if (action == xrsl::Action::Cancel)
      gm()->cancel(gridid, subject);
    else
      gm()->clean(gridid, subject);
  } catch (const gm::GmError& e) {
    return fail(e.code(), e.what());
  }
  log(req, gridid, 200);
  wire::Response r = wire::make_response(200);
  r.headers.set("GridId", gridid);
  return r;
}

wire::Response ClusterService::session(const wire::Request& req) {
  using wire::Verb;
  const std::string subject = req.headers.get("Subject");
  std::string rest = req.target.substr(std::string_view("/sessions/").size());
  auto slash = rest.find('/');
  std::string gridid = rest.substr(0, slash);
  std::string name = slash == std::string::npos ? std::string() : rest.substr(slash + 1);
  if (gridid.empty()) return wire::error_response(400, "missing gridid");
  auto g = gm();
  switch (req.verb) {
    case Verb::Put:
      if (name.empty()) return wire::error_response(400, "missing file name");
      g->put_session_file(gridid, subject, name, req.body);
      return wire::make_response(200);
    case Verb::Get:
      if (name.empty()) return wire::error_response(400, "missing file name");
      return wire::make_response(200, "OK", g->get_session_file(gridid, subject, name));
    case Verb::List: {
      std::string body;
      for (const auto& f : g->list_session(gridid, subject)) body += std::to_string(f.size) + " " + f.name + "\n";
      return wire::make_response(200, "OK", body);
    }
    default:
      return wire::error_response(400, "unsupported verb " + std::string(wire::to_string(req.verb)) + " on sessions");
  }
}

}  // namespace ng::cluster
