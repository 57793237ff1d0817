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

#include "ng/harness.hpp"

#include <sstream>
#include <thread>

namespace ng::harness {

namespace {

void advance(fleet::Fleet& fleet, Duration d) {
  if (auto* manual = dynamic_cast<ManualClock*>(&fleet.clock()))
    manual->advance(d);
  else
    std::this_thread::sleep_for(d);
}

bool any_running(fleet::Fleet& fleet) {
  for (const auto& name : fleet.cluster_names())
    if (fleet.cluster(name).lrms().free_cpus() < fleet.cluster(name).lrms().total_cpus()) return true;
  return false;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  if (from.empty()) return s;
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
    s.replace(pos, from.size(), to);
  return s;
}

class Run {
 public:
  Run(fleet::Fleet& fleet, const TaskflowOptions& opt)
      : fleet_(fleet), opt_(opt), start_(fleet.clock().now()), client_(fleet.network(), opt.subject, fleet.top_giis()) {}

  Transcript go();

 private:
  void event(std::string step, std::string detail = {}) {
    t_.events.push_back({std::chrono::duration_cast<Duration>(fleet_.clock().now() - start_), std::move(step),
                         std::move(detail)});
  }
  [[noreturn]] void fail(const std::string& step, const std::string& why) {
    t_.failed_step = step;
    event("timeout", step + (why.empty() ? "" : ": " + why));
    throw Error(step);
  }
  /// One iteration: tick every service, let real processes make progress,
  /// then look at what changed.
  void tick();
  void observe();
  std::optional<gm::JobRecord> record();
  std::string gris_status();
  void wait_for(const std::string& step, const std::function<bool()>& pred);

  fleet::Fleet& fleet_;
  const TaskflowOptions& opt_;
  TimePoint start_;
  ui::Client client_;
  Transcript t_;
  std::size_t ledger_seen_ = 0;
  std::string last_status_;
  bool saw_lrms_run_ = false;
  bool cancelled_ = false;
  bool restarted_ = false;
  bool crashed_ = false;
  std::optional<std::int64_t> local_id_;
};

std::optional<gm::JobRecord> Run::record() {
  if (t_.cluster.empty() || t_.gridid.empty()) return std::nullopt;
  return fleet_.cluster(t_.cluster).gm()->find(t_.gridid);
}

std::string Run::gris_status() {
  auto& c = fleet_.cluster(t_.cluster);
  wire::Request req{wire::Verb::Query, "/mds", {{"Subject", opt_.subject}}, {}};
  info::Filter f = info::Filter::and_({info::Filter::eq("objectclass", std::string(info::oc::kJob)),
                                       info::Filter::eq("nordugrid-pbsjob-globalid", info::escape_value(t_.gridid))});
  req.headers.set("Filter", info::to_string(f));
  wire::Response r = fleet_.network().call(c.config().endpoint, req, "ui");
  auto entries = info::parse_entries(r.body);
  return entries.empty() ? "UNKNOWN" : entries.front().get("nordugrid-pbsjob-status");
}

void Run::tick() {
  try {
    fleet_.tick();
  } catch (const gm::InjectedCrash& e) {
    event("gm-crash", e.what());
    fleet_.cluster(t_.cluster).set_fault_hook(nullptr);
    fleet_.cluster(t_.cluster).restart_gm();
    event("gm-restart", "after crash");
  }
  if (any_running(fleet_)) std::this_thread::sleep_for(std::chrono::milliseconds(2));
  advance(fleet_, opt_.tick);
  observe();
}

void Run::observe() {
  auto rows = fleet_.network().ledger().snapshot();
  for (; ledger_seen_ < rows.size(); ++ledger_seen_) {
    const auto& r = rows[ledger_seen_];
    if (r.from == "se" && r.to == "cluster" && r.purpose == net::Purpose::Payload)
      event("stage-in", "se->cluster " + std::to_string(r.bytes) + " bytes");
    else if (r.from == "cluster" && r.to == "se" && r.purpose == net::Purpose::Payload)
      event("stage-out", "cluster->se " + std::to_string(r.bytes) + " bytes");
    else if (r.from == "cluster" && r.to == "rc" && r.verb == wire::Verb::Reg)
      event("rc-register");
  }
  if (t_.gridid.empty()) return;

  std::string status = gris_status();
  if (status != last_status_) {
    event("status", status);
    last_status_ = status;
  }
  auto rec = record();
  if (!rec) return;
  if (rec->local_id && !local_id_) {
    local_id_ = rec->local_id;
    if (rec->state == gm::JobState::InlrmsQ || rec->state == gm::JobState::InlrmsR)
      event("qsub", "local id " + std::to_string(*local_id_));
  }
  if (local_id_ && !saw_lrms_run_) {
    auto lj = fleet_.cluster(t_.cluster).lrms().find(*local_id_);
    if (lj && lj->started) {
      saw_lrms_run_ = true;
      event("run", "local id " + std::to_string(*local_id_));
    }
  }
  if (opt_.cancel_at && !cancelled_ && rec->state == *opt_.cancel_at) {
    cancelled_ = true;
    client_.cancel(t_.gridid);
    event("cancel", std::string("in ") + std::string(gm::state_name(rec->state)));
    rec = record();  // the cancel moved it to CANCELING
  }
  if (opt_.restart_at && !restarted_ && rec->state == *opt_.restart_at) {
    restarted_ = true;
    fleet_.cluster(t_.cluster).restart_gm();
    event("gm-restart", std::string("in ") + std::string(gm::state_name(rec->state)));
  }
}

void Run::wait_for(const std::string& step, const std::function<bool()>& pred) {
  TimePoint deadline = fleet_.clock().now() + opt_.phase_timeout;
  auto real_deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
  while (!pred()) {
    if (fleet_.clock().now() >= deadline || std::chrono::steady_clock::now() >= real_deadline) fail(step, {});
    tick();
  }
}

Transcript Run::go() {
  try {
    fleet_.boot();
    observe();
    xrsl::JobDescription job = xrsl::parse_job(opt_.xrsl);

    // 1: filtered query against the GIIS
    ui::Discovery d = client_.discover();
    event("giis-query", std::to_string(d.clusters.size()) + " clusters" + (d.partial ? " (partial)" : ""));

    // 1: replica catalog lookup
    for (const auto& r : client_.resolve_inputs(job)) event("rc-lookup", r.name + " -> " + r.chosen_pfn);

    // 2-3: match and submit
    auto ranked = ui::match(job, opt_.subject, d.clusters);
    if (ranked.empty()) fail("match", "no feasible cluster");
    const ui::Candidate& target = ranked.front();
    fs::path local = opt_.workdir.empty() ? fleet_.config().dir / "ui" : opt_.workdir;
    fs::create_directories(local / "upload");
    for (const auto& [name, content] : opt_.uploads) {
      fs::create_directories((local / "upload" / name).parent_path());
      write_file_atomic(local / "upload" / name, content);
    }
    t_.cluster = target.cluster;
    if (opt_.crash_after_localid) {
      fleet_.cluster(t_.cluster).set_fault_hook([this](std::string_view point, const gm::JobRecord&) {
        if (point == "after-localid" && !crashed_) {
          crashed_ = true;
          throw gm::InjectedCrash("killed after recording the LRMS id");
        }
      });
    }
    t_.gridid = client_.submit(job, target, local / "upload", /*upload=*/false);
    event("submit", t_.gridid + " to " + target.cluster + " queue " + target.queue.name);
    if (!opt_.se_down.empty()) {
      const fleet::SeSpec* se = fleet_.config().find_se(opt_.se_down);
      if (!se) fail("se-down", "no se " + opt_.se_down);
      fleet_.network().set_down(se->endpoint(), true);
      event("se-down", opt_.se_down);
    }
    observe();

    // 4: stage-in runs on the cluster while 5: the user uploads
    bool has_remote = false;
    for (const auto& in : job.inputfiles) has_remote = has_remote || !in.source.empty();
    auto staged = [&] {
      auto rec = record();
      if (!rec || rec->state != gm::JobState::Preparing) return rec && rec->state != gm::JobState::Accepted;
      for (const auto& in : job.inputfiles)
        if (!in.source.empty() && !fs::exists(rec->session_dir / in.name)) return false;
      return true;
    };
    if (has_remote) wait_for("stage-in", staged);
    auto rec = record();
    if (rec && (rec->state == gm::JobState::Accepted || rec->state == gm::JobState::Preparing)) {
      bool any = false;
      for (const auto& in : job.inputfiles) any = any || in.source.empty();
      if (any) {
        try {
          client_.upload_inputs(t_.gridid, target.contact, job, local / "upload");
          for (const auto& in : job.inputfiles)
            if (in.source.empty())
              event("upload", in.name + " " + std::to_string(fs::file_size(local / "upload" / in.name)) + " bytes");
        } catch (const std::exception& e) {
          event("upload-failed", e.what());
        }
      }
    }

    // 6-11: run to a terminal state
    wait_for("completion", [&] {
      auto r = record();
      return r && gm::is_terminal(r->state);
    });
    rec = record();
    t_.final_state = std::string(gm::state_name(rec->state));
    t_.failure = rec->failure_reason;
    if (rec->local_id) t_.lrms_executions = fleet_.cluster(t_.cluster).lrms().executions(*rec->local_id);
    event("final", t_.final_state + (t_.failure.empty() ? "" : " \"" + t_.failure + "\""));

    // 11: download retained outputs
    if (rec->state == gm::JobState::Finished) {
      fs::path out = local / "download";
      for (const auto& name : client_.fetch_outputs(t_.gridid, out)) {
        t_.downloads[name] = read_file(out / name);
        event("download", name + " " + std::to_string(t_.downloads[name].size()) + " bytes");
      }
      for (const auto& o : job.outputfiles) {
        auto q = o.destination.find("?lfn=");
        if (q == std::string::npos) continue;
        std::string lfn = o.destination.substr(q + 5);
        wire::Response r =
            fleet_.network().call(fleet_.rc_endpoint(), {wire::Verb::Lookup, "/rc/" + lfn, {{"Subject", opt_.subject}}, {}}, "ui");
        event("rc-verify", lfn + " -> " + (r.ok() ? trim(r.body) : std::string("missing")));
      }
    }

    // 12: the GIIS refreshes once its cache times out
    std::string via_giis = client_.status(t_.gridid);
    std::size_t before = 0;
    for (const auto& g : fleet_.config().giis)
      for (const auto& c : fleet_.giis(g.name).children()) before += c.fetches;
    Duration longest{};
    for (const auto& g : fleet_.config().giis) longest = std::max(longest, g.ttl);
    for (const auto& c : fleet_.config().clusters) longest = std::max(longest, c.ttl);
    advance(fleet_, longest + opt_.tick);
    fleet_.tick();
    via_giis = client_.status(t_.gridid);
    std::size_t after = 0;
    for (const auto& g : fleet_.config().giis)
      for (const auto& c : fleet_.giis(g.name).children()) after += c.fetches;
    event("giis-refresh", std::to_string(after - before) + " upstream fetches, status " + via_giis);
  } catch (const std::exception& e) {
    if (t_.failed_step.empty()) {
      t_.failed_step = "error";
      event("error", e.what());
    }
  }
  t_.ledger = fleet_.network().ledger().snapshot();
  return std::move(t_);
}

}  // namespace

bool Transcript::has(std::string_view step) const {
  for (const auto& e : events)
    if (e.step == step) return true;
  return false;
}

std::string Transcript::render(bool mask) const {
  std::ostringstream out;
  for (const auto& e : events) {
    std::string detail = e.detail;
    if (mask) {
      detail = replace_all(detail, gridid, "<gridid>");
      out << "T+*";
    } else {
      out << "T+" << e.at.count() << "ms";
    }
    out << " " << e.step;
    if (!detail.empty()) out << " " << detail;
    out << "\n";
  }
  return out.str();
}

Transcript run_taskflow(fleet::Fleet& fleet, const TaskflowOptions& options) { return Run(fleet, options).go(); }

bool peer_to_peer(const std::vector<net::TransferRecord>& ledger, std::string* violation) {
  auto allowed = [](const std::string& a, const std::string& b) {
    auto edge = [&](const char* x, const char* y) { return (a == x && b == y) || (a == y && b == x); };
    return edge("ui", "cluster") || edge("ui", "se") || edge("cluster", "se");
  };
  for (const auto& r : ledger) {
    if (r.purpose != net::Purpose::Payload || r.bytes == 0) continue;
    if (!allowed(r.from, r.to)) {
      if (violation)
        *violation = r.from + "->" + r.to + " " + std::to_string(r.bytes) + " payload bytes (" +
                     std::string(wire::to_string(r.verb)) + ")";
      return false;
    }
  }
  return true;
}

std::string demo_fleet_config(const fs::path& dir, double ttl_seconds) {
  std::ostringstream ttl;
  ttl << ttl_seconds;
  std::string t = ttl.str();
  std::ostringstream c;
  c << "dir = " << dir.string() << "\n"
    << "host = 127.0.0.1\n\n"
    << "[giis \"top\"]\nport = 39300\ncountry = grid\nttl = " << t << "\n\n"
    << "[giis \"se\"]\nport = 39301\ncountry = se\nparent_giis = top\nttl = " << t << "\n\n"
    << "[giis \"no\"]\nport = 39302\ncountry = no\nparent_giis = top\nttl = " << t << "\n\n"
    << "[cluster \"alpha.se.example\"]\nport = 39000\ncountry = se\nparent_giis = se\n"
    << "queues = short:600:512:1024:4, long:86400:2048:4096:2\n"
    << "runtimeenvironment = OS/LINUX-2.4\nruntimeenvironment = APPS/HEP/ATLAS-1.0\n"
    << "allow = /O=Grid/*\nlocalse = se1\nttl = " << t << "\n\n"
    << "[cluster \"beta.se.example\"]\nport = 39001\ncountry = se\nparent_giis = se\n"
    << "queues = batch:3600:1024:2048:2\nruntimeenvironment = OS/LINUX-2.4\n"
    << "allow = /O=Grid/*\nttl = " << t << "\n\n"
    << "[cluster \"gamma.no.example\"]\nport = 39002\ncountry = no\nparent_giis = no\n"
    << "queues = normal:7200:4096:8192:1\nruntimeenvironment = OS/LINUX-2.4\n"
    << "allow = /O=Grid/O=NorduGrid/*\nttl = " << t << "\n\n"
    << "[se \"se1\"]\nport = 39100\ncountry = se\nparent_giis = se\naccess = rw / /O=Grid/*\nttl = " << t << "\n\n"
    << "[se \"se2\"]\nport = 39101\ncountry = no\nparent_giis = no\naccess = rw / /O=Grid/*\nttl = " << t << "\n\n"
    << "[rc \"rc\"]\nport = 39200\ncountry = grid\nparent_giis = top\nwriters = /O=Grid/*\nttl = " << t << "\n";
  return c.str();
}

void seed_demo_data(fleet::Fleet& fleet, const std::string& content) {
  const fleet::SeSpec* se1 = fleet.config().find_se("se1");
  if (!se1) throw Error("demo fleet has no se1");
  fleet.se("se1").put("/data/data.in", content, "/O=Grid/CN=seed", true);
  fleet.catalog().register_replica("data", se1->url() + "/data/data.in");
}

std::string demo_job_xrsl(const fleet::Fleet& fleet) {
  const fleet::SeSpec* se2 = fleet.config().find_se("se2");
  if (!se2) throw Error("demo fleet has no se2");
  return "&(executable=\"echo.sh\")(jobname=\"echo\")(cputime=\"60\")(memory=\"64\")"
         "(runtimeenvironment=\"OS/LINUX-2.4\")(notify=\"user@example.org\")(stdout=\"stdout.txt\")"
         "(inputfiles=(\"echo.sh\" \"\")(\"data.in\" \"rc:data\"))"
         "(outputfiles=(\"out.txt\" \"\")(\"stdout.txt\" \"\")(\"result.txt\" \"" +
         se2->url() + "/results/result.txt?lfn=result\"))";
}

std::map<std::string, std::string> demo_uploads() {
  return {{"echo.sh", "#!/bin/sh\ntr a-z A-Z < data.in > out.txt\necho processed > result.txt\necho done\n"}};
}

bool run_until(fleet::Fleet& fleet, const std::function<bool()>& pred, Duration budget, Duration tick) {
  TimePoint deadline = fleet.clock().now() + budget;
  auto real_deadline = std::chrono::steady_clock::now() + std::chrono::seconds(60);
  while (!pred()) {
    if (fleet.clock().now() >= deadline || std::chrono::steady_clock::now() >= real_deadline) return false;
    fleet.tick();
    if (any_running(fleet)) std::this_thread::sleep_for(std::chrono::milliseconds(2));
    advance(fleet, tick);
  }
  return true;
}

}  // namespace ng::harness
