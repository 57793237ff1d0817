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

#include "ng/broker.hpp"

#include <algorithm>

namespace ng::ui {

namespace {

int to_int(const info::Entry& e, std::string_view attr) {
  auto v = parse_uint(e.get(attr));
  return v ? static_cast<int>(*v) : 0;
}

std::uint64_t to_u64(const info::Entry& e, std::string_view attr) { return parse_uint(e.get(attr)).value_or(0); }

}  // namespace

info::Filter discovery_filter() {
  using info::Filter;
  return Filter::or_({Filter::eq("objectclass", std::string(info::oc::kCluster)),
                      Filter::eq("objectclass", std::string(info::oc::kQueue)),
                      Filter::eq("objectclass", std::string(info::oc::kAuthUser))});
}

std::vector<ClusterView> assemble(const std::vector<info::Entry>& entries) {
  std::vector<ClusterView> clusters;
  for (const auto& e : entries) {
    if (e.objectclass() != info::oc::kCluster) continue;
    ClusterView c;
    c.dn = e.dn;
    c.name = e.get("nordugrid-cluster-name");
    c.contact = e.get("nordugrid-cluster-contactstring");
    c.total_cpus = to_int(e, "nordugrid-cluster-totalcpus");
    c.free_cpus = to_int(e, "nordugrid-cluster-freecpus");
    if (const auto* rtes = e.values("nordugrid-cluster-runtimeenvironment"))
      c.runtimeenvironments.insert(rtes->begin(), rtes->end());
    clusters.push_back(std::move(c));
  }
  for (const auto& e : entries) {
    const std::string oc = e.objectclass();
    if (oc != info::oc::kQueue && oc != info::oc::kAuthUser) continue;
    for (auto& c : clusters) {
      if (!info::dn_under(e.dn, c.dn)) continue;
      if (oc == info::oc::kQueue) {
        QueueView q;
        q.dn = e.dn;
        q.name = e.get("nordugrid-pbsqueue-name");
        q.max_cputime = to_u64(e, "nordugrid-pbsqueue-maxcputime");
        q.max_memory = to_u64(e, "nordugrid-pbsqueue-maxmemory");
        q.max_disk = to_u64(e, "nordugrid-pbsqueue-maxdisk");
        q.cpus = to_int(e, "nordugrid-pbsqueue-totalcpus");
        q.running = to_int(e, "nordugrid-pbsqueue-running");
        q.queued = to_int(e, "nordugrid-pbsqueue-queued");
        q.free_cpus = to_int(e, "nordugrid-pbsqueue-freecpus");
        q.queue_length = q.queued;
        c.queues.push_back(std::move(q));
      } else {
        std::string name = e.get("nordugrid-authuser-name");
        if (std::find(c.authorized.begin(), c.authorized.end(), name) == c.authorized.end())
          c.authorized.push_back(name);
      }
      break;
    }
  }
  std::stable_sort(clusters.begin(), clusters.end(),
                   [](const ClusterView& a, const ClusterView& b) { return a.name < b.name; });
  return clusters;
}

std::vector<Candidate> evaluate(const xrsl::JobDescription& job, const std::string& subject,
                                const std::vector<ClusterView>& clusters) {
  std::vector<Candidate> out;
  for (const auto& c : clusters) {
    bool authorized = wire::authorize(subject, c.authorized);
    std::vector<std::string> missing;
    for (const auto& rte : job.runtimeenvironment)
      if (!c.runtimeenvironments.count(rte)) missing.push_back(rte);
    for (const auto& q : c.queues) {
      Candidate k;
      k.cluster = c.name;
      k.contact = c.contact;
      k.queue = q;
      auto& why = k.rejection_reasons;
      if (job.cputime > q.max_cputime)
        why.push_back("cputime: " + std::to_string(job.cputime) + " > " + std::to_string(q.max_cputime));
      if (job.memory > q.max_memory)
        why.push_back("memory: " + std::to_string(job.memory) + " > " + std::to_string(q.max_memory));
      if (job.disk > q.max_disk)
        why.push_back("disk: " + std::to_string(job.disk) + " > " + std::to_string(q.max_disk));
      for (const auto& rte : missing) why.push_back("runtimeenvironment: " + rte + " not provided");
      if (!job.queue.empty() && job.queue != q.name) why.push_back("queue: " + job.queue + " requested");
      if (!authorized) why.push_back("authorization: " + subject + " not authorized");
      k.feasible = why.empty();
      out.push_back(std::move(k));
    }
  }
  return out;
}

bool rank_before(const Candidate& a, const Candidate& b) {
  if (a.queue.free_cpus != b.queue.free_cpus) return a.queue.free_cpus > b.queue.free_cpus;
  if (a.queue.queue_length != b.queue.queue_length) return a.queue.queue_length < b.queue.queue_length;
  if (a.cluster != b.cluster) return a.cluster < b.cluster;
  return a.queue.name < b.queue.name;
}

std::vector<Candidate> match(const xrsl::JobDescription& job, const std::string& subject,
                             const std::vector<ClusterView>& clusters) {
  std::vector<Candidate> all = evaluate(job, subject, clusters);
  std::vector<Candidate> out;
  for (auto& k : all)
    if (k.feasible) out.push_back(std::move(k));
  std::stable_sort(out.begin(), out.end(), rank_before);
  return out;
}

// ---------------------------------------------------------------------------

Client::Client(net::Transport& transport, std::string subject, std::string giis)
    : transport_(transport), subject_(std::move(subject)), giis_(std::move(giis)) {
  if (!wire::valid_subject(subject_)) throw UiError(0, "invalid subject '" + subject_ + "'");
}

wire::Response Client::call(const std::string& endpoint, wire::Request req) {
  req.headers.set("Subject", subject_);
  try {
    return transport_.call(net::endpoint_key(endpoint), req, "ui");
  } catch (const net::TransportError& e) {
    throw UiError(500, e.what());
  }
}

std::vector<info::Entry> Client::query(const info::Filter& f, bool* partial) {
  wire::Request req{wire::Verb::Query, "/mds", {}, {}};
  req.headers.set("Filter", info::to_string(f));
  req.headers.set("Recurse", "true");
  wire::Response resp = call(giis_, req);
  if (!resp.ok()) throw UiError(resp.code, "GIIS query failed: " + resp.reason);
  bool p = iequals(resp.headers.get("Partial"), "true");
  if (p) warnings_.push_back("partial answer from GIIS " + giis_);
  if (partial) *partial = p;
  return info::parse_entries(resp.body);
}

Discovery Client::discover() {
  Discovery d;
  d.clusters = assemble(query(discovery_filter(), &d.partial));
  return d;
}

std::string Client::rc_endpoint() {
  if (rc_.empty()) {
    auto entries = query(info::Filter::eq("objectclass", std::string(info::oc::kRc)));
    if (entries.empty()) throw UiError(0, "no replica catalog registered in the information system");
    rc_ = entries.front().get("nordugrid-rc-baseurl");
  }
  return rc_;
}

std::vector<ResolvedInput> Client::resolve_inputs(xrsl::JobDescription& job) {
  std::vector<ResolvedInput> out;
  for (auto& in : job.inputfiles) {
    if (!starts_with(in.source, "rc:")) continue;
    std::string lfn = in.source.substr(3);
    while (starts_with(lfn, "/")) lfn = lfn.substr(1);
    wire::Response resp = call(rc_endpoint(), {wire::Verb::Lookup, "/rc/" + lfn, {}, {}});
    ResolvedInput r;
    r.name = in.name;
    if (resp.ok()) {
      for (const auto& line : split(resp.body, '\n'))
        if (!trim(line).empty()) r.alternatives.push_back(trim(line));
    }
    if (r.alternatives.empty()) throw UiError(resp.ok() ? 0 : resp.code, "unresolved input " + lfn);
    r.chosen_pfn = r.alternatives.front();
    in.source = r.chosen_pfn;
    out.push_back(std::move(r));
  }
  return out;
}

std::string Client::submit(const xrsl::JobDescription& job, const Candidate& target, const fs::path& local_dir,
                           bool upload) {
  wire::Request req{wire::Verb::Submit, "/jobs", {}, {}};
  xrsl::JobDescription sent = job;
  if (sent.queue.empty()) sent.queue = target.queue.name;
  req.set_body(xrsl::serialize(sent));
  wire::Response resp = call(target.contact, req);
  if (!resp.ok()) throw UiError(resp.code, "submission to " + target.cluster + " failed: " + resp.reason);
  std::string gridid = resp.headers.get("GridId");
  if (gridid.empty()) throw UiError(500, "gatekeeper returned no GridId");
  if (upload) upload_inputs(gridid, target.contact, job, local_dir);
  return gridid;
}

void Client::upload_inputs(const std::string& gridid, const std::string& endpoint, const xrsl::JobDescription& job,
                           const fs::path& local_dir) {
  for (const auto& in : job.inputfiles) {
    if (!in.source.empty()) continue;
    try {
      fs::path local = local_dir / in.name;
      if (!fs::is_regular_file(local)) throw UiError(0, "cannot read input " + local.string());
      wire::Request put{wire::Verb::Put, "/sessions/" + gridid + "/" + in.name, {}, {}};
      put.set_body(read_file(local));
      wire::Response r = call(endpoint, put);
      if (!r.ok()) throw UiError(r.code, "upload of " + in.name + " failed: " + r.reason);
    } catch (const std::exception&) {
      try {
        control(wire::Verb::Cancel, gridid, endpoint);
      } catch (const std::exception&) {
        // the original failure is what matters
      }
      throw;
    }
  }
}

std::string Client::submit_best(xrsl::JobDescription job, const fs::path& local_dir) {
  resolve_inputs(job);
  Discovery d = discover();
  auto ranked = match(job, subject_, d.clusters);
  if (ranked.empty()) throw UiError(0, "no cluster satisfies the job requirements");
  return submit(job, ranked.front(), local_dir);
}

std::optional<JobStatus> Client::job(const std::string& gridid) {
  using info::Filter;
  Filter f = Filter::and_({Filter::eq("objectclass", std::string(info::oc::kJob)),
                           Filter::eq("nordugrid-pbsjob-globalid", info::escape_value(gridid))});
  auto entries = query(f);
  if (entries.empty()) return std::nullopt;
  const info::Entry& e = entries.front();
  JobStatus s;
  s.gridid = gridid;
  s.state = e.get("nordugrid-pbsjob-status");
  s.owner = e.get("nordugrid-pbsjob-globalowner");
  if (auto code = parse_uint(e.get("nordugrid-pbsjob-exitcode"))) s.exit_code = static_cast<int>(*code);
  s.failure = e.get("nordugrid-pbsjob-errors");
  return s;
}

std::string Client::status(const std::string& gridid) {
  auto s = job(gridid);
  return s ? s->state : "UNKNOWN";
}

std::vector<JobStatus> Client::jobs(const std::string& owner) {
  using info::Filter;
  Filter f = Filter::and_({Filter::eq("objectclass", std::string(info::oc::kJob)),
                           Filter::eq("nordugrid-pbsjob-globalowner", info::escape_value(owner))});
  std::vector<JobStatus> out;
  for (const auto& e : query(f)) {
    JobStatus s;
    s.gridid = e.get("nordugrid-pbsjob-globalid");
    s.state = e.get("nordugrid-pbsjob-status");
    s.owner = e.get("nordugrid-pbsjob-globalowner");
    if (auto code = parse_uint(e.get("nordugrid-pbsjob-exitcode"))) s.exit_code = static_cast<int>(*code);
    s.failure = e.get("nordugrid-pbsjob-errors");
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const JobStatus& a, const JobStatus& b) { return a.gridid < b.gridid; });
  return out;
}

std::string Client::locate_cluster(const std::string& gridid) {
  auto colon = gridid.rfind(':');
  if (colon == std::string::npos || colon == 0) throw UiError(0, "malformed gridid " + gridid);
  std::string host = gridid.substr(0, colon);
  using info::Filter;
  Filter f = Filter::and_({Filter::eq("objectclass", std::string(info::oc::kCluster)),
                           Filter::eq("nordugrid-cluster-name", info::escape_value(host))});
  auto entries = query(f);
  if (entries.empty()) throw UiError(404, "cluster " + host + " not found in the information system");
  return entries.front().get("nordugrid-cluster-contactstring");
}

std::vector<std::string> Client::fetch_outputs(const std::string& gridid, const fs::path& destdir) {
  std::string endpoint = locate_cluster(gridid);
  wire::Response list = call(endpoint, {wire::Verb::List, "/sessions/" + gridid, {}, {}});
  if (!list.ok()) throw UiError(list.code, "listing " + gridid + " failed: " + list.reason);
  std::vector<std::string> names;
  for (const auto& line : split(list.body, '\n')) {
    auto sp = line.find(' ');
    if (sp == std::string::npos) continue;
    names.push_back(line.substr(sp + 1));
  }
  for (const auto& name : names) {
    wire::Response r = call(endpoint, {wire::Verb::Get, "/sessions/" + gridid + "/" + name, {}, {}});
    if (!r.ok()) throw UiError(r.code, "download of " + name + " failed: " + r.reason);
    fs::path out = destdir / name;
    fs::create_directories(out.parent_path());
    write_file_atomic(out, r.body);
  }
  return names;
}

void Client::control(wire::Verb verb, const std::string& gridid, std::string endpoint) {
  xrsl::JobDescription j;
  j.action = verb == wire::Verb::Cancel ? xrsl::Action::Cancel : xrsl::Action::Clean;
  wire::Request req{verb, "/jobs", {}, {}};
  req.headers.set("GridId", gridid);
  req.set_body(xrsl::serialize(j));
  if (endpoint.empty()) endpoint = locate_cluster(gridid);
  wire::Response r = call(endpoint, req);
  if (!r.ok()) throw UiError(r.code, std::string(wire::to_string(verb)) + " " + gridid + " failed: " + r.reason);
}

void Client::cancel(const std::string& gridid) { control(wire::Verb::Cancel, gridid); }

void Client::clean(const std::string& gridid) { control(wire::Verb::Clean, gridid); }

}  // namespace ng::ui
