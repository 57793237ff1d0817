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
#include <set>
#include <string>
#include <vector>

#include "ng/infomodel.hpp"
#include "ng/transport.hpp"
#include "ng/xrsl.hpp"

namespace ng::ui {

struct QueueView {
  std::string dn;
  std::string name;
  std::uint64_t max_cputime = 0;
  std::uint64_t max_memory = 0;
  std::uint64_t max_disk = 0;
  int cpus = 0;
  int running = 0;
  int queued = 0;
  int free_cpus = 0;  // free for this user
  int queue_length = 0;
};

struct ClusterView {
  std::string dn;
  std::string name;
  std::string contact;
  int total_cpus = 0;
  int free_cpus = 0;
  std::set<std::string> runtimeenvironments;
  std::vector<std::string> authorized;  // nordugrid-authuser-name values
  std::vector<QueueView> queues;
};

struct Discovery {
  std::vector<ClusterView> clusters;
  bool partial = false;
};

/// (|(objectclass=nordugrid-cluster)(objectclass=nordugrid-pbsqueue)(objectclass=nordugrid-authuser))
info::Filter discovery_filter();

/// Rebuilds cluster -> queue nesting from flat entries by dn suffix.
/// Clusters come out sorted by name, queues in entry order.
std::vector<ClusterView> assemble(const std::vector<info::Entry>& entries);

struct Candidate {
  std::string cluster;
  std::string contact;
  QueueView queue;
  bool feasible = false;
  std::vector<std::string> rejection_reasons;
};

/// Every (cluster, queue) pair with its verdict, in discovery order.
std::vector<Candidate> evaluate(const xrsl::JobDescription& job, const std::string& subject,
                                const std::vector<ClusterView>& clusters);
/// Feasible pairs only, best first: free CPUs desc, queue length asc,
/// cluster name asc, queue name asc.
std::vector<Candidate> match(const xrsl::JobDescription& job, const std::string& subject,
                             const std::vector<ClusterView>& clusters);
bool rank_before(const Candidate& a, const Candidate& b);

struct ResolvedInput {
  std::string name;
  std::string chosen_pfn;
  std::vector<std::string> alternatives;
};

/// Failure reported to the user. code is the remote response code, or 0
/// for problems detected locally.
class UiError : public Error {
 public:
  UiError(int code, const std::string& what) : Error(what), code_(code) {}
  int code() const { return code_; }
  bool remote() const { return code_ != 0; }

 private:
  int code_;
};

struct JobStatus {
  std::string gridid;
  std::string state;
  std::string owner;
  std::optional<int> exit_code;
  std::string failure;
};

/// One user session against the grid. Everything is pulled through the
/// GIIS except payload, which moves directly between the user, clusters
/// and storage elements.
class Client {
 public:
  Client(net::Transport& transport, std::string subject, std::string giis);

  /// Empty means "ask the GIIS for a nordugrid-rc entry".
  void set_rc(std::string endpoint) { rc_ = std::move(endpoint); }

  Discovery discover();
  std::vector<info::Entry> query(const info::Filter& f, bool* partial = nullptr);

  /// Rewrites every "rc:<lfn>" input source to its first replica.
  std::vector<ResolvedInput> resolve_inputs(xrsl::JobDescription& job);

  /// SUBMIT then, unless upload is false, upload every user-supplied
  /// input from local_dir.
  std::string submit(const xrsl::JobDescription& job, const Candidate& target, const fs::path& local_dir,
                     bool upload = true);
  /// PUT each empty-source input to the session. On any failure the job is
  /// cancelled (best effort) and the failure rethrown.
  void upload_inputs(const std::string& gridid, const std::string& endpoint, const xrsl::JobDescription& job,
                     const fs::path& local_dir);
  /// discover, resolve, match, submit to the best candidate.
  std::string submit_best(xrsl::JobDescription job, const fs::path& local_dir);

  /// State as published by the information system, "UNKNOWN" if absent.
  std::string status(const std::string& gridid);
  std::vector<JobStatus> jobs(const std::string& owner);
  std::optional<JobStatus> job(const std::string& gridid);

  std::vector<std::string> fetch_outputs(const std::string& gridid, const fs::path& destdir);
  void cancel(const std::string& gridid);
  void clean(const std::string& gridid);

  /// Gatekeeper endpoint of the cluster that issued gridid.
  std::string locate_cluster(const std::string& gridid);

  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::string& subject() const { return subject_; }

 private:
  wire::Response call(const std::string& endpoint, wire::Request req);
  std::string rc_endpoint();
  void control(wire::Verb verb, const std::string& gridid, std::string endpoint = {});

  net::Transport& transport_;
  std::string subject_;
  std::string giis_;
  std::string rc_;
  std::vector<std::string> warnings_;
};

}  // namespace ng::ui
