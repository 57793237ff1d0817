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

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ng/common.hpp"

namespace ng::info {

namespace oc {
inline constexpr std::string_view kCluster = "nordugrid-cluster";
inline constexpr std::string_view kSe = "nordugrid-se";
inline constexpr std::string_view kRc = "nordugrid-rc";
inline constexpr std::string_view kQueue = "nordugrid-pbsqueue";
inline constexpr std::string_view kAuthUser = "nordugrid-authuser";
inline constexpr std::string_view kJob = "nordugrid-pbsjob";
inline constexpr std::string_view kInfoGroup = "nordugrid-info-group";
}  // namespace oc

/// A directory entry: a DN plus multi-valued attributes. The objectclass is
/// kept in attrs["objectclass"] like any other attribute.
struct Entry {
  std::string dn;
  std::map<std::string, std::vector<std::string>> attrs;

  Entry() = default;
  Entry(std::string dn_, std::string_view objectclass);

  void add(std::string_view name, std::string value);
  const std::vector<std::string>* values(std::string_view name) const;
  /// First value or empty.
  std::string get(std::string_view name) const;
  std::string objectclass() const { return get("objectclass"); }

  bool operator==(const Entry&) const = default;
};

/// Text form: "dn: <dn>" then "attr: value" lines, entries separated by an
/// empty line. Attributes come out sorted, values in insertion order.
std::string serialize_entries(const std::vector<Entry>& entries);
std::vector<Entry> parse_entries(std::string_view text);

/// True iff `child` lies directly or indirectly under `parent`.
bool dn_under(std::string_view child, std::string_view parent);

struct Filter {
  enum class Kind { And, Or, Not, Eq, Present };
  Kind kind = Kind::Present;
  std::string attr;
  /// Eq pattern in escaped form: "*" is a wildcard, "\*" and "\\" literals.
  std::string pattern;
  std::vector<Filter> children;

  static Filter and_(std::vector<Filter> c) { return {Kind::And, {}, {}, std::move(c)}; }
  static Filter or_(std::vector<Filter> c) { return {Kind::Or, {}, {}, std::move(c)}; }
  static Filter not_(Filter c) { return {Kind::Not, {}, {}, {std::move(c)}}; }
  static Filter eq(std::string attr, std::string pattern) { return {Kind::Eq, std::move(attr), std::move(pattern), {}}; }
  static Filter present(std::string attr) { return {Kind::Present, std::move(attr), {}, {}}; }

  bool operator==(const Filter&) const = default;
};

/// LDAP-style subset: (&...) (|...) (!...) (attr=pattern), "attr=*" means
/// presence. Inside patterns "\(", "\)", "\*" and "\\" escape.
Filter parse_filter(std::string_view text);
std::string to_string(const Filter& f);

/// Escape a literal value for use inside an Eq pattern.
std::string escape_value(std::string_view literal);

bool matches(const Filter& f, const Entry& e);

/// Case-insensitive wildcard match of an escaped pattern.
bool wildcard_match(std::string_view pattern, std::string_view value);

std::vector<Entry> select(const Filter& f, const std::vector<Entry>& entries);

struct QueueState {
  std::string name;
  std::uint64_t max_cputime = 0;
  std::uint64_t max_memory = 0;
  std::uint64_t max_disk = 0;
  int cpus = 0;
  int running = 0;
  int queued = 0;
  int free_cpus_for_user = 0;
  int effective_queue_length = 0;
};

struct ClusterState {
  std::string name;
  std::string country;
  std::vector<std::string> aliases;
  int total_cpus = 0;
  int free_cpus = 0;
  std::set<std::string> runtimeenvironments;
  std::vector<std::string> local_se_paths;
  std::vector<QueueState> queues;
  std::vector<std::string> authorized;
  std::string contact;
};

/// What the information system publishes about one grid job.
struct JobInfo {
  std::string gridid;
  std::string owner;
  std::string status;
  std::string queue;
  std::string jobname;
  TimePoint submitted{};
  std::optional<int> exit_code;
  std::string failure;
};

std::string cluster_dn(std::string_view host, std::string_view country);
std::string queue_dn(std::string_view cluster_dn, std::string_view queue);
std::string group_dn(std::string_view queue_dn, std::string_view group);
std::string job_dn(std::string_view jobs_group_dn, std::string_view gridid);
std::string authuser_dn(std::string_view users_group_dn, std::string_view subject);

/// Publishes the whole cluster subtree: cluster, queues, per-queue "jobs"
/// and "users" groups, one authuser per authorized subject and one pbsjob
/// per job. Built at query time.
std::vector<Entry> gris_snapshot(const ClusterState& cluster, const std::vector<JobInfo>& jobs,
                                 const std::vector<std::string>& users);

std::string ldap_time(TimePoint t);

}  // namespace ng::info
