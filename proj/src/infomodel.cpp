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

#include "ng/infomodel.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>

namespace ng::info {

Entry::Entry(std::string dn_, std::string_view objectclass) : dn(std::move(dn_)) {
  add("objectclass", std::string(objectclass));
}

void Entry::add(std::string_view name, std::string value) { attrs[to_lower(name)].push_back(std::move(value)); }

const std::vector<std::string>* Entry::values(std::string_view name) const {
  auto it = attrs.find(std::string(name));
  return it == attrs.end() ? nullptr : &it->second;
}

std::string Entry::get(std::string_view name) const {
  auto* v = values(name);
  return v && !v->empty() ? v->front() : std::string();
}

namespace {

std::string one_line(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c == '\n' || c == '\r') c = ' ';
  return out;
}

}  // namespace

std::string serialize_entries(const std::vector<Entry>& entries) {
  std::string out;
  bool first = true;
  for (const auto& e : entries) {
    if (!first) out += '\n';
    first = false;
    out += "dn: " + one_line(e.dn) + "\n";
    for (const auto& [name, vals] : e.attrs) {
      for (const auto& v : vals) out += name + ": " + one_line(v) + "\n";
    }
  }
  return out;
}

std::vector<Entry> parse_entries(std::string_view text) {
  std::vector<Entry> out;
  bool in_entry = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (line.empty()) {
      in_entry = false;
    } else {
      auto sep = line.find(": ");
      if (sep == std::string_view::npos) throw ParseError(pos + 1, "entry line without ': '");
      std::string_view name = line.substr(0, sep);
      std::string value(line.substr(sep + 2));
      if (!in_entry) {
        if (name != "dn") throw ParseError(pos + 1, "entry must start with dn");
        out.emplace_back();
        out.back().dn = std::move(value);
        in_entry = true;
      } else {
        out.back().add(name, std::move(value));
      }
    }
    pos = eol + 1;
  }
  return out;
}

bool dn_under(std::string_view child, std::string_view parent) {
  if (child == parent) return true;
  return child.size() > parent.size() + 1 && child.substr(child.size() - parent.size()) == parent &&
         child[child.size() - parent.size() - 1] == ',';
}

namespace {

class FilterParser {
 public:
  explicit FilterParser(std::string_view s) : s_(s) {}

  Filter top() {
    Filter f = filter();
    if (i_ != s_.size()) fail("trailing characters after filter");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(i_ + 1, what); }
  bool at_end() const { return i_ >= s_.size(); }

  void expect(char c) {
    if (at_end() || s_[i_] != c) fail(std::string("expected '") + c + "'");
    ++i_;
  }

  Filter filter() {
    expect('(');
    if (at_end()) fail("unexpected end of filter");
    Filter f;
    char c = s_[i_];
    if (c == '&' || c == '|') {
      ++i_;
      std::vector<Filter> children;
      while (!at_end() && s_[i_] == '(') children.push_back(filter());
      if (children.empty()) fail("expected '('");
      f = c == '&' ? Filter::and_(std::move(children)) : Filter::or_(std::move(children));
    } else if (c == '!') {
      ++i_;
      f = Filter::not_(filter());
    } else {
      f = comparison();
    }
    expect(')');
    return f;
  }

  static bool attr_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == ';' || c == '.' || c == '_';
  }

  Filter comparison() {
    std::size_t start = i_;
    while (!at_end() && attr_char(s_[i_])) ++i_;
    if (i_ == start) fail("expected attribute name");
    std::string attr = to_lower(s_.substr(start, i_ - start));
    expect('=');
    std::string pattern;
    bool only_star = true;
    std::size_t count = 0;
    while (!at_end() && s_[i_] != ')') {
      char c = s_[i_];
      if (c == '(') fail("unescaped '(' in value");
      if (c == '\\') {
        ++i_;
        if (at_end()) fail("dangling escape");
        char e = s_[i_];
        if (e == '*' || e == '\\')
          pattern += std::string("\\") + e;
        else if (e == '(' || e == ')')
          pattern += e;
        else
          fail("invalid escape");
        only_star = false;
      } else {
        pattern += c;
        if (c != '*') only_star = false;
      }
      ++count;
      ++i_;
    }
    if (count == 1 && only_star) return Filter::present(std::move(attr));
    return Filter::eq(std::move(attr), std::move(pattern));
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

struct Token {
  bool star;
  char ch;
};

std::vector<Token> tokenize(std::string_view pattern) {
  std::vector<Token> out;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    char c = pattern[i];
    if (c == '\\' && i + 1 < pattern.size()) {
      out.push_back({false, pattern[++i]});
    } else if (c == '*') {
      out.push_back({true, 0});
    } else {
      out.push_back({false, c});
    }
  }
  return out;
}

bool same_char(char a, char b) {
  return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
}

}  // namespace

Filter parse_filter(std::string_view text) { return FilterParser(text).top(); }

std::string to_string(const Filter& f) {
  switch (f.kind) {
    case Filter::Kind::And:
    case Filter::Kind::Or: {
      std::string out = f.kind == Filter::Kind::And ? "(&" : "(|";
      for (const auto& c : f.children) out += to_string(c);
      return out + ")";
    }
    case Filter::Kind::Not:
      return "(!" + to_string(f.children.at(0)) + ")";
    case Filter::Kind::Present:
      return "(" + f.attr + "=*)";
    case Filter::Kind::Eq: {
      std::string out = "(" + f.attr + "=";
      for (char c : f.pattern) {
        if (c == '(' || c == ')') out += '\\';
        out += c;
      }
      return out + ")";
    }
  }
  return {};
}

std::string escape_value(std::string_view literal) {
  std::string out;
  for (char c : literal) {
    if (c == '*' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

bool wildcard_match(std::string_view pattern, std::string_view value) {
  std::vector<Token> p = tokenize(pattern);
  std::size_t pi = 0, vi = 0;
  std::size_t star = std::string_view::npos, resume = 0;
  while (vi < value.size()) {
    if (pi < p.size() && !p[pi].star && same_char(p[pi].ch, value[vi])) {
      ++pi;
      ++vi;
    } else if (pi < p.size() && p[pi].star) {
      star = pi++;
      resume = vi;
    } else if (star != std::string_view::npos) {
      pi = star + 1;
      vi = ++resume;
    } else {
      return false;
    }
  }
  while (pi < p.size() && p[pi].star) ++pi;
  return pi == p.size();
}

bool matches(const Filter& f, const Entry& e) {
  switch (f.kind) {
    case Filter::Kind::And:
      return std::all_of(f.children.begin(), f.children.end(), [&](const Filter& c) { return matches(c, e); });
    case Filter::Kind::Or:
      return std::any_of(f.children.begin(), f.children.end(), [&](const Filter& c) { return matches(c, e); });
    case Filter::Kind::Not:
      return !matches(f.children.at(0), e);
    case Filter::Kind::Present: {
      auto* v = e.values(f.attr);
      return v && !v->empty();
    }
    case Filter::Kind::Eq: {
      auto* v = e.values(f.attr);
      if (!v) return false;
      return std::any_of(v->begin(), v->end(), [&](const std::string& s) { return wildcard_match(f.pattern, s); });
    }
  }
  return false;
}

std::vector<Entry> select(const Filter& f, const std::vector<Entry>& entries) {
  std::vector<Entry> out;
  for (const auto& e : entries)
    if (matches(f, e)) out.push_back(e);
  return out;
}

std::string cluster_dn(std::string_view host, std::string_view country) {
  return "nordugrid-cluster-name=" + std::string(host) + ",ou=" + std::string(country) + ",o=grid";
}

std::string queue_dn(std::string_view cluster, std::string_view queue) {
  return "nordugrid-pbsqueue-name=" + std::string(queue) + "," + std::string(cluster);
}

std::string group_dn(std::string_view queue, std::string_view group) {
  return "nordugrid-info-group-name=" + std::string(group) + "," + std::string(queue);
}

std::string job_dn(std::string_view jobs_group, std::string_view gridid) {
  return "nordugrid-pbsjob-globalid=" + std::string(gridid) + "," + std::string(jobs_group);
}

std::string authuser_dn(std::string_view users_group, std::string_view subject) {
  return "nordugrid-authuser-sn=" + fnv1a_hex(subject) + "," + std::string(users_group);
}

std::string ldap_time(TimePoint t) {
  std::time_t secs = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d%H%M%SZ", &tm);
  return buf;
}

std::vector<Entry> gris_snapshot(const ClusterState& cluster, const std::vector<JobInfo>& jobs,
                                 const std::vector<std::string>& users) {
  std::vector<Entry> out;
  const std::string cdn = cluster_dn(cluster.name, cluster.country);
  Entry c(cdn, oc::kCluster);
  c.add("nordugrid-cluster-name", cluster.name);
  for (const auto& a : cluster.aliases) c.add("nordugrid-cluster-aliasname", a);
  c.add("nordugrid-cluster-contactstring", cluster.contact);
  c.add("nordugrid-cluster-totalcpus", std::to_string(cluster.total_cpus));
  c.add("nordugrid-cluster-freecpus", std::to_string(cluster.free_cpus));
  c.add("nordugrid-cluster-totaljobs", std::to_string(jobs.size()));
  for (const auto& rte : cluster.runtimeenvironments) c.add("nordugrid-cluster-runtimeenvironment", rte);
  for (const auto& se : cluster.local_se_paths) c.add("nordugrid-cluster-localse", se);
  out.push_back(std::move(c));

  for (std::size_t qi = 0; qi < cluster.queues.size(); ++qi) {
    const QueueState& q = cluster.queues[qi];
    const std::string qdn = queue_dn(cdn, q.name);
    int queue_free = std::max(0, q.cpus - q.running);
    int user_free = std::min(queue_free, cluster.free_cpus);

    Entry qe(qdn, oc::kQueue);
    qe.add("nordugrid-pbsqueue-name", q.name);
    qe.add("nordugrid-pbsqueue-maxcputime", std::to_string(q.max_cputime));
    qe.add("nordugrid-pbsqueue-maxmemory", std::to_string(q.max_memory));
    qe.add("nordugrid-pbsqueue-maxdisk", std::to_string(q.max_disk));
    qe.add("nordugrid-pbsqueue-totalcpus", std::to_string(q.cpus));
    qe.add("nordugrid-pbsqueue-freecpus", std::to_string(user_free));
    qe.add("nordugrid-pbsqueue-running", std::to_string(q.running));
    qe.add("nordugrid-pbsqueue-queued", std::to_string(q.queued));
    out.push_back(std::move(qe));

    const std::string jobs_dn = group_dn(qdn, "jobs");
    const std::string users_dn = group_dn(qdn, "users");
    Entry jg(jobs_dn, oc::kInfoGroup);
    jg.add("nordugrid-info-group-name", "jobs");
    out.push_back(std::move(jg));
    Entry ug(users_dn, oc::kInfoGroup);
    ug.add("nordugrid-info-group-name", "users");
    out.push_back(std::move(ug));

    std::set<std::string> seen_users;
    for (const auto& u : users) {
      if (!seen_users.insert(u).second) continue;
      Entry ue(authuser_dn(users_dn, u), oc::kAuthUser);
      ue.add("nordugrid-authuser-name", u);
      ue.add("nordugrid-authuser-sn", fnv1a_hex(u));
      ue.add("nordugrid-authuser-freecpus", std::to_string(user_free));
      ue.add("nordugrid-authuser-queuelength", std::to_string(q.queued));
      out.push_back(std::move(ue));
    }

    for (const auto& j : jobs) {
      bool here = j.queue == q.name;
      if (!here && qi == 0) {
        here = std::none_of(cluster.queues.begin(), cluster.queues.end(),
                            [&](const QueueState& other) { return other.name == j.queue; });
      }
      if (!here) continue;
      Entry je(job_dn(jobs_dn, j.gridid), oc::kJob);
      je.add("nordugrid-pbsjob-globalid", j.gridid);
      je.add("nordugrid-pbsjob-globalowner", j.owner);
      je.add("nordugrid-pbsjob-status", j.status);
      je.add("nordugrid-pbsjob-queuename", q.name);
      je.add("nordugrid-pbsjob-submissiontime", ldap_time(j.submitted));
      if (!j.jobname.empty()) je.add("nordugrid-pbsjob-jobname", j.jobname);
      if (j.exit_code) je.add("nordugrid-pbsjob-exitcode", std::to_string(*j.exit_code));
      if (!j.failure.empty()) je.add("nordugrid-pbsjob-errors", j.failure);
      out.push_back(std::move(je));
    }
  }
  return out;
}

}  // namespace ng::info
