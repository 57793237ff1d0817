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
// Seeded random inputs for property tests and the acceptance run.

#include <random>
#include <string>
#include <vector>

#include "ng/broker.hpp"
#include "ng/infomodel.hpp"
#include "ng/wire.hpp"
#include "ng/xrsl.hpp"
#include "support.hpp"

namespace gen {

using Rng = std::mt19937_64;

inline int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

// ---- filters and entries --------------------------------------------------

inline const std::vector<std::string>& attr_pool() {
  static const std::vector<std::string> pool = {"objectclass", "nordugrid-cluster-name", "cpu", "mem", "x"};
  return pool;
}

inline std::string value_text(Rng& rng) {
  // small alphabet so wildcards and equality actually hit; includes
  // characters that need escaping inside filters
  return ngtest::random_string(rng, "abAB*()\\-", 0, 5);
}

inline ng::info::Entry entry(Rng& rng) {
  ng::info::Entry e;
  e.dn = "x=" + std::to_string(uniform(rng, 0, 1000)) + ",o=grid";
  for (const auto& a : attr_pool()) {
    if (coin(rng, 0.35)) continue;
    int n = uniform(rng, 0, 3);
    auto& vs = e.attrs[a];
    for (int i = 0; i < n; ++i) vs.push_back(value_text(rng));
  }
  return e;
}

inline std::string pattern(Rng& rng) {
  std::string out;
  int n = uniform(rng, 0, 5);
  for (int i = 0; i < n; ++i) {
    int k = uniform(rng, 0, 9);
    if (k < 3)
      out += '*';
    else if (k < 4)
      out += ng::info::escape_value(std::string(1, "*()\\"[uniform(rng, 0, 3)]));
    else
      out += "abAB-"[uniform(rng, 0, 4)];
  }
  if (out.empty() || out == "*") out = "a" + out;  // lone "*" is presence
  return out;
}

inline ng::info::Filter filter(Rng& rng, int depth = 0) {
  using F = ng::info::Filter;
  int k = depth >= 3 ? uniform(rng, 3, 4) : uniform(rng, 0, 4);
  const auto& attrs = attr_pool();
  std::string attr = attrs[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(attrs.size())))
                           % attrs.size()];
  if (coin(rng, 0.1)) attr = "missing";
  switch (k) {
    case 0:
    case 1: {
      std::vector<F> c;
      int n = uniform(rng, 1, 3);
      for (int i = 0; i < n; ++i) c.push_back(filter(rng, depth + 1));
      return k == 0 ? F::and_(std::move(c)) : F::or_(std::move(c));
    }
    case 2:
      return F::not_(filter(rng, depth + 1));
    case 3:
      return F::present(attr);
    default:
      return F::eq(attr, pattern(rng));
  }
}

// ---- broker ---------------------------------------------------------------

inline const std::vector<std::string>& rte_pool() {
  static const std::vector<std::string> pool = {"OS/LINUX-2.4", "APPS/HEP/ATLAS-1.0", "APPS/CHEM/GAUSSIAN", "LIB/BLAS"};
  return pool;
}

inline std::vector<ng::ui::ClusterView> fleet(Rng& rng) {
  std::vector<ng::ui::ClusterView> out;
  int n = uniform(rng, 0, 6);
  for (int i = 0; i < n; ++i) {
    ng::ui::ClusterView c;
    c.name = "c" + std::to_string(uniform(rng, 0, 9)) + std::to_string(i) + ".example";
    c.contact = "ngp://" + c.name + ":39000";
    for (const auto& r : rte_pool())
      if (coin(rng)) c.runtimeenvironments.insert(r);
    int k = uniform(rng, 0, 3);
    if (k == 0) c.authorized = {"/O=Grid/*"};
    if (k == 1) c.authorized = {"/O=Grid/O=NorduGrid/CN=Alice"};
    if (k == 2) c.authorized = {"/O=Other/*", "/O=Grid/O=NorduGrid/CN=Bob"};
    int nq = uniform(rng, 1, 3);
    for (int q = 0; q < nq; ++q) {
      ng::ui::QueueView v;
      v.name = std::string(1, "abcq"[uniform(rng, 0, 3)]) + std::to_string(q);
      v.max_cputime = static_cast<std::uint64_t>(uniform(rng, 1, 8)) * 900;
      v.max_memory = static_cast<std::uint64_t>(uniform(rng, 1, 8)) * 256;
      v.max_disk = static_cast<std::uint64_t>(uniform(rng, 1, 8)) * 512;
      v.cpus = uniform(rng, 1, 8);
      v.free_cpus = uniform(rng, 0, v.cpus);
      v.queued = uniform(rng, 0, 5);
      v.queue_length = v.queued;
      c.queues.push_back(v);
    }
    out.push_back(std::move(c));
  }
  return out;
}

inline ng::xrsl::JobDescription broker_job(Rng& rng) {
  ng::xrsl::JobDescription j;
  j.executable = "run.sh";
  if (coin(rng)) j.cputime = static_cast<std::uint64_t>(uniform(rng, 0, 8)) * 900;
  if (coin(rng)) j.memory = static_cast<std::uint64_t>(uniform(rng, 0, 8)) * 256;
  if (coin(rng)) j.disk = static_cast<std::uint64_t>(uniform(rng, 0, 8)) * 512;
  for (const auto& r : rte_pool())
    if (coin(rng, 0.2)) j.runtimeenvironment.insert(r);
  if (coin(rng, 0.2)) j.queue = std::string(1, "abcq"[uniform(rng, 0, 3)]) + std::to_string(uniform(rng, 0, 2));
  return j;
}

inline std::string broker_subject(Rng& rng) {
  static const std::vector<std::string> s = {"/O=Grid/O=NorduGrid/CN=Alice", "/O=Grid/O=NorduGrid/CN=Bob",
                                             "/O=Other/CN=Carol"};
  return s[static_cast<std::size_t>(uniform(rng, 0, 2))];
}

// ---- xRSL -----------------------------------------------------------------

inline std::string xrsl_text(Rng& rng, std::size_t min_len = 0) {
  // printable plus quotes, backslashes, parentheses and some UTF-8
  static const std::vector<std::string> atoms = {"a", "Z", "0", " ", "\"", "\\", "(", ")", "=", "&", "é", "/", ".", "-", "?"};
  std::string s;
  std::size_t n = static_cast<std::size_t>(uniform(rng, static_cast<int>(min_len), 8));
  for (std::size_t i = 0; i < n; ++i) s += atoms[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(atoms.size()) - 1))];
  return s;
}

inline std::string file_name(Rng& rng) {
  return ngtest::random_string(rng, "abcxyz019_", 1, 6) + (coin(rng) ? ".dat" : "");
}

inline ng::xrsl::JobDescription job(Rng& rng) {
  ng::xrsl::JobDescription j;
  j.executable = xrsl_text(rng, 1);
  int na = uniform(rng, 0, 3);
  for (int i = 0; i < na; ++i) j.arguments.push_back(xrsl_text(rng));
  std::set<std::string> used;
  int ni = uniform(rng, 0, 3);
  for (int i = 0; i < ni; ++i) {
    std::string n = file_name(rng);
    if (!used.insert(n).second) continue;
    j.inputfiles.push_back({n, coin(rng) ? "" : "ngse://se1:39100/d/" + n});
  }
  used.clear();
  int no = uniform(rng, 0, 3);
  for (int i = 0; i < no; ++i) {
    std::string n = file_name(rng);
    if (!used.insert(n).second) continue;
    j.outputfiles.push_back({n, coin(rng) ? "" : "ngse://se2:39101/out/" + n + "?lfn=" + n});
  }
  if (coin(rng)) j.cputime = static_cast<std::uint64_t>(uniform(rng, 1, 100000));
  if (coin(rng)) j.memory = static_cast<std::uint64_t>(uniform(rng, 1, 4096));
  if (coin(rng)) j.disk = static_cast<std::uint64_t>(uniform(rng, 1, 4096));
  if (coin(rng)) j.lifetime = static_cast<std::uint64_t>(uniform(rng, 1, 86400));
  int nr = uniform(rng, 0, 2);
  for (int i = 0; i < nr; ++i) j.runtimeenvironment.insert(xrsl_text(rng, 1));
  if (coin(rng, 0.3)) j.queue = "q" + std::to_string(uniform(rng, 0, 9));
  if (coin(rng, 0.3)) j.stdout_file = "out.txt";
  if (coin(rng, 0.3)) j.stderr_file = "err.txt";
  if (coin(rng, 0.3)) j.jobname = xrsl_text(rng, 1);
  if (coin(rng, 0.3)) j.notify = "user@example.org";
  return j;
}

// ---- wire -----------------------------------------------------------------

inline ng::wire::Request request(Rng& rng) {
  using ng::wire::Verb;
  static const Verb verbs[] = {Verb::Query, Verb::Submit, Verb::Cancel, Verb::Clean,  Verb::Put,
                               Verb::Get,   Verb::List,   Verb::Del,    Verb::Stat,   Verb::Reg,
                               Verb::Unreg, Verb::Lookup, Verb::Children, Verb::Attach};
  ng::wire::Request r;
  r.verb = verbs[uniform(rng, 0, 13)];
  r.target = "/" + ngtest::random_string(rng, "abc/._-019", 0, 12);
  r.headers.set("Subject", "/O=Grid/CN=" + ngtest::random_string(rng, "abc XYZ=/", 1, 10));
  int nh = uniform(rng, 0, 3);
  for (int i = 0; i < nh; ++i)
    r.headers.set("X-" + ngtest::random_string(rng, "abcXYZ019-", 1, 6), ngtest::random_string(rng, "ab :()=*/", 0, 10));
  if (coin(rng)) {
    std::string body = ngtest::random_string(rng, std::string_view("ab\n\r\0:NGP/1 ", 13), 1, 40);
    r.set_body(body);
  }
  return r;
}

inline ng::wire::Response response(Rng& rng) {
  static const int codes[] = {200, 400, 403, 404, 409, 500};
  int code = codes[uniform(rng, 0, 5)];
  std::string body = coin(rng) ? ngtest::random_string(rng, "xyz\n 019", 1, 30) : "";
  ng::wire::Response r = ng::wire::make_response(code, std::string(ng::wire::reason_phrase(code)), body);
  if (coin(rng)) r.headers.set("GridId", "c1:" + std::to_string(uniform(rng, 1, 99)) + "-abcdef");
  return r;
}

/// Byte-level mutation: flip, insert, delete or truncate.
inline std::string mutate(Rng& rng, std::string s) {
  int rounds = uniform(rng, 1, 4);
  for (int i = 0; i < rounds; ++i) {
    int k = uniform(rng, 0, 3);
    std::size_t pos = s.empty() ? 0 : static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(s.size()) - 1));
    char c = static_cast<char>(uniform(rng, 0, 255));
    switch (k) {
      case 0:
        if (!s.empty()) s[pos] = c;
        break;
      case 1:
        s.insert(s.begin() + static_cast<std::ptrdiff_t>(std::min(pos, s.size())), c);
        break;
      case 2:
        if (!s.empty()) s.erase(pos, 1);
        break;
      default:
        s.resize(pos);
        break;
    }
  }
  return s;
}

}  // namespace gen
