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

#include <gtest/gtest.h>

#include "generators.hpp"
#include "ng/giis.hpp"
#include "ng/infomodel.hpp"
#include "oracles.hpp"

using namespace ng;
using namespace ng::info;
using namespace std::chrono_literals;

TEST(Filter, ParsesEquality) {
  EXPECT_EQ(parse_filter("(objectclass=nordugrid-cluster)"), Filter::eq("objectclass", "nordugrid-cluster"));
}

TEST(Filter, ParsesConjunction) {
  Filter f = parse_filter("(&(objectclass=nordugrid-pbsjob)(nordugrid-pbsjob-globalid=gsid123))");
  EXPECT_EQ(f, Filter::and_({Filter::eq("objectclass", "nordugrid-pbsjob"),
                             Filter::eq("nordugrid-pbsjob-globalid", "gsid123")}));
}

TEST(Filter, LoneStarMeansPresence) {
  EXPECT_EQ(parse_filter("(nordugrid-cluster-name=*)"), Filter::present("nordugrid-cluster-name"));
}

TEST(Filter, SyntaxErrorsArePositioned) {
  for (const char* bad : {"", "(", "()", "(a=b", "(&)", "(!(a=b)(c=d))", "a=b", "(a=b))", "(=b)", "(a=b\\"}) {
    try {
      parse_filter(bad);
      ADD_FAILURE() << bad;
    } catch (const ParseError& e) {
      EXPECT_GE(e.position(), 1u) << bad;
    }
  }
}

TEST(Filter, WildcardAndNegation) {
  Entry cluster("nordugrid-cluster-name=c1,o=grid", oc::kCluster);
  EXPECT_TRUE(matches(Filter::eq("objectclass", "nordugrid-*"), cluster));
  EXPECT_TRUE(matches(Filter::not_(Filter::present("missing-attr")), cluster));
  EXPECT_TRUE(matches(Filter::eq("objectclass", "NORDUGRID-CLUSTER"), cluster));
  EXPECT_FALSE(matches(Filter::eq("objectclass", "nordugrid-se"), cluster));
}

TEST(Filter, EscapedStarIsLiteral) {
  Entry e("x=1", "thing");
  e.add("name", "a*b");
  EXPECT_TRUE(matches(parse_filter("(name=a\\*b)"), e));
  e.attrs["name"] = {"axxb"};
  EXPECT_FALSE(matches(parse_filter("(name=a\\*b)"), e));
  EXPECT_TRUE(matches(parse_filter("(name=a*b)"), e));
}

TEST(FilterProperty, MatchesTheBruteForceEvaluator) {
  gen::Rng rng(31);
  for (int i = 0; i < 5000; ++i) {
    Filter f = gen::filter(rng);
    Entry e = gen::entry(rng);
    ASSERT_EQ(matches(f, e), oracle::eval(f, e)) << to_string(f) << "\n" << serialize_entries({e});
  }
}

TEST(FilterProperty, TextRoundTrip) {
  gen::Rng rng(32);
  for (int i = 0; i < 2000; ++i) {
    Filter f = gen::filter(rng);
    EXPECT_EQ(parse_filter(to_string(f)), f) << to_string(f);
  }
}

TEST(Entries, TextRoundTrip) {
  gen::Rng rng(33);
  for (int i = 0; i < 500; ++i) {
    std::vector<Entry> v;
    int n = gen::uniform(rng, 0, 4);
    for (int k = 0; k < n; ++k) {
      Entry e = gen::entry(rng);
      // the text form cannot carry empty attribute lists or line breaks
      std::erase_if(e.attrs, [](const auto& kv) { return kv.second.empty(); });
      v.push_back(e);
    }
    EXPECT_EQ(parse_entries(serialize_entries(v)), v);
  }
}

namespace {

ClusterState one_queue_cluster() {
  ClusterState c;
  c.name = "c1.example.org";
  c.country = "SE";
  c.total_cpus = 2;
  c.free_cpus = 2;
  c.contact = "ngp://c1.example.org:39000";
  QueueState q;
  q.name = "short";
  q.max_cputime = 600;
  q.max_memory = 512;
  q.max_disk = 1024;
  q.cpus = 2;
  q.free_cpus_for_user = 2;
  c.queues.push_back(q);
  return c;
}

}  // namespace

TEST(Gris, OneQueueNoJobsOneUserGivesFiveEntries) {
  auto c = one_queue_cluster();
  auto entries = gris_snapshot(c, {}, {"/O=Grid/CN=Alice"});
  ASSERT_EQ(entries.size(), 5u);
  std::map<std::string, int> classes;
  for (const auto& e : entries) ++classes[e.objectclass()];
  EXPECT_EQ(classes[std::string(oc::kCluster)], 1);
  EXPECT_EQ(classes[std::string(oc::kQueue)], 1);
  EXPECT_EQ(classes[std::string(oc::kInfoGroup)], 2);
  EXPECT_EQ(classes[std::string(oc::kAuthUser)], 1);
}

TEST(Gris, SnapshotIsATree) {
  auto c = one_queue_cluster();
  c.queues.push_back(c.queues[0]);
  c.queues[1].name = "long";
  std::vector<JobInfo> jobs(3);
  for (int i = 0; i < 3; ++i) {
    jobs[i].gridid = "c1.example.org:" + std::to_string(i + 1) + "-abcdef";
    jobs[i].owner = "/O=Grid/CN=Alice";
    jobs[i].status = "INLRMS:R";
    jobs[i].queue = i ? "long" : "short";
  }
  auto entries = gris_snapshot(c, jobs, {"/O=Grid/CN=Alice", "/O=Grid/CN=Bob"});
  // 1 cluster + per queue (1 queue + 2 groups + 2 users) + 3 jobs
  EXPECT_EQ(entries.size(), 1u + 2 * 5 + 3);
  std::set<std::string> dns;
  for (const auto& e : entries) {
    EXPECT_TRUE(dns.insert(e.dn).second) << "duplicate " << e.dn;
    if (e.objectclass() != oc::kCluster) EXPECT_TRUE(dn_under(e.dn, entries.front().dn)) << e.dn;
  }
  EXPECT_EQ(select(parse_filter("(objectclass=nordugrid-pbsjob)"), entries).size(), 3u);
  EXPECT_EQ(select(parse_filter("(&(objectclass=nordugrid-pbsjob)(nordugrid-pbsjob-status=INLRMS:R))"), entries).size(),
            3u);
}

namespace {

/// A GRIS that always publishes the same entries.
struct StaticGris : net::Service {
  std::vector<Entry> entries;
  bool fail = false;
  wire::Response handle(const wire::Request& req) override {
    if (fail) return wire::error_response(500, "down");
    Filter f = parse_filter(req.headers.get("Filter", "(objectclass=*)"));
    return wire::make_response(200, "OK", serialize_entries(select(f, entries)));
  }
};

StaticGris cluster_gris(const std::string& name) {
  StaticGris g;
  ClusterState c = one_queue_cluster();
  c.name = name;
  g.entries = gris_snapshot(c, {}, {"/O=Grid/CN=Alice"});
  return g;
}

GiisConfig giis_config(const std::string& name, const std::string& endpoint) {
  GiisConfig cfg;
  cfg.name = name;
  cfg.endpoint = endpoint;
  cfg.allow = {"/O=Grid/*"};
  cfg.default_ttl = 1s;
  return cfg;
}

struct TwoLevel {
  ManualClock clock;
  net::InProcessNetwork net;
  StaticGris a = cluster_gris("a.example");
  StaticGris b = cluster_gris("b.example");
  GiisService country{giis_config("se", "giis-se:1"), net, clock};
  GiisService top{giis_config("top", "giis-top:1"), net, clock};
  TwoLevel() {
    net.bind("a:1", &a, "cluster");
    net.bind("b:1", &b, "cluster");
    net.bind("giis-se:1", &country, "giis");
    net.bind("giis-top:1", &top, "giis");
    country.attach_child("a:1", ChildKind::Gris, 1s);
    country.attach_child("b:1", ChildKind::Gris, 1s);
    top.attach_child("giis-se:1", ChildKind::Giis, 1s);
  }
};

}  // namespace

TEST(Giis, CountryIndexAnswersForItsClusters) {
  TwoLevel t;
  auto r = t.country.query(parse_filter("(objectclass=nordugrid-cluster)"), false);
  EXPECT_EQ(r.entries.size(), 2u);
  EXPECT_FALSE(r.partial);
}

TEST(Giis, QueriesWithinTtlShareOneFetch) {
  TwoLevel t;
  auto f = parse_filter("(objectclass=nordugrid-cluster)");
  t.country.query(f, false);
  t.clock.advance(500ms);
  t.country.query(f, false);
  EXPECT_EQ(t.country.upstream_fetches("a:1"), 1u);
  EXPECT_EQ(t.country.upstream_fetches("b:1"), 1u);
  t.clock.advance(600ms);
  t.country.query(f, false);
  EXPECT_EQ(t.country.upstream_fetches("a:1"), 2u);
}

TEST(Giis, RecursionControlsLowerIndexes) {
  TwoLevel t;
  auto f = parse_filter("(objectclass=nordugrid-cluster)");
  EXPECT_TRUE(t.top.query(f, false).entries.empty());
  EXPECT_EQ(t.top.query(f, true).entries.size(), 2u);
}

TEST(Giis, AttachIsIdempotent) {
  TwoLevel t;
  t.country.attach_child("a:1", ChildKind::Gris, 1s);
  t.country.attach_child("a:1", ChildKind::Gris, 1s);
  EXPECT_EQ(t.country.children().size(), 2u);
}

TEST(Giis, SilentChildIsPrunedAfterThreeTtl) {
  TwoLevel t;
  t.clock.advance(2900ms);
  t.country.attach_child("b:1", ChildKind::Gris, 1s);
  t.country.query(parse_filter("(objectclass=*)"), false);
  EXPECT_EQ(t.country.children().size(), 2u);
  t.clock.advance(200ms);
  auto r = t.country.query(parse_filter("(objectclass=nordugrid-cluster)"), false);
  ASSERT_EQ(t.country.children().size(), 1u);
  EXPECT_EQ(t.country.children()[0].endpoint, "b:1");
  EXPECT_EQ(r.entries.size(), 1u);
}

TEST(Giis, AttachOverTheWire) {
  TwoLevel t;
  wire::Request req{wire::Verb::Attach, "/mds",
                    {{"Subject", "/O=Other/CN=x"}, {"Endpoint", "c:1"}, {"Kind", "gris"}, {"Ttl", "1"}}, ""};
  EXPECT_EQ(t.net.call("giis-se:1", req, "cluster").code, 403);
  req.headers.set("Subject", "/O=Grid/CN=c");
  EXPECT_EQ(t.net.call("giis-se:1", req, "cluster").code, 200);
  EXPECT_EQ(t.country.children().size(), 3u);
  req.headers.set("Kind", "printer");
  EXPECT_EQ(t.net.call("giis-se:1", req, "cluster").code, 400);
}

TEST(Giis, UnreachableChildGivesPartialAnswer) {
  TwoLevel t;
  t.net.set_down("b:1", true);
  auto r = t.country.query(parse_filter("(objectclass=nordugrid-cluster)"), false);
  EXPECT_TRUE(r.partial);
  EXPECT_EQ(r.entries.size(), 1u);
  wire::Request q{wire::Verb::Query, "/mds", {{"Subject", "/O=Grid/CN=u"}, {"Filter", "(objectclass=nordugrid-cluster)"}, {"Recurse", "true"}}, ""};
  auto resp = t.net.call("giis-top:1", q, "ui");
  EXPECT_EQ(resp.headers.get("Partial"), "true");
  EXPECT_EQ(parse_entries(resp.body).size(), 1u);
}

TEST(Giis, RegistrarReattachesWhenTtlPasses) {
  TwoLevel t;
  Registrar r("giis-se:1", "c:1", ChildKind::Gris, 1s, "/O=Grid/CN=c");
  EXPECT_TRUE(r.tick(t.net, t.clock, "cluster"));
  EXPECT_FALSE(r.tick(t.net, t.clock, "cluster"));
  t.clock.advance(1s);
  EXPECT_TRUE(r.tick(t.net, t.clock, "cluster"));
  EXPECT_EQ(r.attaches(), 2u);
}
