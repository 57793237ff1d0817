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
#include <signal.h>

#include <fstream>
#include <thread>

#include "generators.hpp"
#include "ng/lrms.hpp"
#include "ng/replica_catalog.hpp"
#include "ng/storage_element.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ng;
using namespace std::chrono_literals;

// ---- replica catalog --------------------------------------------------------

TEST(ReplicaCatalog, RegisterIsIdempotentAndOrdered) {
  rc::ReplicaCatalog c;
  EXPECT_TRUE(c.register_replica("x", "u1"));
  EXPECT_FALSE(c.register_replica("x", "u1"));
  EXPECT_EQ(*c.lookup("x"), (std::vector<std::string>{"u1"}));
  c.register_replica("x", "u2");
  EXPECT_EQ(*c.lookup("x"), (std::vector<std::string>{"u1", "u2"}));
}

TEST(ReplicaCatalog, UnregisterIsTheInverse) {
  rc::ReplicaCatalog c;
  c.register_replica("x", "u");
  c.unregister_replica("x", "u");
  EXPECT_FALSE(c.lookup("x"));
  EXPECT_FALSE(c.unregister_replica("x", "u"));
  c.register_replica("y", "u");
  EXPECT_FALSE(c.unregister_replica("y", "other"));
  EXPECT_EQ(*c.lookup("y"), (std::vector<std::string>{"u"}));
}

TEST(ReplicaCatalogProperty, AgreesWithOracleAndReplaysFromLog) {
  ngtest::TempDir dir;
  gen::Rng rng(41);
  for (int round = 0; round < 20; ++round) {
    fs::path log = dir / ("rc" + std::to_string(round) + ".log");
    oracle::Catalog want;
    {
      rc::ReplicaCatalog got(log);
      for (int i = 0; i < 100; ++i) {
        std::string lfn = "l" + std::to_string(gen::uniform(rng, 0, 5));
        std::string pfn = "ngse://se:1/p" + std::to_string(gen::uniform(rng, 0, 3));
        if (gen::coin(rng, 0.6))
          EXPECT_EQ(got.register_replica(lfn, pfn), want.reg(lfn, pfn));
        else
          EXPECT_EQ(got.unregister_replica(lfn, pfn), want.unreg(lfn, pfn));
      }
      EXPECT_EQ(got.snapshot(), want.all());
    }
    rc::ReplicaCatalog replayed(log);
    EXPECT_EQ(replayed.snapshot(), want.all());
  }
}

TEST(ReplicaCatalog, ServiceEnforcesWriters) {
  rc::ReplicaCatalog c;
  rc::RcConfig cfg;
  cfg.writers = {"/O=Grid/CN=GM"};
  rc::RcService svc(cfg, c);
  wire::Request reg{wire::Verb::Reg, "/rc/x", {{"Subject", "/O=Grid/CN=Mallory"}, {"Pfn", "ngse://s:1/a"}}, ""};
  EXPECT_EQ(svc.handle(reg).code, 403);
  reg.headers.set("Subject", "/O=Grid/CN=GM");
  EXPECT_EQ(svc.handle(reg).code, 200);
  wire::Request look{wire::Verb::Lookup, "/rc/x", {{"Subject", "/O=Grid/CN=Anyone"}}, ""};
  auto r = svc.handle(look);
  EXPECT_EQ(r.code, 200);
  EXPECT_EQ(r.body, "ngse://s:1/a\n");
  look.target = "/rc/unknown";
  EXPECT_EQ(svc.handle(look).code, 404);
}

// ---- storage element ---------------------------------------------------------

namespace {

se::SeConfig se_config(const fs::path& root, const std::string& acl) {
  se::SeConfig cfg;
  cfg.root = root;
  cfg.acl = se::parse_acl(acl);
  cfg.advertised_name = "se1";
  cfg.country = "SE";
  cfg.base_url = "ngse://se1:39100";
  cfg.capacity_mb = 10;
  return cfg;
}

const std::string kAlice = "/O=Grid/CN=Alice";
const std::string kBob = "/O=Grid/CN=Bob";

}  // namespace

TEST(StorageElement, PutGetRoundTrip) {
  ngtest::TempDir dir;
  se::StorageElement s(se_config(dir.path(), "rw / /O=Grid/*\n"));
  gen::Rng rng(42);
  for (int i = 0; i < 10; ++i) {
    std::size_t n = static_cast<std::size_t>(gen::uniform(rng, 0, 1 << 20));
    std::string bytes(n, '\0');
    for (auto& c : bytes) c = static_cast<char>(rng());
    std::string path = "/d" + std::to_string(i) + "/f.bin";
    s.put(path, bytes, kAlice);
    EXPECT_EQ(s.get(path, kAlice), bytes);
    EXPECT_EQ(s.stat(path, kAlice), n);
  }
}

TEST(StorageElement, ExistingFileConflictsUnlessOverwrite) {
  ngtest::TempDir dir;
  se::StorageElement s(se_config(dir.path(), "rw / /O=Grid/*\n"));
  s.put("/a", "1", kAlice);
  try {
    s.put("/a", "2", kAlice);
    FAIL();
  } catch (const se::SeError& e) {
    EXPECT_EQ(e.code(), 409);
  }
  s.put("/a", "2", kAlice, true);
  EXPECT_EQ(s.get("/a", kAlice), "2");
}

TEST(StorageElement, AclIsScopedByPrefix) {
  ngtest::TempDir dir;
  se::StorageElement s(se_config(dir.path(), "rw / /O=Grid/CN=Alice\nr /public /O=Grid/CN=Bob\n"));
  s.put("/public/x", "p", kAlice);
  s.put("/private/x", "q", kAlice);
  EXPECT_EQ(s.get("/public/x", kBob), "p");
  try {
    s.get("/private/x", kBob);
    FAIL();
  } catch (const se::SeError& e) {
    EXPECT_EQ(e.code(), 403);
  }
  EXPECT_THROW(s.put("/public/y", "z", kBob), se::SeError);
  // "/publicity" is not under "/public"
  s.put("/publicity", "n", kAlice);
  EXPECT_THROW(s.get("/publicity", kBob), se::SeError);
}

TEST(StorageElement, TraversalIsRejected) {
  ngtest::TempDir dir;
  se::StorageElement s(se_config(dir.path() / "root", "rw / /O=Grid/*\n"));
  try {
    s.get("a/../../etc", kAlice);
    FAIL();
  } catch (const se::SeError& e) {
    EXPECT_EQ(e.code(), 400);
  }
}

TEST(StorageElement, SymlinkOutOfRootIsRejected) {
  ngtest::TempDir dir;
  fs::create_directories(dir / "root");
  fs::create_directories(dir / "outside");
  std::ofstream(dir / "outside" / "secret") << "s";
  fs::create_directory_symlink(dir / "outside", dir / "root" / "link");
  se::StorageElement s(se_config(dir / "root", "rw / /O=Grid/*\n"));
  EXPECT_THROW(s.get("/link/secret", kAlice), se::SeError);
}

TEST(StorageElementProperty, ResolvedPathsStayInsideRoot) {
  gen::Rng rng(43);
  for (int i = 0; i < 5000; ++i) {
    std::string p = ngtest::random_string(rng, "ab/.", 0, 16);
    try {
      std::string n = se::normalize_path(p);
      ASSERT_EQ(n.front(), '/');
      EXPECT_EQ(n.find("/../"), std::string::npos);
      EXPECT_EQ(n.find("//"), std::string::npos);
      EXPECT_FALSE(n.size() >= 3 && n.substr(n.size() - 3) == "/..");
      EXPECT_EQ(se::normalize_path(n), n);
    } catch (const se::SeError& e) {
      EXPECT_EQ(e.code(), 400);
    }
  }
}

TEST(StorageElementProperty, AddingAclLinesNeverRemovesAccess) {
  gen::Rng rng(44);
  const std::vector<std::string> subjects{kAlice, kBob, "/O=Other/CN=C"};
  const std::vector<std::string> prefixes{"/", "/a", "/a/b", "/c"};
  const std::vector<std::string> patterns{"/O=Grid/*", kAlice, kBob, "/O=Other/*"};
  const std::vector<std::string> paths{"/a", "/a/b/c", "/c/d", "/e", "/ab"};
  for (int i = 0; i < 500; ++i) {
    std::vector<se::AclLine> acl;
    for (int n = gen::uniform(rng, 0, 3); n > 0; --n)
      acl.push_back({patterns[gen::uniform(rng, 0, 3)], prefixes[gen::uniform(rng, 0, 3)], gen::coin(rng),
                     gen::coin(rng)});
    auto more = acl;
    more.push_back({patterns[gen::uniform(rng, 0, 3)], prefixes[gen::uniform(rng, 0, 3)], gen::coin(rng),
                    gen::coin(rng)});
    for (const auto& s : subjects)
      for (const auto& p : paths)
        for (auto r : {se::Right::Read, se::Right::Write})
          if (se::acl_allows(acl, s, p, r)) EXPECT_TRUE(se::acl_allows(more, s, p, r));
  }
}

TEST(StorageElement, ListDeleteAndFreeSpace) {
  ngtest::TempDir dir;
  se::StorageElement s(se_config(dir.path(), "rw / /O=Grid/*\n"));
  EXPECT_EQ(s.free_mb(), 10u);
  s.put("/d/one", std::string(1024 * 1024, 'x'), kAlice);
  EXPECT_EQ(s.free_mb(), 9u);
  s.put("/d/two", "22", kAlice);
  auto items = s.list("/d", kAlice);
  ASSERT_EQ(items.size(), 2u);
  EXPECT_EQ(items[0].name, "one");
  EXPECT_EQ(items[1].size, 2u);
  s.del("/d/one", kAlice);
  EXPECT_THROW(s.get("/d/one", kAlice), se::SeError);
  EXPECT_EQ(s.entry().get("nordugrid-se-freespace"), "9");  // "two" still rounds up to one MB
}

TEST(StorageElement, ServiceMapsErrorsToCodes) {
  ngtest::TempDir dir;
  se::StorageElement s(se_config(dir.path(), "r / /O=Grid/*\n"));
  se::SeService svc(s);
  wire::Request put{wire::Verb::Put, "/x", {{"Subject", kAlice}}, ""};
  put.set_body("data");
  EXPECT_EQ(svc.handle(put).code, 403);
  wire::Request get{wire::Verb::Get, "/missing", {{"Subject", kAlice}}, ""};
  EXPECT_EQ(svc.handle(get).code, 404);
  get.target = "/../x";
  EXPECT_EQ(svc.handle(get).code, 400);
}

// ---- LRMS --------------------------------------------------------------------

namespace {

struct LrmsFixture : ::testing::Test {
  ngtest::TempDir dir;
  ManualClock clock;

  fs::path script(const std::string& name, const std::string& body) {
    fs::path p = dir / name;
    std::ofstream(p) << "#!/bin/sh\n" << body << "\n";
    return p;
  }

  /// Ticks until pred holds, letting real processes make progress.
  template <class Pred>
  bool wait(lrms::Lrms& l, Pred pred, int max_ms = 10000) {
    for (int i = 0; i < max_ms / 5; ++i) {
      l.scheduler_tick();
      if (pred()) return true;
      std::this_thread::sleep_for(5ms);
    }
    return false;
  }

  static bool alive(pid_t pid) { return pid > 0 && ::kill(pid, 0) == 0; }
};

}  // namespace

TEST_F(LrmsFixture, ValidatesAgainstQueueLimits) {
  lrms::Lrms l({{"q", 100, 1024, 1024, 1}}, clock);
  auto s = script("ok.sh", "true");
  EXPECT_NO_THROW(l.qsub(s, dir.path(), "q", {60, 0}));
  EXPECT_THROW(l.qsub(s, dir.path(), "q", {200, 0}), lrms::LrmsError);
  EXPECT_THROW(l.qsub(s, dir.path(), "nosuch", {}), lrms::LrmsError);
}

TEST_F(LrmsFixture, IdsAreFreshAndIncreasing) {
  lrms::Lrms l({{"q", 100, 1024, 1024, 1}}, clock);
  auto s = script("ok.sh", "true");
  auto a = l.qsub(s, dir.path(), "q", {});
  auto b = l.qsub(s, dir.path(), "q", {});
  EXPECT_LT(a, b);
  EXPECT_FALSE(l.qsub(a, s, dir.path(), "q", {}));
}

TEST_F(LrmsFixture, OneSlotRunsFifo) {
  lrms::Lrms l({{"q", 100, 1024, 1024, 1}}, clock);
  auto s = script("sleep.sh", "sleep 0.2");
  auto a = l.qsub(s, dir.path(), "q", {});
  auto b = l.qsub(s, dir.path(), "q", {});
  l.scheduler_tick();
  EXPECT_EQ(l.find(a)->state, lrms::LocalState::Running);
  EXPECT_EQ(l.find(b)->state, lrms::LocalState::Queued);
  ASSERT_TRUE(wait(l, [&] { return l.find(a)->state == lrms::LocalState::Exited; }));
  l.scheduler_tick();
  EXPECT_NE(l.find(b)->state, lrms::LocalState::Queued);
  EXPECT_GE(*l.find(b)->started, *l.find(a)->ended);
}

TEST_F(LrmsFixture, ExitCodePropagates) {
  lrms::Lrms l({{"q", 100, 1024, 1024, 1}}, clock);
  auto id = l.qsub(script("seven.sh", "exit 7"), dir.path(), "q", {});
  ASSERT_TRUE(wait(l, [&] { return l.find(id)->state == lrms::LocalState::Exited; }));
  EXPECT_EQ(*l.find(id)->exit_code, 7);
}

TEST_F(LrmsFixture, CputimeLimitKills) {
  lrms::Lrms l({{"q", 100, 1024, 1024, 1}}, clock);
  auto id = l.qsub(script("long.sh", "sleep 10"), dir.path(), "q", {1, 0});
  l.scheduler_tick();
  pid_t pid = l.find(id)->pid;
  ASSERT_TRUE(alive(pid));
  clock.advance(999ms);
  l.scheduler_tick();
  EXPECT_EQ(l.find(id)->state, lrms::LocalState::Running);
  clock.advance(1ms);
  l.scheduler_tick();
  EXPECT_EQ(l.find(id)->state, lrms::LocalState::Exited);
  EXPECT_EQ(*l.find(id)->exit_code, lrms::kExitLimitExceeded);
  EXPECT_FALSE(alive(pid));
}

TEST_F(LrmsFixture, QdelOnQueuedAndRunning) {
  lrms::Lrms l({{"q", 100, 1024, 1024, 1}}, clock);
  auto s = script("long.sh", "sleep 10");
  auto a = l.qsub(s, dir.path(), "q", {});
  auto b = l.qsub(s, dir.path(), "q", {});
  l.scheduler_tick();
  l.qdel(b);
  EXPECT_EQ(l.find(b)->state, lrms::LocalState::Exited);
  pid_t pid = l.find(a)->pid;
  ASSERT_TRUE(alive(pid));
  l.qdel(a);
  EXPECT_EQ(l.find(a)->state, lrms::LocalState::Exited);
  EXPECT_FALSE(alive(pid));
  EXPECT_THROW(l.qdel(999), lrms::LrmsError);
  EXPECT_EQ(l.executions(b), 0);
}

TEST_F(LrmsFixture, QueuesHaveTheirOwnSlots) {
  lrms::Lrms l({{"a", 100, 1024, 1024, 2}, {"b", 100, 1024, 1024, 1}}, clock);
  auto s = script("long.sh", "sleep 10");
  for (int i = 0; i < 3; ++i) l.qsub(s, dir.path(), "a", {});
  for (int i = 0; i < 2; ++i) l.qsub(s, dir.path(), "b", {});
  l.scheduler_tick();
  EXPECT_EQ(l.running_in("a"), 2);
  EXPECT_EQ(l.queued_in("a"), 1);
  EXPECT_EQ(l.running_in("b"), 1);
  EXPECT_EQ(l.queued_in("b"), 1);
  EXPECT_EQ(l.free_cpus(), 0);
}

TEST_F(LrmsFixture, JobRunsInWorkdirWithScrubbedEnvironment) {
  lrms::Lrms l({{"q", 100, 1024, 1024, 1}}, clock);
  fs::create_directories(dir / "work");
  ::setenv("NG_TEST_SECRET", "leak", 1);
  auto id = l.qsub(script("env.sh", "pwd > where; env > env.txt"), dir / "work", "q", {});
  ASSERT_TRUE(wait(l, [&] { return l.find(id)->state == lrms::LocalState::Exited; }));
  EXPECT_EQ(trim(read_file(dir / "work" / "where")), fs::canonical(dir / "work").string());
  EXPECT_EQ(read_file(dir / "work" / "env.txt").find("NG_TEST_SECRET"), std::string::npos);
}
