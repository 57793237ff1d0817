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

#include "ng/fleet.hpp"

#include <algorithm>
#include <cstdlib>
#include <ostream>
#include <set>
#include <thread>

namespace ng::fleet {

const GiisSpec* FleetConfig::find_giis(std::string_view name) const {
  for (const auto& g : giis)
    if (g.name == name) return &g;
  return nullptr;
}

const SeSpec* FleetConfig::find_se(std::string_view name) const {
  for (const auto& s : ses)
    if (s.name == name) return &s;
  return nullptr;
}

std::string FleetConfig::resolve_parent(const std::string& parent) const {
  if (parent.empty()) return {};
  if (const GiisSpec* g = find_giis(parent)) return g->endpoint();
  return net::endpoint_key(parent);
}

std::string FleetConfig::top_giis() const {
  for (const auto& g : giis)
    if (g.parent_giis.empty()) return g.endpoint();
  return giis.empty() ? std::string() : giis.front().endpoint();
}

// ---------------------------------------------------------------------------

namespace {

struct Section {
  std::string kind;  // empty for global keys
  std::string name;
  std::size_t line = 0;
  std::vector<std::pair<std::string, std::string>> keys;
  std::vector<std::size_t> key_lines;
};

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

std::vector<Section> tokenize(std::string_view text) {
  std::vector<Section> out(1);
  std::size_t lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(lineno, "unterminated section header");
      std::string inner = trim(line.substr(1, line.size() - 2));
      Section s;
      s.line = lineno;
      auto q = inner.find('"');
      if (q == std::string::npos) {
        s.kind = inner;
      } else {
        s.kind = trim(inner.substr(0, q));
        auto q2 = inner.find('"', q + 1);
        if (q2 == std::string::npos || q2 != inner.size() - 1) fail(lineno, "bad section name quoting");
        s.name = inner.substr(q + 1, q2 - q - 1);
        if (s.name.empty()) fail(lineno, "empty section name");
      }
      out.push_back(std::move(s));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(lineno, "expected key = value");
    std::string key = to_lower(trim(line.substr(0, eq)));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    out.back().keys.emplace_back(std::move(key), std::move(value));
    out.back().key_lines.push_back(lineno);
  }
  return out;
}

int parse_port(std::size_t line, const std::string& v) {
  auto n = parse_uint(v);
  if (!n || *n == 0 || *n > 65535) fail(line, "bad port '" + v + "'");
  return static_cast<int>(*n);
}

Duration parse_seconds(std::size_t line, const std::string& v) {
  char* end = nullptr;
  double secs = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || !(secs > 0)) fail(line, "bad duration '" + v + "'");
  return Duration{static_cast<Duration::rep>(secs * 1000)};
}

std::vector<lrms::QueueConfig> parse_queues(std::size_t line, const std::string& v) {
  std::vector<lrms::QueueConfig> out;
  for (const auto& item : split(v, ',')) {
    std::string q = trim(item);
    if (q.empty()) continue;
    auto f = split(q, ':');
    if (f.size() != 5) fail(line, "queue '" + q + "' is not name:max_cputime:max_memory:max_disk:cpus");
    lrms::QueueConfig c;
    c.name = f[0];
    auto cpu = parse_uint(f[1]), mem = parse_uint(f[2]), disk = parse_uint(f[3]), cpus = parse_uint(f[4]);
    if (c.name.empty() || !cpu || !mem || !disk || !cpus || *cpus == 0 || *cpus > 4096)
      fail(line, "bad queue '" + q + "'");
    c.max_cputime = *cpu;
    c.max_memory = *mem;
    c.max_disk = *disk;
    c.cpus = static_cast<int>(*cpus);
    out.push_back(c);
  }
  return out;
}

fs::path rel(const fs::path& base, const std::string& v) {
  fs::path p(v);
  return p.is_absolute() ? p : base / p;
}

std::vector<std::string> read_gridmap(std::size_t line, const fs::path& p) {
  std::string text;
  try {
    text = read_file(p);
  } catch (const std::exception&) {
    fail(line, "cannot read grid-map " + p.string());
  }
  std::vector<std::string> out;
  for (const auto& raw : split(text, '\n')) {
    std::string l = trim(raw);
    if (l.empty() || l[0] == '#') continue;
    if (l[0] == '"') {
      auto end = l.find('"', 1);
      if (end == std::string::npos) fail(line, "unterminated subject in " + p.string());
      out.push_back(l.substr(1, end - 1));
    } else {
      out.push_back(l);
    }
  }
  return out;
}

}  // namespace

FleetConfig parse_fleet_config(std::string_view text, const fs::path& base) {
  FleetConfig cfg;
  cfg.dir = base / cfg.dir;
  std::vector<Section> sections = tokenize(text);
  int counts[4] = {0, 0, 0, 0};

  for (const auto& s : sections) {
    auto each = [&](auto&& fn) {
      for (std::size_t i = 0; i < s.keys.size(); ++i) fn(s.key_lines[i], s.keys[i].first, s.keys[i].second);
    };
    if (s.kind.empty() || s.kind == "fleet") {
      each([&](std::size_t ln, const std::string& k, const std::string& v) {
        if (k == "dir")
          cfg.dir = rel(base, v);
        else if (k == "host")
          cfg.host = v;
        else
          fail(ln, "unknown global key '" + k + "'");
      });
    }
  }

  for (const auto& s : sections) {
    auto each = [&](auto&& fn) {
      for (std::size_t i = 0; i < s.keys.size(); ++i) fn(s.key_lines[i], s.keys[i].first, s.keys[i].second);
    };
    if (s.kind.empty() || s.kind == "fleet") continue;
    if (s.kind == "giis") {
      if (s.name.empty()) fail(s.line, "giis section needs a name");
      GiisSpec g;
      g.name = s.name;
      g.host = cfg.host;
      g.port = kGiisPort + counts[3]++;
      each([&](std::size_t ln, const std::string& k, const std::string& v) {
        if (k == "port") g.port = parse_port(ln, v);
        else if (k == "host") g.host = v;
        else if (k == "country") g.country = v;
        else if (k == "parent_giis") g.parent_giis = v;
        else if (k == "allow") g.allow.push_back(v);
        else if (k == "ttl") g.ttl = parse_seconds(ln, v);
        else fail(ln, "unknown giis key '" + k + "'");
      });
      if (g.allow.empty()) g.allow.push_back("/O=Grid/*");
      if (g.country.empty()) g.country = g.name;
      cfg.giis.push_back(std::move(g));
    } else if (s.kind == "cluster") {
      if (s.name.empty()) fail(s.line, "cluster section needs a name");
      ClusterSpec c;
      c.name = s.name;
      c.host = cfg.host;
      c.port = kClusterPort + counts[0]++;
      each([&](std::size_t ln, const std::string& k, const std::string& v) {
        if (k == "port") c.port = parse_port(ln, v);
        else if (k == "host") c.host = v;
        else if (k == "country") c.country = v;
        else if (k == "parent_giis") c.parent_giis = v;
        else if (k == "queues") {
          auto q = parse_queues(ln, v);
          c.queues.insert(c.queues.end(), q.begin(), q.end());
        } else if (k == "gridmap") {
          auto g = read_gridmap(ln, rel(base, v));
          c.gridmap.insert(c.gridmap.end(), g.begin(), g.end());
        } else if (k == "allow") c.gridmap.push_back(v);
        else if (k == "runtimeenvironment") c.runtimeenvironments.push_back(v);
        else if (k == "localse") c.localse.push_back(v);
        else if (k == "alias") c.aliases.push_back(v);
        else if (k == "ttl") c.ttl = parse_seconds(ln, v);
        else if (k == "lifetime") c.lifetime = parse_seconds(ln, v);
        else fail(ln, "unknown cluster key '" + k + "'");
      });
      if (c.queues.empty()) fail(s.line, "cluster " + c.name + " has no queues");
      std::set<std::string> qnames;
      for (const auto& q : c.queues)
        if (!qnames.insert(q.name).second) fail(s.line, "duplicate queue " + q.name + " in cluster " + c.name);
      cfg.clusters.push_back(std::move(c));
    } else if (s.kind == "se") {
      if (s.name.empty()) fail(s.line, "se section needs a name");
      SeSpec e;
      e.name = s.name;
      e.host = cfg.host;
      e.port = kSePort + counts[1]++;
      each([&](std::size_t ln, const std::string& k, const std::string& v) {
        if (k == "port") e.port = parse_port(ln, v);
        else if (k == "host") e.host = v;
        else if (k == "country") e.country = v;
        else if (k == "parent_giis") e.parent_giis = v;
        else if (k == "acl") {
          try {
            auto a = se::parse_acl(read_file(rel(base, v)));
            e.acl.insert(e.acl.end(), a.begin(), a.end());
          } catch (const std::exception& ex) {
            fail(ln, std::string("acl: ") + ex.what());
          }
        } else if (k == "access") {
          try {
            auto a = se::parse_acl(v);
            e.acl.insert(e.acl.end(), a.begin(), a.end());
          } catch (const std::exception& ex) {
            fail(ln, std::string("access: ") + ex.what());
          }
        } else if (k == "capacity_mb") {
          auto n = parse_uint(v);
          if (!n) fail(ln, "bad capacity_mb");
          e.capacity_mb = *n;
        } else if (k == "root") e.root = rel(base, v);
        else if (k == "ttl") e.ttl = parse_seconds(ln, v);
        else fail(ln, "unknown se key '" + k + "'");
      });
      cfg.ses.push_back(std::move(e));
    } else if (s.kind == "rc") {
      if (cfg.rc) fail(s.line, "only one rc section is allowed");
      RcSpec r;
      if (!s.name.empty()) r.name = s.name;
      r.host = cfg.host;
      r.port = kRcPort + counts[2]++;
      each([&](std::size_t ln, const std::string& k, const std::string& v) {
        if (k == "port") r.port = parse_port(ln, v);
        else if (k == "host") r.host = v;
        else if (k == "country") r.country = v;
        else if (k == "parent_giis") r.parent_giis = v;
        else if (k == "writers") r.writers.push_back(v);
        else if (k == "log") r.log = iequals(v, "true") || v == "1" || iequals(v, "yes");
        else if (k == "ttl") r.ttl = parse_seconds(ln, v);
        else fail(ln, "unknown rc key '" + k + "'");
      });
      cfg.rc = std::move(r);
    } else {
      fail(s.line, "unknown section kind '" + s.kind + "'");
    }
  }

  // cross-checks
  std::map<std::string, std::string> endpoints;
  std::set<std::string> names;
  auto claim = [&](const std::string& ep, const std::string& who) {
    auto [it, fresh] = endpoints.emplace(ep, who);
    if (!fresh) throw ConfigError("duplicate port: " + who + " and " + it->second + " both use " + ep);
  };
  auto check_parent = [&](const std::string& parent, const std::string& who) {
    if (parent.empty() || cfg.find_giis(parent)) return;
    if (parent.find(':') == std::string::npos)
      throw ConfigError(who + ": parent_giis '" + parent + "' is neither a defined giis nor a URL");
  };
  for (const auto& g : cfg.giis) {
    if (!names.insert("giis/" + g.name).second) throw ConfigError("duplicate giis " + g.name);
    claim(g.endpoint(), "giis " + g.name);
    check_parent(g.parent_giis, "giis " + g.name);
    if (g.parent_giis == g.name) throw ConfigError("giis " + g.name + " is its own parent");
  }
  for (const auto& c : cfg.clusters) {
    if (!names.insert("cluster/" + c.name).second) throw ConfigError("duplicate cluster " + c.name);
    claim(c.endpoint(), "cluster " + c.name);
    check_parent(c.parent_giis, "cluster " + c.name);
  }
  for (const auto& e : cfg.ses) {
    if (!names.insert("se/" + e.name).second) throw ConfigError("duplicate se " + e.name);
    claim(e.endpoint(), "se " + e.name);
    check_parent(e.parent_giis, "se " + e.name);
  }
  if (cfg.rc) {
    claim(cfg.rc->endpoint(), "rc");
    check_parent(cfg.rc->parent_giis, "rc");
  }
  // giis parent chains must end
  for (const auto& g : cfg.giis) {
    std::set<std::string> seen;
    const GiisSpec* cur = &g;
    while (cur && !cur->parent_giis.empty()) {
      if (!seen.insert(cur->name).second) throw ConfigError("giis parent cycle through " + g.name);
      cur = cfg.find_giis(cur->parent_giis);
    }
  }
  return cfg;
}

FleetConfig load_fleet_config(const fs::path& file) {
  std::string text;
  try {
    text = read_file(file);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read " + file.string() + ": " + e.what());
  }
  return parse_fleet_config(text, fs::absolute(file).parent_path());
}

// ---------------------------------------------------------------------------

namespace {

fs::path se_root(const FleetConfig& cfg, const SeSpec& s) { return s.root.empty() ? cfg.dir / "se" / s.name : s.root; }

se::SeConfig se_config(const FleetConfig& cfg, const SeSpec& s) {
  se::SeConfig c;
  c.root = se_root(cfg, s);
  c.acl = s.acl;
  c.advertised_name = s.name;
  c.country = s.country;
  c.base_url = s.url();
  c.capacity_mb = s.capacity_mb;
  return c;
}

cluster::ClusterConfig cluster_config(const FleetConfig& cfg, const ClusterSpec& s) {
  cluster::ClusterConfig c;
  c.name = s.name;
  c.country = s.country;
  c.aliases = s.aliases;
  c.endpoint = s.endpoint();
  c.gridmap = s.gridmap;
  c.queues = s.queues;
  c.runtimeenvironments = s.runtimeenvironments;
  for (const auto& l : s.localse) {
    if (const SeSpec* se = cfg.find_se(l))
      c.local_se_paths.push_back(se_root(cfg, *se));
    else
      c.local_se_paths.push_back(fs::path(l));
  }
  c.dir = cfg.dir / "cluster" / s.name;
  if (cfg.rc) c.rc_endpoint = cfg.rc->endpoint();
  c.parent_giis = cfg.resolve_parent(s.parent_giis);
  c.ttl = s.ttl;
  c.default_lifetime = s.lifetime;
  return c;
}

info::GiisConfig giis_config(const GiisSpec& g) {
  info::GiisConfig c;
  c.name = g.name;
  c.country = g.country;
  c.endpoint = g.endpoint();
  c.allow = g.allow;
  c.default_ttl = g.ttl;
  c.subject = "/O=Grid/CN=giis-" + g.name;
  return c;
}

rc::RcConfig rc_config(const RcSpec& r) {
  rc::RcConfig c;
  c.name = r.name;
  c.country = r.country;
  c.url = "ngp://" + r.endpoint();
  c.writers = r.writers;
  return c;
}

}  // namespace

Fleet::Fleet(FleetConfig config, Clock& clock) : config_(std::move(config)), clock_(clock) {
  fs::create_directories(config_.dir);
  for (const auto& g : config_.giis) {
    auto svc = std::make_unique<info::GiisService>(giis_config(g), network_, clock_);
    network_.bind(g.endpoint(), svc.get(), "giis");
    if (!g.parent_giis.empty())
      registrars_.emplace_back(config_.resolve_parent(g.parent_giis), g.endpoint(), info::ChildKind::Giis, g.ttl,
                               "/O=Grid/CN=giis-" + g.name);
    giis_.emplace(g.name, std::move(svc));
  }
  for (const auto& s : config_.ses) {
    SeNode node;
    node.store = std::make_unique<se::StorageElement>(se_config(config_, s));
    node.service = std::make_unique<se::SeService>(*node.store);
    network_.bind(s.endpoint(), node.service.get(), "se");
    if (!s.parent_giis.empty())
      registrars_.emplace_back(config_.resolve_parent(s.parent_giis), s.endpoint(), info::ChildKind::Gris, s.ttl,
                               "/O=Grid/CN=se-" + s.name);
    ses_.emplace(s.name, std::move(node));
  }
  if (config_.rc) {
    const RcSpec& r = *config_.rc;
    catalog_ = r.log ? std::make_unique<rc::ReplicaCatalog>(config_.dir / "rc.log")
                     : std::make_unique<rc::ReplicaCatalog>();
    rc_ = std::make_unique<rc::RcService>(rc_config(r), *catalog_);
    network_.bind(r.endpoint(), rc_.get(), "rc");
    if (!r.parent_giis.empty())
      registrars_.emplace_back(config_.resolve_parent(r.parent_giis), r.endpoint(), info::ChildKind::Gris, r.ttl,
                               "/O=Grid/CN=rc-" + r.name);
  }
  for (const auto& c : config_.clusters) {
    auto svc = std::make_unique<cluster::ClusterService>(cluster_config(config_, c), network_, clock_);
    network_.bind(c.endpoint(), svc.get(), "cluster");
    clusters_.emplace(c.name, std::move(svc));
  }
}

Fleet::~Fleet() {
  for (const auto& c : config_.clusters) network_.unbind(c.endpoint());
}

void Fleet::boot() { tick(); }

void Fleet::tick() {
  for (auto& r : registrars_) {
    std::string role = network_.role_of(r.self());
    r.tick(network_, clock_, role);
  }
  for (auto& [name, c] : clusters_) c->tick();
}

cluster::ClusterService& Fleet::cluster(const std::string& name) {
  auto it = clusters_.find(name);
  if (it == clusters_.end()) throw Error("no cluster " + name);
  return *it->second;
}

se::StorageElement& Fleet::se(const std::string& name) {
  auto it = ses_.find(name);
  if (it == ses_.end()) throw Error("no se " + name);
  return *it->second.store;
}

info::GiisService& Fleet::giis(const std::string& name) {
  auto it = giis_.find(name);
  if (it == giis_.end()) throw Error("no giis " + name);
  return *it->second;
}

rc::ReplicaCatalog& Fleet::catalog() {
  if (!catalog_) throw Error("fleet has no replica catalog");
  return *catalog_;
}

std::vector<std::string> Fleet::cluster_names() const {
  std::vector<std::string> out;
  for (const auto& c : config_.clusters) out.push_back(c.name);
  return out;
}

std::string Fleet::rc_endpoint() const { return config_.rc ? config_.rc->endpoint() : std::string(); }

// ---------------------------------------------------------------------------

int run_daemons(const FleetConfig& config, Role role, const std::string& name, const std::atomic<bool>& stop,
                std::ostream& log) {
  SystemClock clock;
  net::TcpTransport transport;
  std::vector<std::unique_ptr<net::Service>> services;
  std::vector<cluster::ClusterService*> clusters;
  std::vector<std::unique_ptr<net::TcpServer>> servers;
  std::vector<info::Registrar> registrars;
  std::vector<std::string> roles;
  std::vector<std::unique_ptr<se::StorageElement>> stores;
  std::unique_ptr<rc::ReplicaCatalog> catalog;

  auto serve = [&](std::unique_ptr<net::Service> svc, const std::string& host, int port, const std::string& what) {
    auto server = std::make_unique<net::TcpServer>(*svc, host, port);
    server->start();
    log << what << " listening on " << host << ":" << server->port() << std::endl;
    services.push_back(std::move(svc));
    servers.push_back(std::move(server));
  };
  auto register_with = [&](const std::string& parent, const std::string& self, info::ChildKind kind, Duration ttl,
                           const std::string& subject, const std::string& r) {
    if (parent.empty()) return;
    registrars.emplace_back(config.resolve_parent(parent), self, kind, ttl, subject);
    roles.push_back(r);
  };

  std::size_t selected = 0;
  switch (role) {
    case Role::Giis:
      for (const auto& g : config.giis) {
        if (!name.empty() && g.name != name) continue;
        ++selected;
        serve(std::make_unique<info::GiisService>(giis_config(g), transport, clock), g.host, g.port,
              "giis " + g.name);
        register_with(g.parent_giis, g.endpoint(), info::ChildKind::Giis, g.ttl, "/O=Grid/CN=giis-" + g.name,
                      "giis");
      }
      break;
    case Role::Se:
      for (const auto& s : config.ses) {
        if (!name.empty() && s.name != name) continue;
        ++selected;
        stores.push_back(std::make_unique<se::StorageElement>(se_config(config, s)));
        serve(std::make_unique<se::SeService>(*stores.back()), s.host, s.port, "se " + s.name);
        register_with(s.parent_giis, s.endpoint(), info::ChildKind::Gris, s.ttl, "/O=Grid/CN=se-" + s.name, "se");
      }
      break;
    case Role::Rc:
      if (config.rc) {
        const RcSpec& r = *config.rc;
        ++selected;
        fs::create_directories(config.dir);
        catalog = r.log ? std::make_unique<rc::ReplicaCatalog>(config.dir / "rc.log")
                        : std::make_unique<rc::ReplicaCatalog>();
        serve(std::make_unique<rc::RcService>(rc_config(r), *catalog), r.host, r.port, "rc " + r.name);
        register_with(r.parent_giis, r.endpoint(), info::ChildKind::Gris, r.ttl, "/O=Grid/CN=rc-" + r.name, "rc");
      }
      break;
    case Role::Cluster:
      for (const auto& c : config.clusters) {
        if (!name.empty() && c.name != name) continue;
        ++selected;
        auto svc = std::make_unique<cluster::ClusterService>(cluster_config(config, c), transport, clock);
        clusters.push_back(svc.get());
        serve(std::move(svc), c.host, c.port, "cluster " + c.name);
      }
      break;
  }
  if (selected == 0) {
    log << "no matching service in the configuration" << std::endl;
    return 1;
  }

  while (!stop.load()) {
    for (std::size_t i = 0; i < registrars.size(); ++i) registrars[i].tick(transport, clock, roles[i]);
    for (auto* c : clusters) {
      try {
        c->tick();
      } catch (const std::exception& e) {
        log << "cluster " << c->config().name << ": " << e.what() << std::endl;
      }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  for (auto& s : servers) s->stop();
  return 0;
}

}  // namespace ng::fleet
