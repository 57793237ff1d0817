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

#include "ng/giis.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>

namespace ng::info {

std::string_view to_string(ChildKind k) { return k == ChildKind::Giis ? "giis" : "gris"; }

GiisService::GiisService(GiisConfig config, net::Transport& transport, Clock& clock)
    : config_(std::move(config)), transport_(transport), clock_(clock) {}

void GiisService::attach_child(const std::string& endpoint, ChildKind kind, std::optional<Duration> ttl) {
  std::string key = net::endpoint_key(endpoint);
  TimePoint now = clock_.now();
  std::lock_guard lock(mu_);
  for (auto& c : children_) {
    if (c->endpoint == key) {
      c->last_attach = now;
      c->kind = kind;
      if (ttl) c->ttl = *ttl;
      return;
    }
  }
  auto c = std::make_shared<Child>();
  c->endpoint = key;
  c->kind = kind;
  c->ttl = ttl.value_or(config_.default_ttl);
  c->last_attach = now;
  children_.push_back(std::move(c));
}

void GiisService::prune(TimePoint now) {
  std::lock_guard lock(mu_);
  std::erase_if(children_, [&](const std::shared_ptr<Child>& c) { return now - c->last_attach >= 3 * c->ttl; });
}

std::shared_ptr<const std::vector<Entry>> GiisService::refresh(Child& c, bool& partial) {
  std::lock_guard lock(c.fetch_mu);
  TimePoint now = clock_.now();
  if (c.has_fetched && !c.stale && now - c.last_fetch < c.ttl) {
    partial = partial || c.partial;
    return c.cache;
  }
  wire::Request req;
  req.verb = wire::Verb::Query;
  req.target = "/mds";
  req.headers.set("Subject", config_.subject);
  req.headers.set("Filter", "(objectclass=*)");
  req.headers.set("Recurse", c.kind == ChildKind::Giis ? "true" : "false");
  ++c.fetches;
  try {
    wire::Response resp = transport_.call(c.endpoint, req, "giis");
    if (!resp.ok()) throw Error("child answered " + std::to_string(resp.code));
    c.cache = std::make_shared<const std::vector<Entry>>(parse_entries(resp.body));
    c.last_fetch = now;
    c.has_fetched = true;
    c.stale = false;
    c.partial = iequals(resp.headers.get("Partial"), "true");
    partial = partial || c.partial;
    return c.cache;
  } catch (const std::exception&) {
    c.stale = true;
    partial = true;
    return nullptr;
  }
}

QueryResult GiisService::query(const Filter& f, bool recurse) {
  prune(clock_.now());
  std::vector<std::shared_ptr<Child>> children;
  {
    std::lock_guard lock(mu_);
    children = children_;
  }
  QueryResult result;
  std::set<std::string> seen;
  for (auto& c : children) {
    if (!recurse && c->kind == ChildKind::Giis) continue;
    auto cache = refresh(*c, result.partial);
    if (!cache) continue;
    for (const auto& e : *cache) {
      if (matches(f, e) && seen.insert(e.dn).second) result.entries.push_back(e);
    }
  }
  return result;
}

std::vector<ChildInfo> GiisService::children() const {
  std::vector<std::shared_ptr<Child>> children;
  {
    std::lock_guard lock(mu_);
    children = children_;
  }
  TimePoint now = clock_.now();
  std::vector<ChildInfo> out;
  for (auto& c : children) {
    std::lock_guard lock(c->fetch_mu);
    out.push_back({c->endpoint, c->kind, c->ttl, c->has_fetched && !c->stale && now - c->last_fetch < c->ttl,
                   c->fetches, c->cache ? c->cache->size() : 0});
  }
  return out;
}

std::size_t GiisService::upstream_fetches(const std::string& endpoint) const {
  std::string key = net::endpoint_key(endpoint);
  for (const auto& c : children())
    if (c.endpoint == key) return c.fetches;
  return 0;
}

wire::Response GiisService::handle(const wire::Request& req) {
  if (req.target != "/mds") return wire::error_response(404, "no such target " + req.target);
  const std::string subject = req.headers.get("Subject");
  switch (req.verb) {
    case wire::Verb::Query: {
      Filter f;
      try {
        f = parse_filter(req.headers.get("Filter", "(objectclass=*)"));
      } catch (const ParseError& e) {
        return wire::error_response(400, std::string("filter: ") + e.what());
      }
      QueryResult r = query(f, iequals(req.headers.get("Recurse", "false"), "true"));
      wire::Response resp = wire::make_response(200, "OK", serialize_entries(r.entries));
      if (r.partial) resp.headers.set("Partial", "true");
      return resp;
    }
    case wire::Verb::Attach: {
      if (!wire::authorize(subject, config_.allow)) return wire::error_response(403, "not allowed to attach");
      std::string endpoint = req.headers.get("Endpoint");
      std::string kind = to_lower(req.headers.get("Kind", "gris"));
      if (endpoint.empty() || (kind != "gris" && kind != "giis"))
        return wire::error_response(400, "ATTACH needs Endpoint and Kind gris|giis");
      std::optional<Duration> ttl;
      if (const std::string* t = req.headers.find("Ttl")) {
        char* end = nullptr;
        double secs = std::strtod(t->c_str(), &end);
        if (end == t->c_str() || *end != '\0' || !(secs > 0))
          return wire::error_response(400, "bad Ttl");
        ttl = Duration{static_cast<Duration::rep>(secs * 1000)};
      }
      try {
        attach_child(endpoint, kind == "giis" ? ChildKind::Giis : ChildKind::Gris, ttl);
      } catch (const Error& e) {
        return wire::error_response(400, e.what());
      }
      return wire::make_response(200);
    }
    case wire::Verb::Children: {
      std::string body;
      for (const auto& c : children()) {
        body += std::string(to_string(c.kind)) + " " + c.endpoint + " " + std::to_string(c.ttl.count()) + " " +
                (c.fresh ? "fresh" : "stale") + " " + std::to_string(c.fetches) + "\n";
      }
      return wire::make_response(200, "OK", body);
    }
    default:
      return wire::error_response(400, "unsupported verb " + std::string(wire::to_string(req.verb)));
  }
}

bool Registrar::tick(net::Transport& transport, Clock& clock, std::string_view role) {
  TimePoint now = clock.now();
  if (last_ && now - *last_ < ttl_) return false;
  wire::Request req{wire::Verb::Attach, "/mds", {{"Subject", subject_}}, {}};
  req.headers.set("Endpoint", self_);
  req.headers.set("Kind", std::string(to_string(kind_)));
  std::ostringstream ttl;
  ttl << static_cast<double>(ttl_.count()) / 1000.0;
  req.headers.set("Ttl", ttl.str());
  try {
    if (!transport.call(parent_, req, role).ok()) return false;
  } catch (const net::TransportError&) {
    return false;
  }
  last_ = now;
  ++attaches_;
  return true;
}

}  // namespace ng::info
