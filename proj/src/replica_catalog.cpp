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

#include "ng/replica_catalog.hpp"

#include <algorithm>
#include <fstream>

namespace ng::rc {

ReplicaCatalog::ReplicaCatalog(fs::path log) {
  if (fs::exists(log)) {
    std::ifstream in(log);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      auto parts = split(line, ' ');
      if (parts.size() != 3 || (parts[0] != "REG" && parts[0] != "UNREG"))
        throw Error(log.string() + ":" + std::to_string(lineno) + ": malformed log line");
      apply(parts[0] == "REG", parts[1], parts[2]);
    }
  } else if (log.has_parent_path()) {
    fs::create_directories(log.parent_path());
  }
  log_ = std::move(log);
}

bool ReplicaCatalog::valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (static_cast<unsigned char>(c) <= 0x20 || c == 0x7f) return false;
  return true;
}

bool ReplicaCatalog::apply(bool reg, const std::string& lfn, const std::string& pfn) {
  auto it = map_.find(lfn);
  if (reg) {
    auto& pfns = map_[lfn];
    if (std::find(pfns.begin(), pfns.end(), pfn) != pfns.end()) return false;
    pfns.push_back(pfn);
    return true;
  }
  if (it == map_.end()) return false;
  auto pos = std::find(it->second.begin(), it->second.end(), pfn);
  if (pos == it->second.end()) return false;
  it->second.erase(pos);
  if (it->second.empty()) map_.erase(it);
  return true;
}

bool ReplicaCatalog::register_replica(const std::string& lfn, const std::string& pfn) {
  if (!valid_name(lfn) || !valid_name(pfn)) throw Error("lfn and pfn must be non-empty without whitespace");
  std::lock_guard lock(mu_);
  bool changed = apply(true, lfn, pfn);
  if (changed && log_) append_line(*log_, "REG " + lfn + " " + pfn);
  return changed;
}

bool ReplicaCatalog::unregister_replica(const std::string& lfn, const std::string& pfn) {
  std::lock_guard lock(mu_);
  bool changed = apply(false, lfn, pfn);
  if (changed && log_) append_line(*log_, "UNREG " + lfn + " " + pfn);
  return changed;
}

std::optional<std::vector<std::string>> ReplicaCatalog::lookup(const std::string& lfn) const {
  std::lock_guard lock(mu_);
  auto it = map_.find(lfn);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, std::vector<std::string>> ReplicaCatalog::snapshot() const {
  std::lock_guard lock(mu_);
  return map_;
}

info::Entry rc_entry(const RcConfig& cfg, std::size_t mappings) {
  info::Entry e("nordugrid-rc-name=" + cfg.name + ",ou=" + cfg.country + ",o=grid", info::oc::kRc);
  e.add("nordugrid-rc-name", cfg.name);
  e.add("nordugrid-rc-baseurl", cfg.url);
  e.add("nordugrid-rc-mappings", std::to_string(mappings));
  return e;
}

wire::Response RcService::handle(const wire::Request& req) {
  using wire::Verb;
  if (req.verb == Verb::Query) {
    info::Filter f;
    try {
      f = info::parse_filter(req.headers.get("Filter", "(objectclass=*)"));
    } catch (const ParseError& e) {
      return wire::error_response(400, std::string("filter: ") + e.what());
    }
    auto entries = info::select(f, {rc_entry(config_, catalog_.snapshot().size())});
    return wire::make_response(200, "OK", info::serialize_entries(entries));
  }
  if (!starts_with(req.target, "/rc/")) return wire::error_response(404, "no such target " + req.target);
  std::string lfn = req.target.substr(4);
  if (!ReplicaCatalog::valid_name(lfn)) return wire::error_response(400, "bad lfn");
  const std::string subject = req.headers.get("Subject");
  switch (req.verb) {
    case Verb::Lookup: {
      auto pfns = catalog_.lookup(lfn);
      if (!pfns) return wire::error_response(404, "unknown lfn " + lfn);
      std::string body;
      for (const auto& p : *pfns) body += p + "\n";
      return wire::make_response(200, "OK", body);
    }
    case Verb::Reg:
    case Verb::Unreg: {
      if (!wire::authorize(subject, config_.writers)) return wire::error_response(403, "not a catalog writer");
      std::string pfn = req.headers.get("Pfn");
      if (!ReplicaCatalog::valid_name(pfn)) return wire::error_response(400, "missing or bad Pfn header");
      if (req.verb == Verb::Reg)
        catalog_.register_replica(lfn, pfn);
      else
        catalog_.unregister_replica(lfn, pfn);
      return wire::make_response(200);
    }
    default:
      return wire::error_response(400, "unsupported verb " + std::string(wire::to_string(req.verb)));
  }
}

}  // namespace ng::rc
