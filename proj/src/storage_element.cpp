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

#include "ng/storage_element.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>

namespace ng::se {

std::vector<AclLine> parse_acl(std::string_view text) {
  std::vector<AclLine> out;
  std::size_t lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto sp1 = line.find(' ');
    auto sp2 = sp1 == std::string::npos ? std::string::npos : line.find(' ', sp1 + 1);
    if (sp2 == std::string::npos) throw Error("acl line " + std::to_string(lineno) + ": expected '<rights> <prefix> <subject>'");
    std::string rights = line.substr(0, sp1);
    AclLine a;
    a.prefix = line.substr(sp1 + 1, sp2 - sp1 - 1);
    a.subject_pattern = trim(line.substr(sp2 + 1));
    for (char c : rights) {
      if (c == 'r')
        a.read = true;
      else if (c == 'w')
        a.write = true;
      else
        throw Error("acl line " + std::to_string(lineno) + ": unknown right '" + std::string(1, c) + "'");
    }
    out.push_back(std::move(a));
  }
  return out;
}

namespace {

bool prefix_covers(std::string_view prefix, std::string_view path) {
  if (prefix.empty() || prefix == "/") return true;
  std::string_view p = prefix;
  if (p.back() == '/') p.remove_suffix(1);
  if (!starts_with(path, p)) return false;
  return path.size() == p.size() || path[p.size()] == '/';
}

}  // namespace

bool acl_allows(const std::vector<AclLine>& acl, std::string_view subject, std::string_view path, Right right) {
  for (const auto& line : acl) {
    if (!(right == Right::Read ? line.read : line.write)) continue;
    std::string pattern = line.subject_pattern;
    if (!wire::authorize(subject, std::span<const std::string>(&pattern, 1))) continue;
    if (prefix_covers(normalize_path(line.prefix), path)) return true;
  }
  return false;
}

std::string normalize_path(std::string_view path) {
  if (path.find('\0') != std::string_view::npos) throw SeError(400, "NUL in path");
  std::vector<std::string> parts;
  for (const auto& part : split(path, '/')) {
    if (part.empty() || part == ".") continue;
    if (part == "..") {
      if (parts.empty()) throw SeError(400, "path escapes storage root: " + std::string(path));
      parts.pop_back();
      continue;
    }
    parts.push_back(part);
  }
  std::string out;
  for (const auto& p : parts) out += "/" + p;
  return out.empty() ? "/" : out;
}

StorageElement::StorageElement(SeConfig config) : config_(std::move(config)) {
  fs::create_directories(config_.root);
  root_ = fs::canonical(config_.root);
}

fs::path StorageElement::resolve(std::string_view path, std::string_view subject, Right right) const {
  std::string norm = normalize_path(path);
  if (!acl_allows(config_.acl, subject, norm, right))
    throw SeError(403, std::string(right == Right::Read ? "read" : "write") + " access denied to " + norm);
  fs::path full = norm == "/" ? root_ : root_ / norm.substr(1);
  // symlinks inside the store must not lead out of it
  fs::path real = fs::weakly_canonical(full);
  auto rel = real.lexically_relative(root_);
  if (rel.empty() || *rel.begin() == "..") throw SeError(400, "path escapes storage root: " + norm);
  return full;
}

void StorageElement::put(std::string_view path, std::string_view bytes, std::string_view subject, bool overwrite) {
  fs::path full = resolve(path, subject, Right::Write);
  if (full == root_) throw SeError(400, "cannot write the root");
  if (fs::is_directory(full)) throw SeError(409, "is a directory");
  std::error_code ec;
  fs::create_directories(full.parent_path(), ec);
  if (ec) throw SeError(409, "cannot create parent: " + ec.message());
  static std::atomic<unsigned> seq{0};
  fs::path tmp = full.parent_path() / (".put." + full.filename().string() + "." + std::to_string(seq++));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw SeError(500, "cannot write " + std::string(path));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out.flush()) throw SeError(500, "short write " + std::string(path));
  }
  std::lock_guard lock(write_mu_);
  if (fs::exists(full) && !overwrite) {
    fs::remove(tmp);
    throw SeError(409, "exists: " + normalize_path(path));
  }
  fs::rename(tmp, full);
}

std::string StorageElement::get(std::string_view path, std::string_view subject) const {
  fs::path full = resolve(path, subject, Right::Read);
  if (!fs::is_regular_file(full)) throw SeError(404, "no such file " + normalize_path(path));
  return read_file(full);
}

std::vector<ListItem> StorageElement::list(std::string_view prefix, std::string_view subject) const {
  fs::path full = resolve(prefix, subject, Right::Read);
  std::vector<ListItem> out;
  if (fs::is_regular_file(full)) {
    out.push_back({full.filename().string(), fs::file_size(full)});
    return out;
  }
  if (!fs::is_directory(full)) throw SeError(404, "no such path " + normalize_path(prefix));
  for (const auto& de : fs::recursive_directory_iterator(full)) {
    if (!de.is_regular_file()) continue;
    std::string name = de.path().lexically_relative(full).string();
    if (starts_with(de.path().filename().string(), ".put.")) continue;
    out.push_back({name, de.file_size()});
  }
  std::sort(out.begin(), out.end(), [](const ListItem& a, const ListItem& b) { return a.name < b.name; });
  return out;
}

void StorageElement::del(std::string_view path, std::string_view subject) {
  fs::path full = resolve(path, subject, Right::Write);
  std::lock_guard lock(write_mu_);
  if (!fs::is_regular_file(full)) throw SeError(404, "no such file " + normalize_path(path));
  fs::remove(full);
}

std::uint64_t StorageElement::stat(std::string_view path, std::string_view subject) const {
  fs::path full = resolve(path, subject, Right::Read);
  if (!fs::is_regular_file(full)) throw SeError(404, "no such file " + normalize_path(path));
  return fs::file_size(full);
}

std::uint64_t StorageElement::used_bytes() const {
  std::uint64_t total = 0;
  for (const auto& de : fs::recursive_directory_iterator(root_)) {
    if (de.is_regular_file()) total += de.file_size();
  }
  return total;
}

std::uint64_t StorageElement::free_mb() const {
  constexpr std::uint64_t kMb = 1024 * 1024;
  std::uint64_t used_mb = (used_bytes() + kMb - 1) / kMb;
  return used_mb >= config_.capacity_mb ? 0 : config_.capacity_mb - used_mb;
}

info::Entry StorageElement::entry() const {
  info::Entry e("nordugrid-se-name=" + config_.advertised_name + ",ou=" + config_.country + ",o=grid",
                info::oc::kSe);
  e.add("nordugrid-se-name", config_.advertised_name);
  e.add("nordugrid-se-baseurl", config_.base_url);
  e.add("nordugrid-se-totalspace", std::to_string(config_.capacity_mb));
  e.add("nordugrid-se-freespace", std::to_string(free_mb()));
  return e;
}

wire::Response SeService::handle(const wire::Request& req) {
  using wire::Verb;
  const std::string subject = req.headers.get("Subject");
  try {
    switch (req.verb) {
      case Verb::Query: {
        info::Filter f = info::parse_filter(req.headers.get("Filter", "(objectclass=*)"));
        return wire::make_response(200, "OK", info::serialize_entries(info::select(f, {store_.entry()})));
      }
      case Verb::Put:
        store_.put(req.target, req.body, subject, iequals(req.headers.get("Overwrite"), "true"));
        return wire::make_response(200);
      case Verb::Get:
        return wire::make_response(200, "OK", store_.get(req.target, subject));
      case Verb::List: {
        std::string body;
        for (const auto& item : store_.list(req.target, subject))
          body += std::to_string(item.size) + " " + item.name + "\n";
        return wire::make_response(200, "OK", body);
      }
      case Verb::Del:
        store_.del(req.target, subject);
        return wire::make_response(200);
      case Verb::Stat: {
        wire::Response r = wire::make_response(200);
        r.headers.set("Size", std::to_string(store_.stat(req.target, subject)));
        return r;
      }
      default:
        return wire::error_response(400, "unsupported verb " + std::string(wire::to_string(req.verb)));
    }
  } catch (const SeError& e) {
    return wire::error_response(e.code(), e.what());
  } catch (const ParseError& e) {
    return wire::error_response(400, e.what());
  }
}

}  // namespace ng::se
