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
#include <mutex>
#include <string>
#include <vector>

#include "ng/infomodel.hpp"
#include "ng/transport.hpp"

namespace ng::se {

struct AclLine {
  std::string subject_pattern;
  std::string prefix;  // "/" grants the whole store
  bool read = false;
  bool write = false;
};

/// "<rights> <prefix> <subject pattern>" per line, rights in {r, w, rw};
/// '#' starts a comment. Subjects may contain spaces so they come last.
std::vector<AclLine> parse_acl(std::string_view text);

struct SeConfig {
  fs::path root;
  std::vector<AclLine> acl;
  std::string advertised_name;
  std::string country;
  std::string base_url;  // ngse://host:port
  std::uint64_t capacity_mb = 1024;
};

class SeError : public Error {
 public:
  SeError(int code, const std::string& what) : Error(what), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

struct ListItem {
  std::string name;  // relative to the listed prefix
  std::uint64_t size = 0;
};

enum class Right { Read, Write };

/// True when any ACL line matching subject and path grants the right.
bool acl_allows(const std::vector<AclLine>& acl, std::string_view subject, std::string_view path, Right right);

/// Lexically normalise "/a/./b/../c" to "/a/c". Throws SeError(400) when the
/// path climbs above the root or contains NUL.
std::string normalize_path(std::string_view path);

/// File store confined to its root directory.
class StorageElement {
 public:
  explicit StorageElement(SeConfig config);

  void put(std::string_view path, std::string_view bytes, std::string_view subject, bool overwrite = false);
  std::string get(std::string_view path, std::string_view subject) const;
  std::vector<ListItem> list(std::string_view prefix, std::string_view subject) const;
  void del(std::string_view path, std::string_view subject);
  std::uint64_t stat(std::string_view path, std::string_view subject) const;

  std::uint64_t used_bytes() const;
  std::uint64_t free_mb() const;
  info::Entry entry() const;
  const SeConfig& config() const { return config_; }

 private:
  fs::path resolve(std::string_view path, std::string_view subject, Right right) const;

  SeConfig config_;
  fs::path root_;
  mutable std::mutex write_mu_;
};

/// PUT/GET/LIST/DEL/STAT with target = path; QUERY serves the nordugrid-se entry.
class SeService final : public net::Service {
 public:
  explicit SeService(StorageElement& store) : store_(store) {}
  wire::Response handle(const wire::Request& req) override;

 private:
  StorageElement& store_;
};

}  // namespace ng::se
