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

// NGP/1: the framed text protocol spoken between every pair of services.
//
//   NGP/1 <VERB> <target>        (request)   NGP/1 <code> <reason>   (response)
//   Name: Value
//   ...
//   <empty line>
//   <body, exactly Content-Length bytes>
//
// Lines end in a single LF.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ng/common.hpp"

namespace ng::wire {

enum class Verb { Query, Submit, Cancel, Clean, Put, Get, List, Del, Stat, Reg, Unreg, Lookup, Children, Attach };

std::string_view to_string(Verb v);
std::optional<Verb> parse_verb(std::string_view s);

/// Ordered header list with case-insensitive names. Names are unique.
class Headers {
 public:
  using Item = std::pair<std::string, std::string>;

  Headers() = default;
  Headers(std::initializer_list<Item> items);

  /// Replaces the value in place when the name exists, otherwise appends.
  void set(std::string_view name, std::string value);
  void erase(std::string_view name);
  const std::string* find(std::string_view name) const;
  std::string get(std::string_view name, std::string_view fallback = {}) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }

  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }

  bool operator==(const Headers&) const = default;

 private:
  std::vector<Item> items_;
};

struct Request {
  Verb verb = Verb::Query;
  std::string target;
  Headers headers;
  std::string body;

  /// Sets the body and keeps Content-Length consistent with it.
  void set_body(std::string b);
  bool operator==(const Request&) const = default;
};

struct Response {
  int code = 200;
  std::string reason = "OK";
  Headers headers;
  std::string body;

  void set_body(std::string b);
  bool ok() const { return code == 200; }
  bool operator==(const Response&) const = default;
};

using Message = std::variant<Request, Response>;

class EncodingError : public Error {
 public:
  using Error::Error;
};

/// Malformed bytes on the wire. position() is 1-based.
class ProtocolError : public ParseError {
 public:
  using ParseError::ParseError;
};

constexpr std::size_t kMaxBody = 256u * 1024u * 1024u;

std::string encode(const Request& r);
std::string encode(const Response& r);

struct Decoded {
  Message message;
  std::size_t consumed = 0;  // bytes past this point belong to the next frame
};

Decoded decode(std::string_view bytes);
Request decode_request(std::string_view bytes);
Response decode_response(std::string_view bytes);

/// Total frame size once the header block is complete, nullopt while more
/// bytes are needed. Throws ProtocolError when the header block is invalid.
std::optional<std::size_t> frame_length(std::string_view buffer);

std::string_view reason_phrase(int code);
Response make_response(int code, std::string reason = {}, std::string body = {});
Response error_response(int code, std::string_view message);

bool valid_subject(std::string_view dn);

/// True iff subject equals a pattern, or a pattern ending in "*" is a prefix.
bool authorize(std::string_view subject, std::span<const std::string> patterns);

}  // namespace ng::wire
