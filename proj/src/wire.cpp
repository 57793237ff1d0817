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

#include "ng/wire.hpp"

#include <array>
#include <cctype>

namespace ng::wire {

namespace {

constexpr std::string_view kMagic = "NGP/1 ";

constexpr std::array<std::pair<Verb, std::string_view>, 14> kVerbs{{
    {Verb::Query, "QUERY"},
    {Verb::Submit, "SUBMIT"},
    {Verb::Cancel, "CANCEL"},
    {Verb::Clean, "CLEAN"},
    {Verb::Put, "PUT"},
    {Verb::Get, "GET"},
    {Verb::List, "LIST"},
    {Verb::Del, "DEL"},
    {Verb::Stat, "STAT"},
    {Verb::Reg, "REG"},
    {Verb::Unreg, "UNREG"},
    {Verb::Lookup, "LOOKUP"},
    {Verb::Children, "CHILDREN"},
    {Verb::Attach, "ATTACH"},
}};

constexpr std::array<int, 6> kCodes{200, 400, 403, 404, 409, 500};

bool valid_code(int code) {
  for (int c : kCodes)
    if (c == code) return true;
  return false;
}

bool valid_header_name(std::string_view n) {
  if (n.empty()) return false;
  for (char c : n) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-')) return false;
  }
  return true;
}

bool valid_header_value(std::string_view v) { return v.find_first_of("\r\n") == std::string_view::npos; }

bool valid_target(std::string_view t) {
  if (t.empty()) return false;
  for (char c : t) {
    if (static_cast<unsigned char>(c) <= 0x20 || c == 0x7f) return false;
  }
  return true;
}

void check_body_header(const Headers& h, const std::string& body) {
  const std::string* cl = h.find("Content-Length");
  if (body.empty()) {
    if (cl) throw EncodingError("Content-Length present on empty body");
    return;
  }
  if (!cl || *cl != std::to_string(body.size())) throw EncodingError("Content-Length does not match body");
}

void encode_headers(std::string& out, const Headers& h) {
  for (const auto& [name, value] : h) {
    if (!valid_header_name(name)) throw EncodingError("invalid header name '" + name + "'");
    if (!valid_header_value(value)) throw EncodingError("invalid characters in header " + name);
    out += name;
    out += ": ";
    out += value;
    out += '\n';
  }
  out += '\n';
}

// Parses the header block starting at `pos`; leaves `pos` just past the
// terminating blank line.
Headers parse_headers(std::string_view bytes, std::size_t& pos) {
  Headers h;
  while (true) {
    auto eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) throw ProtocolError(bytes.size() + 1, "missing blank line after headers");
    std::string_view line = bytes.substr(pos, eol - pos);
    if (line.empty()) {
      pos = eol + 1;
      return h;
    }
    auto sep = line.find(": ");
    if (sep == std::string_view::npos) throw ProtocolError(pos + 1, "header line without ': '");
    std::string_view name = line.substr(0, sep);
    std::string_view value = line.substr(sep + 2);
    if (!valid_header_name(name)) throw ProtocolError(pos + 1, "invalid header name");
    if (!valid_header_value(value)) throw ProtocolError(pos + sep + 3, "invalid header value");
    if (h.contains(name)) throw ProtocolError(pos + 1, "duplicate header " + std::string(name));
    h.set(name, std::string(value));
    pos = eol + 1;
  }
}

std::size_t body_length(const Headers& h, std::size_t header_pos) {
  const std::string* cl = h.find("Content-Length");
  if (!cl) return 0;
  auto n = parse_uint(*cl);
  if (!n || *n == 0 || *n > kMaxBody) throw ProtocolError(header_pos, "bad Content-Length");
  return static_cast<std::size_t>(*n);
}

struct FirstLine {
  bool is_response = false;
  Verb verb = Verb::Query;
  std::string target;
  int code = 0;
  std::string reason;
};

FirstLine parse_first_line(std::string_view bytes, std::size_t& pos) {
  auto eol = bytes.find('\n');
  if (eol == std::string_view::npos) throw ProtocolError(bytes.size() + 1, "incomplete first line");
  std::string_view line = bytes.substr(0, eol);
  if (!starts_with(line, kMagic)) throw ProtocolError(1, "expected 'NGP/1 '");
  std::string_view rest = line.substr(kMagic.size());
  FirstLine fl;
  if (rest.size() >= 3 && std::isdigit(static_cast<unsigned char>(rest[0])) &&
      std::isdigit(static_cast<unsigned char>(rest[1])) && std::isdigit(static_cast<unsigned char>(rest[2]))) {
    fl.is_response = true;
    fl.code = (rest[0] - '0') * 100 + (rest[1] - '0') * 10 + (rest[2] - '0');
    if (!valid_code(fl.code)) throw ProtocolError(kMagic.size() + 1, "unknown status code");
    if (rest.size() < 4 || rest[3] != ' ') throw ProtocolError(kMagic.size() + 4, "expected ' ' after status code");
    fl.reason = std::string(rest.substr(4));
    if (fl.reason.find('\r') != std::string::npos) throw ProtocolError(kMagic.size() + 5, "CR in reason");
  } else {
    auto sp = rest.find(' ');
    if (sp == std::string_view::npos) throw ProtocolError(kMagic.size() + 1, "expected '<VERB> <target>'");
    auto verb = parse_verb(rest.substr(0, sp));
    if (!verb) throw ProtocolError(kMagic.size() + 1, "unknown verb");
    fl.verb = *verb;
    fl.target = std::string(rest.substr(sp + 1));
    if (!valid_target(fl.target)) throw ProtocolError(kMagic.size() + sp + 2, "invalid target");
  }
  pos = eol + 1;
  return fl;
}

}  // namespace

std::string_view to_string(Verb v) {
  for (const auto& [verb, name] : kVerbs)
    if (verb == v) return name;
  return "?";
}

std::optional<Verb> parse_verb(std::string_view s) {
  for (const auto& [verb, name] : kVerbs)
    if (name == s) return verb;
  return std::nullopt;
}

Headers::Headers(std::initializer_list<Item> items) {
  for (const auto& [n, v] : items) set(n, v);
}

void Headers::set(std::string_view name, std::string value) {
  for (auto& [n, v] : items_) {
    if (iequals(n, name)) {
      v = std::move(value);
      return;
    }
  }
  items_.emplace_back(std::string(name), std::move(value));
}

void Headers::erase(std::string_view name) {
  std::erase_if(items_, [&](const Item& it) { return iequals(it.first, name); });
}

const std::string* Headers::find(std::string_view name) const {
  for (const auto& [n, v] : items_)
    if (iequals(n, name)) return &v;
  return nullptr;
}

std::string Headers::get(std::string_view name, std::string_view fallback) const {
  const std::string* v = find(name);
  return v ? *v : std::string(fallback);
}

void Request::set_body(std::string b) {
  body = std::move(b);
  if (body.empty())
    headers.erase("Content-Length");
  else
    headers.set("Content-Length", std::to_string(body.size()));
}

void Response::set_body(std::string b) {
  body = std::move(b);
  if (body.empty())
    headers.erase("Content-Length");
  else
    headers.set("Content-Length", std::to_string(body.size()));
}

std::string encode(const Request& r) {
  if (!valid_target(r.target)) throw EncodingError("invalid target '" + r.target + "'");
  const std::string* subject = r.headers.find("Subject");
  if (!subject) throw EncodingError("request without Subject");
  if (!valid_subject(*subject)) throw EncodingError("invalid Subject");
  check_body_header(r.headers, r.body);
  std::string out(kMagic);
  out += to_string(r.verb);
  out += ' ';
  out += r.target;
  out += '\n';
  encode_headers(out, r.headers);
  out += r.body;
  return out;
}

std::string encode(const Response& r) {
  if (!valid_code(r.code)) throw EncodingError("invalid status code " + std::to_string(r.code));
  if (r.reason.find_first_of("\r\n") != std::string::npos) throw EncodingError("invalid reason");
  check_body_header(r.headers, r.body);
  std::string out(kMagic);
  out += std::to_string(r.code);
  out += ' ';
  out += r.reason;
  out += '\n';
  encode_headers(out, r.headers);
  out += r.body;
  return out;
}

Decoded decode(std::string_view bytes) {
  std::size_t pos = 0;
  FirstLine fl = parse_first_line(bytes, pos);
  std::size_t header_start = pos + 1;
  Headers headers = parse_headers(bytes, pos);
  std::size_t n = body_length(headers, header_start);
  if (bytes.size() - pos < n) throw ProtocolError(bytes.size() + 1, "body shorter than Content-Length");
  std::string body(bytes.substr(pos, n));
  std::size_t consumed = pos + n;
  if (fl.is_response) {
    Response r{fl.code, std::move(fl.reason), std::move(headers), std::move(body)};
    return {std::move(r), consumed};
  }
  const std::string* subject = headers.find("Subject");
  if (!subject) throw ProtocolError(header_start, "request without Subject");
  if (!valid_subject(*subject)) throw ProtocolError(header_start, "invalid Subject");
  Request r{fl.verb, std::move(fl.target), std::move(headers), std::move(body)};
  return {std::move(r), consumed};
}

Request decode_request(std::string_view bytes) {
  auto d = decode(bytes);
  if (auto* r = std::get_if<Request>(&d.message)) return std::move(*r);
  throw ProtocolError(1, "expected a request");
}

Response decode_response(std::string_view bytes) {
  auto d = decode(bytes);
  if (auto* r = std::get_if<Response>(&d.message)) return std::move(*r);
  throw ProtocolError(1, "expected a response");
}

std::optional<std::size_t> frame_length(std::string_view buffer) {
  auto end = buffer.find("\n\n");
  if (end == std::string_view::npos) return std::nullopt;
  std::size_t pos = 0;
  parse_first_line(buffer, pos);
  std::size_t header_start = pos + 1;
  Headers headers = parse_headers(buffer, pos);
  return pos + body_length(headers, header_start);
}

std::string_view reason_phrase(int code) {
  switch (code) {
    case 200: return "OK";
    case 400: return "Bad Request";
    case 403: return "Forbidden";
    case 404: return "Not Found";
    case 409: return "Conflict";
    default: return "Internal Error";
  }
}

Response make_response(int code, std::string reason, std::string body) {
  Response r;
  r.code = code;
  r.reason = reason.empty() ? std::string(reason_phrase(code)) : std::move(reason);
  r.set_body(std::move(body));
  return r;
}

Response error_response(int code, std::string_view message) {
  std::string reason(message);
  for (auto& c : reason)
    if (c == '\n' || c == '\r') c = ' ';
  return make_response(code, reason.empty() ? std::string(reason_phrase(code)) : reason);
}

bool valid_subject(std::string_view dn) {
  return !dn.empty() && dn.front() == '/' && dn.find_first_of("\r\n") == std::string_view::npos;
}

bool authorize(std::string_view subject, std::span<const std::string> patterns) {
  for (const auto& p : patterns) {
    if (!p.empty() && p.back() == '*') {
      if (starts_with(subject, std::string_view(p).substr(0, p.size() - 1))) return true;
    } else if (subject == p) {
      return true;
    }
  }
  return false;
}

}  // namespace ng::wire
