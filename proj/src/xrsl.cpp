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

#include "ng/xrsl.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace ng::xrsl {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Document document() {
    std::size_t bad = 0;
    if (!valid_utf8(s_, &bad)) fail(bad, "invalid UTF-8");
    skip_ws();
    if (at_end()) fail(i_, "empty document");
    expect('&');
    Document doc;
    skip_ws();
    if (at_end() || peek() != '(') fail(i_, "expected '('");
    while (true) {
      skip_ws();
      if (at_end()) break;
      if (peek() != '(') fail(i_, "expected '(' or end of document");
      doc.relations.push_back(relation());
    }
    return doc;
  }

 private:
  [[noreturn]] void fail(std::size_t at, const std::string& what) const { throw ParseError(at + 1, what); }

  bool at_end() const { return i_ >= s_.size(); }
  char peek() const { return s_[i_]; }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++i_;
  }

  void expect(char c) {
    if (at_end() || peek() != c) fail(i_, std::string("expected '") + c + "'");
    ++i_;
  }

  static bool bare_char(char c) {
    return !std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')' && c != '=' && c != '"';
  }

  std::string bare_token() {
    std::size_t start = i_;
    while (!at_end() && bare_char(peek())) ++i_;
    if (i_ == start) fail(i_, at_end() ? "unexpected end of document" : "expected a value");
    return std::string(s_.substr(start, i_ - start));
  }

  std::string quoted() {
    std::size_t open = i_;
    ++i_;
    std::string out;
    while (true) {
      if (at_end()) fail(open, "unterminated string");
      char c = s_[i_++];
      if (c == '"') return out;
      if (c == '\\') {
        if (at_end()) fail(open, "unterminated string");
        char e = s_[i_];
        if (e != '"' && e != '\\') fail(i_ - 1, "invalid escape");
        out += e;
        ++i_;
      } else {
        out += c;
      }
    }
  }

  std::string scalar() {
    if (!at_end() && peek() == '"') return quoted();
    return bare_token();
  }

  Relation relation() {
    expect('(');
    skip_ws();
    Relation r;
    r.attribute = to_lower(bare_token());
    skip_ws();
    expect('=');
    skip_ws();
    if (!at_end() && peek() == '(') {
      std::vector<Tuple> tuples;
      while (!at_end() && peek() == '(') {
        tuples.push_back(tuple());
        skip_ws();
      }
      r.values.v = std::move(tuples);
    } else {
      r.values.v = scalar();
      skip_ws();
    }
    expect(')');
    return r;
  }

  Tuple tuple() {
    expect('(');
    Tuple t;
    skip_ws();
    while (!at_end() && peek() != ')') {
      t.push_back(scalar());
      skip_ws();
    }
    if (t.empty()) fail(i_, "empty tuple");
    expect(')');
    return t;
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

enum class Kind { Text, Number, List, Files, ActionKind };

const std::map<std::string, Kind, std::less<>>& attribute_kinds() {
  static const std::map<std::string, Kind, std::less<>> kinds{
      {"action", Kind::ActionKind}, {"arguments", Kind::List},    {"cputime", Kind::Number},
      {"disk", Kind::Number},       {"executable", Kind::Text},   {"inputfiles", Kind::Files},
      {"jobname", Kind::Text},      {"lifetime", Kind::Number},   {"memory", Kind::Number},
      {"notify", Kind::Text},       {"outputfiles", Kind::Files}, {"queue", Kind::Text},
      {"runtimeenvironment", Kind::List}, {"stderr", Kind::Text}, {"stdout", Kind::Text},
  };
  return kinds;
}

std::uint64_t number(const Relation& r) {
  auto n = parse_uint(r.values.scalar());
  if (!n) throw ValidationError(r.attribute + ": not an integer");
  return *n;
}

std::vector<std::string> flatten(const Relation& r) {
  if (r.values.is_scalar()) return {r.values.scalar()};
  std::vector<std::string> out;
  for (const auto& t : r.values.tuples()) out.insert(out.end(), t.begin(), t.end());
  return out;
}

std::vector<std::pair<std::string, std::string>> file_pairs(const Relation& r) {
  if (r.values.is_scalar()) throw ValidationError(r.attribute + ": expected (name location) tuples");
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& t : r.values.tuples()) {
    if (t.size() > 2) throw ValidationError(r.attribute + ": tuple has more than two values");
    out.emplace_back(t[0], t.size() == 2 ? t[1] : std::string());
  }
  return out;
}

void check_file_name(const std::string& attr, const std::string& name) {
  if (name.empty()) throw ValidationError(attr + ": empty file name");
  if (name.front() == '/') throw ValidationError(attr + ": absolute file name " + name);
  if (name.find_first_of("\n\r") != std::string::npos) throw ValidationError(attr + ": invalid file name");
  for (const auto& part : split(name, '/')) {
    if (part == "..") throw ValidationError(attr + ": file name escapes session directory: " + name);
  }
}

}  // namespace

Document parse(std::string_view text) { return Parser(text).document(); }

std::string_view to_string(Action a) {
  switch (a) {
    case Action::Cancel: return "cancel";
    case Action::Clean: return "clean";
    default: return "submit";
  }
}

void validate(const JobDescription& job) {
  if (job.action == Action::Submit && job.executable.empty()) throw ValidationError("executable: required");
  if (job.action != Action::Submit && (!job.inputfiles.empty() || !job.outputfiles.empty()))
    throw ValidationError("action " + std::string(to_string(job.action)) + ": staging attributes not allowed");
  std::set<std::string> seen;
  for (const auto& f : job.inputfiles) {
    check_file_name("inputfiles", f.name);
    if (!seen.insert(f.name).second) throw ValidationError("inputfiles: duplicate name " + f.name);
  }
  seen.clear();
  for (const auto& f : job.outputfiles) {
    check_file_name("outputfiles", f.name);
    if (!seen.insert(f.name).second) throw ValidationError("outputfiles: duplicate name " + f.name);
  }
  if (!job.notify.empty() && job.notify.find('@') == std::string::npos)
    throw ValidationError("notify: not an e-mail address");
}

JobDescription to_job(const Document& doc) {
  JobDescription job;
  std::set<std::string> seen_scalars;
  for (const auto& r : doc.relations) {
    auto it = attribute_kinds().find(r.attribute);
    if (it == attribute_kinds().end()) throw ValidationError(r.attribute + ": unknown attribute");
    Kind kind = it->second;
    bool scalar_kind = kind == Kind::Text || kind == Kind::Number || kind == Kind::ActionKind;
    if (scalar_kind) {
      if (!r.values.is_scalar()) throw ValidationError(r.attribute + ": expected a single value");
      if (!seen_scalars.insert(r.attribute).second) throw ValidationError(r.attribute + ": duplicate attribute");
    }
    const std::string& a = r.attribute;
    if (a == "executable") {
      job.executable = r.values.scalar();
    } else if (a == "arguments") {
      auto args = flatten(r);
      job.arguments.insert(job.arguments.end(), args.begin(), args.end());
    } else if (a == "inputfiles") {
      for (auto& [n, s] : file_pairs(r)) job.inputfiles.push_back({n, s});
    } else if (a == "outputfiles") {
      for (auto& [n, d] : file_pairs(r)) job.outputfiles.push_back({n, d});
    } else if (a == "cputime") {
      job.cputime = number(r);
    } else if (a == "memory") {
      job.memory = number(r);
    } else if (a == "disk") {
      job.disk = number(r);
    } else if (a == "lifetime") {
      job.lifetime = number(r);
    } else if (a == "runtimeenvironment") {
      for (auto& v : flatten(r)) job.runtimeenvironment.insert(v);
    } else if (a == "queue") {
      job.queue = r.values.scalar();
    } else if (a == "stdout") {
      job.stdout_file = r.values.scalar();
    } else if (a == "stderr") {
      job.stderr_file = r.values.scalar();
    } else if (a == "jobname") {
      job.jobname = r.values.scalar();
    } else if (a == "notify") {
      job.notify = r.values.scalar();
    } else if (a == "action") {
      const std::string& v = r.values.scalar();
      if (v == "submit")
        job.action = Action::Submit;
      else if (v == "cancel")
        job.action = Action::Cancel;
      else if (v == "clean")
        job.action = Action::Clean;
      else
        throw ValidationError("action: unknown value " + v);
    }
  }
  validate(job);
  return job;
}

std::string serialize(const Document& doc) {
  std::vector<const Relation*> sorted;
  for (const auto& r : doc.relations) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const Relation* a, const Relation* b) { return a->attribute < b->attribute; });
  std::string out = "&";
  for (const Relation* r : sorted) {
    out += '(';
    out += r->attribute;
    out += '=';
    if (r->values.is_scalar()) {
      out += quote(r->values.scalar());
    } else {
      bool first_tuple = true;
      for (const auto& t : r->values.tuples()) {
        if (!first_tuple) out += ' ';
        first_tuple = false;
        out += '(';
        for (std::size_t k = 0; k < t.size(); ++k) {
          if (k) out += ' ';
          out += quote(t[k]);
        }
        out += ')';
      }
    }
    out += ')';
  }
  return out;
}

std::string serialize(const JobDescription& job) {
  Document doc;
  auto text = [&](const char* name, const std::string& v) {
    if (!v.empty()) doc.relations.push_back({name, Values{v}});
  };
  auto num = [&](const char* name, std::uint64_t v) {
    if (v) doc.relations.push_back({name, Values{std::to_string(v)}});
  };
  if (job.action != Action::Submit) text("action", std::string(to_string(job.action)));
  if (!job.arguments.empty()) doc.relations.push_back({"arguments", Values{std::vector<Tuple>{job.arguments}}});
  num("cputime", job.cputime);
  num("disk", job.disk);
  text("executable", job.executable);
  if (!job.inputfiles.empty()) {
    std::vector<Tuple> t;
    for (const auto& f : job.inputfiles) t.push_back({f.name, f.source});
    doc.relations.push_back({"inputfiles", Values{std::move(t)}});
  }
  text("jobname", job.jobname);
  num("lifetime", job.lifetime);
  num("memory", job.memory);
  text("notify", job.notify);
  if (!job.outputfiles.empty()) {
    std::vector<Tuple> t;
    for (const auto& f : job.outputfiles) t.push_back({f.name, f.destination});
    doc.relations.push_back({"outputfiles", Values{std::move(t)}});
  }
  text("queue", job.queue);
  if (!job.runtimeenvironment.empty()) {
    Tuple t(job.runtimeenvironment.begin(), job.runtimeenvironment.end());
    doc.relations.push_back({"runtimeenvironment", Values{std::vector<Tuple>{t}}});
  }
  text("stderr", job.stderr_file);
  text("stdout", job.stdout_file);
  return serialize(doc);
}

}  // namespace ng::xrsl
