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
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ng/common.hpp"

namespace ng::xrsl {

using Tuple = std::vector<std::string>;

/// Right-hand side of a relation: one scalar, or one or more tuples.
struct Values {
  std::variant<std::string, std::vector<Tuple>> v;

  bool is_scalar() const { return std::holds_alternative<std::string>(v); }
  const std::string& scalar() const { return std::get<std::string>(v); }
  const std::vector<Tuple>& tuples() const { return std::get<std::vector<Tuple>>(v); }
  bool operator==(const Values&) const = default;
};

struct Relation {
  std::string attribute;  // lowercase
  Values values;
  bool operator==(const Relation&) const = default;
};

struct Document {
  std::vector<Relation> relations;
  bool operator==(const Document&) const = default;
};

/// Grammar:
///   document := "&" relation+
///   relation := "(" name "=" values ")"
///   values   := scalar | tuple+
///   tuple    := "(" scalar+ ")"
///   scalar   := bare-token | quoted-string     (escapes \" and \\)
/// Throws ParseError with a 1-based byte position.
Document parse(std::string_view text);

enum class Action { Submit, Cancel, Clean };

std::string_view to_string(Action a);

struct InputFile {
  std::string name;
  std::string source;  // empty: uploaded by the user
  bool operator==(const InputFile&) const = default;
};

struct OutputFile {
  std::string name;
  std::string destination;  // empty: kept in the session directory for download
  bool operator==(const OutputFile&) const = default;
};

struct JobDescription {
  std::string executable;
  std::vector<std::string> arguments;
  std::vector<InputFile> inputfiles;
  std::vector<OutputFile> outputfiles;
  std::uint64_t cputime = 0;  // seconds, 0 = unspecified
  std::uint64_t memory = 0;   // MB
  std::uint64_t disk = 0;     // MB
  std::set<std::string> runtimeenvironment;
  std::string queue;
  std::string stdout_file;
  std::string stderr_file;
  std::string jobname;
  std::string notify;
  std::uint64_t lifetime = 0;  // seconds, 0 = server default
  Action action = Action::Submit;

  bool operator==(const JobDescription&) const = default;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Strict mapping: unknown attributes and malformed values are rejected.
JobDescription to_job(const Document& doc);

/// Canonical text: attributes sorted, every scalar quoted, single spaces
/// between tuples, unset fields omitted.
std::string serialize(const JobDescription& job);

/// Same canonical rules applied to an arbitrary document.
std::string serialize(const Document& doc);

inline JobDescription parse_job(std::string_view text) { return to_job(parse(text)); }

/// Checks the JobDescription invariants; throws ValidationError.
void validate(const JobDescription& job);

}  // namespace ng::xrsl
