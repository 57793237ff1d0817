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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ng {

namespace fs = std::filesystem;

using TimePoint = std::chrono::system_clock::time_point;
using Duration = std::chrono::milliseconds;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parse failure carrying a 1-based byte position into the input.
class ParseError : public Error {
 public:
  ParseError(std::size_t position, const std::string& what)
      : Error(what + " at offset " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Source of time for every timeout, ttl and lifetime in the system.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimePoint now() const = 0;
  virtual void sleep_for(Duration d) = 0;
};

class SystemClock final : public Clock {
 public:
  TimePoint now() const override { return std::chrono::system_clock::now(); }
  void sleep_for(Duration d) override;
};

/// Logical clock for deterministic tests. sleep_for advances time instantly.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(TimePoint start = TimePoint{std::chrono::seconds{1767225600}});
  TimePoint now() const override;
  void sleep_for(Duration d) override { advance(d); }
  void advance(Duration d);

 private:
  std::atomic<std::int64_t> ms_;
};

std::int64_t to_millis(TimePoint t);
TimePoint from_millis(std::int64_t ms);
std::string rfc3339(TimePoint t);

std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
bool starts_with(std::string_view s, std::string_view prefix);

/// Strict non-negative decimal parse; nullopt on sign, junk, or overflow.
std::optional<std::uint64_t> parse_uint(std::string_view s);

bool valid_utf8(std::string_view s, std::size_t* bad_offset = nullptr);

std::string read_file(const fs::path& p);
/// Write to a sibling temporary then rename over the target.
void write_file_atomic(const fs::path& p, std::string_view data);
void append_line(const fs::path& p, std::string_view line);

/// 32-bit FNV-1a rendered as 8 lowercase hex digits.
std::string fnv1a_hex(std::string_view s);
std::string random_hex(std::size_t digits);

/// Quote for /bin/sh single-quote context.
std::string shell_quote(std::string_view s);

}  // namespace ng
