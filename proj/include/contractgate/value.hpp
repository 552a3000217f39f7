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

#ifndef CONTRACTGATE_VALUE_HPP
#define CONTRACTGATE_VALUE_HPP

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace contractgate {

using Timestamp = std::chrono::sys_time<std::chrono::microseconds>;

// ISO-8601 UTC, e.g. "2026-10-15T12:00:00.000000Z". Accepts an optional
// fractional part and either a 'Z' or "+00:00" suffix.
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);


/**
 * Kleene three-valued truth. The enumerators are ordered so that
 * conjunction is min and disjunction is max.
 */
enum class TriBool : std::uint8_t { False = 0, Unknown = 1, True = 2 };

constexpr TriBool tri(bool b) { return b ? TriBool::True : TriBool::False; }

constexpr TriBool operator&&(TriBool a, TriBool b)
{
  return a < b ? a : b;
}

constexpr TriBool operator||(TriBool a, TriBool b)
{
  return a < b ? b : a;
}

constexpr TriBool operator!(TriBool a)
{
  return static_cast<TriBool>(2 - static_cast<int>(a));
}

constexpr TriBool implies(TriBool a, TriBool b) { return !a || b; }

std::string_view to_string(TriBool t);


/// Result of resolving a path: the resolver could not find it.
struct Absent
{
  bool operator==(const Absent&) const = default;
};

/// The path resolved to something unusable (error status, bad payload).
struct Invalid
{
  bool operator==(const Invalid&) const = default;
};

struct Count
{
  std::uint64_t n = 0;
  bool operator==(const Count&) const = default;
};


class Value
{
public:
  using Storage = std::variant<
      Absent, Invalid, bool, std::int64_t, std::string, Timestamp, Count>;

  Value() : v_(Absent{}) {}
  Value(Absent a) : v_(a) {}
  Value(Invalid i) : v_(i) {}
  Value(bool b) : v_(b) {}
  Value(std::int64_t i) : v_(i) {}
  Value(int i) : v_(static_cast<std::int64_t>(i)) {}
  Value(std::string s) : v_(std::move(s)) {}
  Value(const char* s) : v_(std::string(s)) {}
  Value(Timestamp t) : v_(t) {}
  Value(Count c) : v_(c) {}

  bool is_absent() const { return std::holds_alternative<Absent>(v_); }
  bool is_invalid() const { return std::holds_alternative<Invalid>(v_); }
  bool is_defined() const { return !is_absent() && !is_invalid(); }

  const bool* as_bool() const { return std::get_if<bool>(&v_); }
  const std::int64_t* as_int() const { return std::get_if<std::int64_t>(&v_); }
  const std::string* as_text() const { return std::get_if<std::string>(&v_); }
  const Timestamp* as_timestamp() const { return std::get_if<Timestamp>(&v_); }
  const Count* as_count() const { return std::get_if<Count>(&v_); }

  const Storage& storage() const { return v_; }

  bool operator==(const Value&) const = default;

private:
  Storage v_;
};

// Debug rendering: Absent, Invalid, True, 42, 'text', #<timestamp>, count(3).
std::string describe(const Value& v);

} // namespace contractgate

#endif // CONTRACTGATE_VALUE_HPP
