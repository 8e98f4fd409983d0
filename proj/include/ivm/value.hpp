#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ivm {

enum class ValueKind : std::uint8_t { Int, Str, Null };

// A constant: 64-bit integer, interned string, or null.
class Value {
 public:
  constexpr Value() = default;

  static constexpr Value integer(std::int64_t v) { return Value(ValueKind::Int, v); }
  static Value string(std::string_view s);
  static constexpr Value null() { return Value(ValueKind::Null, 0); }

  ValueKind kind() const { return kind_; }
  bool is_null() const { return kind_ == ValueKind::Null; }
  std::int64_t as_int() const { return bits_; }
  std::string_view as_string() const;

  std::size_t hash() const;
  std::string to_string() const;

  friend bool operator==(const Value&, const Value&) = default;
  // Total order used only for ordered containers; strings order by intern id.
  friend auto operator<=>(const Value&, const Value&) = default;

 private:
  constexpr Value(ValueKind k, std::int64_t b) : kind_(k), bits_(b) {}

  ValueKind kind_ = ValueKind::Int;
  std::int64_t bits_ = 0;
};

using Tuple = std::vector<Value>;

struct TupleHash {
  std::size_t operator()(const Tuple& t) const;
};

// Typed comparison; throws TypeMismatch when comparing an integer with a string.
int compare_values(const Value& a, const Value& b);

// False if any component is null: nulls never join.
bool joinable(const Tuple& t);

Tuple project(const Tuple& t, std::span<const int> positions);

std::string to_string(const Tuple& t);

// Parses a textual constant: integer if it fits, NULL literal, otherwise string.
Value parse_value(std::string_view text);

}  // namespace ivm
