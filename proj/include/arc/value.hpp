#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace arc {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

enum class ValueTag { Null, Int, Dec, Text, Bool };

std::string_view to_string(ValueTag tag);

/// Scalar constant. Identity (operator==, ordering) is tag-sensitive: int 2
/// and dec 2 are different values. Numeric comparison with int->dec widening
/// lives in `compare_values`.
class Value {
 public:
  Value() = default;

  static Value null() { return Value(); }
  static Value integer(BigInt v);
  static Value integer(std::int64_t v) { return integer(BigInt(v)); }
  static Value decimal(Rational v);
  static Value text(std::string v);
  static Value boolean(bool v);

  /// Parses "12", "-3" (int) or "2.50", "1/3" (dec).
  static Value parse_number(std::string_view text);

  ValueTag tag() const { return static_cast<ValueTag>(data_.index()); }
  bool is_null() const { return tag() == ValueTag::Null; }
  bool is_numeric() const { return tag() == ValueTag::Int || tag() == ValueTag::Dec; }

  const BigInt& as_int() const { return std::get<1>(data_); }
  const Rational& as_dec() const { return std::get<2>(data_); }
  const std::string& as_text() const { return std::get<3>(data_); }
  bool as_bool() const { return std::get<4>(data_); }

  /// Exact rational view of an int or dec.
  Rational as_rational() const;

  /// Human-facing rendering: texts unquoted, null as "null".
  std::string to_display() const;
  /// ARC literal: texts single-quoted, decs always carry a decimal point.
  std::string to_literal() const;
  /// Payload text used by the JSON encodings ("12", "2.5", "1/3").
  std::string payload_string() const;

  friend bool operator==(const Value& a, const Value& b) { return a.data_ == b.data_; }
  friend std::strong_ordering operator<=>(const Value& a, const Value& b);

 private:
  std::variant<std::monostate, BigInt, Rational, std::string, bool> data_;
};

using Tuple = std::vector<Value>;

struct ValueHash {
  std::size_t operator()(const Value& v) const;
};

struct TupleHash {
  std::size_t operator()(const Tuple& t) const;
};

/// Exact decimal text of a rational when its expansion terminates, nullopt otherwise.
std::optional<std::string> terminating_decimal(const Rational& r);

}  // namespace arc
