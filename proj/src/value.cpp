#include "arc/value.hpp"

#include <functional>
#include <stdexcept>

#include "arc/error.hpp"
#include "arc/ops.hpp"

namespace arc {

std::string_view to_string(ValueTag tag) {
  switch (tag) {
    case ValueTag::Null: return "null";
    case ValueTag::Int: return "int";
    case ValueTag::Dec: return "dec";
    case ValueTag::Text: return "text";
    case ValueTag::Bool: return "bool";
  }
  return "?";
}

Value Value::integer(BigInt v) {
  Value out;
  out.data_.emplace<1>(std::move(v));
  return out;
}

Value Value::decimal(Rational v) {
  Value out;
  out.data_.emplace<2>(std::move(v));
  return out;
}

Value Value::text(std::string v) {
  Value out;
  out.data_.emplace<3>(std::move(v));
  return out;
}

Value Value::boolean(bool v) {
  Value out;
  out.data_.emplace<4>(v);
  return out;
}

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

}  // namespace

Value Value::parse_number(std::string_view text) {
  std::string_view body = text;
  bool negative = false;
  if (!body.empty() && (body.front() == '-' || body.front() == '+')) {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }
  auto bad = [&] { return std::invalid_argument("not a number: '" + std::string(text) + "'"); };

  if (auto slash = body.find('/'); slash != std::string_view::npos) {
    auto num = body.substr(0, slash);
    auto den = body.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den)) throw bad();
    BigInt d{std::string(den)};
    if (d == 0) throw bad();
    Rational r{BigInt{std::string(num)}, d};
    return decimal(negative ? Rational(-r) : r);
  }
  if (auto dot = body.find('.'); dot != std::string_view::npos) {
    auto whole = body.substr(0, dot);
    auto frac = body.substr(dot + 1);
    if (whole.empty() && frac.empty()) throw bad();
    if ((!whole.empty() && !all_digits(whole)) || (!frac.empty() && !all_digits(frac))) throw bad();
    std::string digits = std::string(whole) + std::string(frac);
    BigInt scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    Rational r(BigInt(digits.empty() ? "0" : digits), scale);
    return decimal(negative ? Rational(-r) : r);
  }
  if (!all_digits(body)) throw bad();
  BigInt v{std::string(body)};
  return integer(negative ? BigInt(-v) : v);
}

Rational Value::as_rational() const {
  if (tag() == ValueTag::Int) return Rational(as_int());
  if (tag() == ValueTag::Dec) return as_dec();
  throw std::logic_error("as_rational on non-numeric value");
}

std::optional<std::string> terminating_decimal(const Rational& r) {
  BigInt num = boost::multiprecision::numerator(r);
  BigInt den = boost::multiprecision::denominator(r);
  BigInt rest = den;
  int twos = 0, fives = 0;
  while (rest % 2 == 0) { rest /= 2; ++twos; }
  while (rest % 5 == 0) { rest /= 5; ++fives; }
  if (rest != 1) return std::nullopt;
  int digits = std::max(twos, fives);
  BigInt scale = 1;
  for (int i = 0; i < digits; ++i) scale *= 10;
  BigInt scaled = num * scale / den;
  bool negative = scaled < 0;
  if (negative) scaled = -scaled;
  std::string s = scaled.str();
  if (digits > 0) {
    if (static_cast<int>(s.size()) <= digits) s.insert(0, digits - s.size() + 1, '0');
    s.insert(s.size() - digits, ".");
  }
  if (negative) s.insert(0, "-");
  return s;
}

std::string Value::payload_string() const {
  switch (tag()) {
    case ValueTag::Null: return "null";
    case ValueTag::Int: return as_int().str();
    case ValueTag::Dec: {
      if (auto d = terminating_decimal(as_dec())) return *d;
      return boost::multiprecision::numerator(as_dec()).str() + "/" +
             boost::multiprecision::denominator(as_dec()).str();
    }
    case ValueTag::Text: return as_text();
    case ValueTag::Bool: return as_bool() ? "true" : "false";
  }
  return {};
}

std::string Value::to_display() const { return payload_string(); }

std::string Value::to_literal() const {
  switch (tag()) {
    case ValueTag::Text: {
      std::string out = "'";
      for (char c : as_text()) {
        if (c == '\'') out += '\'';
        out += c;
      }
      return out + "'";
    }
    case ValueTag::Dec: {
      std::string s = payload_string();
      if (s.find('.') == std::string::npos && s.find('/') == std::string::npos) s += ".0";
      return s;
    }
    default: return payload_string();
  }
}

std::strong_ordering operator<=>(const Value& a, const Value& b) {
  if (a.tag() != b.tag()) return a.data_.index() <=> b.data_.index();
  switch (a.tag()) {
    case ValueTag::Null: return std::strong_ordering::equal;
    case ValueTag::Int:
      return a.as_int() < b.as_int() ? std::strong_ordering::less
             : a.as_int() == b.as_int() ? std::strong_ordering::equal
                                        : std::strong_ordering::greater;
    case ValueTag::Dec:
      return a.as_dec() < b.as_dec() ? std::strong_ordering::less
             : a.as_dec() == b.as_dec() ? std::strong_ordering::equal
                                        : std::strong_ordering::greater;
    case ValueTag::Text: return a.as_text().compare(b.as_text()) <=> 0;
    case ValueTag::Bool: return a.as_bool() <=> b.as_bool();
  }
  return std::strong_ordering::equal;
}

std::size_t ValueHash::operator()(const Value& v) const {
  std::size_t h = static_cast<std::size_t>(v.tag()) * 0x9e3779b97f4a7c15ULL;
  return h ^ std::hash<std::string>{}(v.payload_string());
}

std::size_t TupleHash::operator()(const Tuple& t) const {
  std::size_t h = t.size();
  ValueHash vh;
  for (const auto& v : t) h = h * 1000003 ^ vh(v);
  return h;
}

// ---- operator spellings ----

std::string_view to_string(ArithOp op) {
  switch (op) {
    case ArithOp::Add: return "+";
    case ArithOp::Sub: return "-";
    case ArithOp::Mul: return "*";
    case ArithOp::Div: return "/";
  }
  return "?";
}

std::string_view to_string(AggFn fn) {
  switch (fn) {
    case AggFn::Sum: return "sum";
    case AggFn::Count: return "count";
    case AggFn::Avg: return "avg";
    case AggFn::Min: return "min";
    case AggFn::Max: return "max";
    case AggFn::CountDistinct: return "countdistinct";
  }
  return "?";
}

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "<>";
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
  }
  return "?";
}

std::optional<ArithOp> parse_arith_op(std::string_view s) {
  if (s == "+") return ArithOp::Add;
  if (s == "-") return ArithOp::Sub;
  if (s == "*") return ArithOp::Mul;
  if (s == "/") return ArithOp::Div;
  return std::nullopt;
}

std::optional<AggFn> parse_agg_fn(std::string_view s) {
  for (auto fn : {AggFn::Sum, AggFn::Count, AggFn::Avg, AggFn::Min, AggFn::Max, AggFn::CountDistinct})
    if (to_string(fn) == s) return fn;
  return std::nullopt;
}

std::optional<CompareOp> parse_compare_op(std::string_view s) {
  if (s == "!=") return CompareOp::Ne;
  for (auto op : {CompareOp::Eq, CompareOp::Ne, CompareOp::Lt, CompareOp::Le, CompareOp::Gt, CompareOp::Ge})
    if (to_string(op) == s) return op;
  return std::nullopt;
}

CompareOp flip(CompareOp op) {
  switch (op) {
    case CompareOp::Lt: return CompareOp::Gt;
    case CompareOp::Le: return CompareOp::Ge;
    case CompareOp::Gt: return CompareOp::Lt;
    case CompareOp::Ge: return CompareOp::Le;
    default: return op;
  }
}

}  // namespace arc
