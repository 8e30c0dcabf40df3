#include "arc/value_ops.hpp"

#include "arc/error.hpp"

namespace arc {

namespace {

std::string describe(const Value& v) { return v.to_literal() + " (" + std::string(to_string(v.tag())) + ")"; }

}  // namespace

bool compare_values(CompareOp op, const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return false;
  std::strong_ordering ord = std::strong_ordering::equal;
  if (a.is_numeric() && b.is_numeric()) {
    Rational x = a.as_rational(), y = b.as_rational();
    ord = x < y ? std::strong_ordering::less : (x > y ? std::strong_ordering::greater : std::strong_ordering::equal);
  } else if (a.tag() == b.tag()) {
    ord = a <=> b;
  } else {
    if (op == CompareOp::Eq) return false;
    if (op == CompareOp::Ne) return true;
    throw EvalError("E_TYPE", "cannot order " + describe(a) + " against " + describe(b));
  }
  switch (op) {
    case CompareOp::Eq: return ord == 0;
    case CompareOp::Ne: return ord != 0;
    case CompareOp::Lt: return ord < 0;
    case CompareOp::Le: return ord <= 0;
    case CompareOp::Gt: return ord > 0;
    case CompareOp::Ge: return ord >= 0;
  }
  return false;
}

Value arith_values(ArithOp op, const Value& a, const Value& b, bool div_zero_null) {
  if (a.is_null() || b.is_null()) return Value::null();
  if (!a.is_numeric() || !b.is_numeric())
    throw EvalError("E_TYPE", "operator " + std::string(to_string(op)) + " applied to " + describe(a) + " and " +
                                  describe(b));
  if (op == ArithOp::Div) {
    Rational d = b.as_rational();
    if (d == 0) {
      if (div_zero_null) return Value::null();
      throw EvalError("E_DIV_ZERO", "division of " + a.to_literal() + " by zero");
    }
    return Value::decimal(a.as_rational() / d);
  }
  if (a.tag() == ValueTag::Int && b.tag() == ValueTag::Int) {
    const BigInt &x = a.as_int(), &y = b.as_int();
    switch (op) {
      case ArithOp::Add: return Value::integer(BigInt(x + y));
      case ArithOp::Sub: return Value::integer(BigInt(x - y));
      default: return Value::integer(BigInt(x * y));
    }
  }
  Rational x = a.as_rational(), y = b.as_rational();
  switch (op) {
    case ArithOp::Add: return Value::decimal(Rational(x + y));
    case ArithOp::Sub: return Value::decimal(Rational(x - y));
    default: return Value::decimal(Rational(x * y));
  }
}

}  // namespace arc
