#pragma once

#include "arc/ops.hpp"
#include "arc/value.hpp"

namespace arc {

/// Two-valued comparison. A null operand makes every comparison false. int
/// and dec compare numerically; values of other mismatched tags are unequal
/// (= false, <> true) and unordered (E_TYPE).
bool compare_values(CompareOp op, const Value& a, const Value& b);

/// Arithmetic with int->dec widening; a null operand yields null. Division
/// always produces an exact dec. A zero divisor yields null when
/// `div_zero_null`, otherwise raises E_DIV_ZERO.
Value arith_values(ArithOp op, const Value& a, const Value& b, bool div_zero_null);

}  // namespace arc
