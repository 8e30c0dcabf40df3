#include "arc/conventions.hpp"

#include <string>

#include "arc/error.hpp"

namespace arc {

Conventions conventions_sql() {
  return Conventions{CollectionSemantics::Bag, EmptyAggregate::Null, 10000, DivisionByZero::Null};
}

Conventions conventions_souffle() {
  return Conventions{CollectionSemantics::Set, EmptyAggregate::Zero, 10000, DivisionByZero::Error};
}

void validate(const Conventions& c) {
  if (c.fixpoint_cap < 1) throw ArcError("E_CONVENTIONS", "fixpoint iteration cap must be at least 1");
}

Value empty_aggregate_value(AggFn fn, const Conventions& conv) {
  switch (fn) {
    case AggFn::Count:
    case AggFn::CountDistinct: return Value::integer(0);
    case AggFn::Sum: return conv.empty_aggregate == EmptyAggregate::Zero ? Value::integer(0) : Value::null();
    default:
      if (conv.empty_aggregate == EmptyAggregate::Null) return Value::null();
      throw EvalError("E_NO_NEUTRAL", std::string(to_string(fn)) + " over an empty input has no neutral element");
  }
}

}  // namespace arc
