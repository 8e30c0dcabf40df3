#pragma once

// Environment-level semantic switches. They change observable results but
// never the ALT of a query.

#include <cstddef>

#include "arc/ops.hpp"
#include "arc/value.hpp"

namespace arc {

enum class CollectionSemantics { Set, Bag };
enum class EmptyAggregate { Null, Zero };
enum class DivisionByZero { Null, Error };

struct Conventions {
  CollectionSemantics semantics = CollectionSemantics::Bag;
  EmptyAggregate empty_aggregate = EmptyAggregate::Null;
  std::size_t fixpoint_cap = 10000;
  DivisionByZero division_by_zero = DivisionByZero::Null;

  bool operator==(const Conventions&) const = default;
};

/// {bag, null, 10000, null}
Conventions conventions_sql();
/// {set, zero, 10000, error}
Conventions conventions_souffle();

/// Throws ArcError(E_CONVENTIONS) when fixpoint_cap is 0.
void validate(const Conventions& c);

/// Value of `fn` over no input. count/countdistinct: 0. sum: null or 0.
/// avg/min/max: null under EmptyAggregate::Null, E_NO_NEUTRAL under Zero.
Value empty_aggregate_value(AggFn fn, const Conventions& conv);

}  // namespace arc
