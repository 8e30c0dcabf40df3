#pragma once

// Relational-pattern comparison. Two programs have the same pattern when they
// differ only by range-variable names, nested head names, conjunct/disjunct
// order, binding order, comparison orientation, not(exists) vs notExists,
// inner-join bracketing and dedup-only grouping.

#include <optional>
#include <string>
#include <vector>

#include "arc/alt.hpp"
#include "arc/binder.hpp"

namespace arc {

struct CanonicalForm {
  Program program;
  std::string text;  // print_arc(program)
};

CanonicalForm canonicalize(const Program& p);
CanonicalForm canonicalize(const LinkedProgram& lp);

bool pattern_equal(const Program& a, const Program& b);
bool pattern_equal(const LinkedProgram& a, const LinkedProgram& b);

struct PatternDiff {
  bool equal = true;
  std::string path;  // first scope whose canonical content differs
  std::string left;  // that scope's canonical summary on each side ("" when missing)
  std::string right;
};

PatternDiff pattern_diff(const Program& a, const Program& b);

enum class AggregationPattern { FIO, FOI };

std::string_view to_string(AggregationPattern p);

struct AggregationClass {
  int scope = 0;
  std::string path;
  AggregationPattern pattern = AggregationPattern::FIO;
};

/// One entry per grouping scope, in scope order. A grouping scope is FOI when
/// its collection is the source of a (lateral) binding and correlates with an
/// outer binding through an equality; otherwise FIO.
std::vector<AggregationClass> classify_aggregation(const LinkedProgram& lp);

}  // namespace arc
