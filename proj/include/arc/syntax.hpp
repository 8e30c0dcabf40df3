#pragma once

#include <string>
#include <string_view>

#include "arc/alt.hpp"

namespace arc {

/// Parses ARC comprehension text. Throws ParseError at the first syntax error.
///
///   program    := def* (collection | formula)
///   def        := ["abstract"] "def" NAME ":=" collection
///   collection := "{" NAME "(" NAME ("," NAME)* ")" "|" formula "}"
///   formula    := disjunction of conjunctions of ["not"] primaries
///   quant      := ["not"] "exists" binding ("," binding)* ["," "group" "(" refs? ")"]
///                 ["," jointree] "[" formula "]"
///   binding    := NAME "in" (NAME | collection | "ext" NAME)
///   jointree   := ("inner" | "left" | "full") "(" joinleaf ("," joinleaf)* ")"
///   joinleaf   := NAME | jointree | "lit" value "as" NAME
///   pred       := term cmp term | term "is" ["not"] "null"
///
/// Keywords are case-insensitive, identifiers case-sensitive, `--` starts a
/// comment. Relation names that are not identifiers are written in double
/// quotes (`ext "*"`).
Program parse_arc(std::string_view text);

/// Deterministic text such that parse_arc(print_arc(p)) is structurally equal to p.
std::string print_arc(const Program& p);
std::string print_collection(const CollectionExpr& c);
std::string print_formula(const Formula& f);
std::string print_term(const Term& t);
std::string print_predicate(const Predicate& p);
std::string print_join_tree(const JoinTree& j);

/// Identifier as it must appear in ARC text (quoted when not a plain NAME).
std::string quote_name(const std::string& name);

}  // namespace arc
