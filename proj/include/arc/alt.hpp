#pragma once

// Abstract Language Tree: the language-independent representation of an ARC
// query. Nodes are immutable and shared through `std::shared_ptr<const T>`;
// node addresses double as occurrence identities for the binder's link maps.
//
// Construction goes through the make_* factories, which enforce each type's
// structural invariants and throw AltError on violation.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "arc/ops.hpp"
#include "arc/span.hpp"
#include "arc/value.hpp"

namespace arc {

struct Term;
struct Formula;
struct JoinTree;
struct CollectionExpr;

using TermPtr = std::shared_ptr<const Term>;
using FormulaPtr = std::shared_ptr<const Formula>;
using JoinTreePtr = std::shared_ptr<const JoinTree>;
using CollectionPtr = std::shared_ptr<const CollectionExpr>;

struct AttributeRef {
  std::string variable;
  std::string attribute;

  auto operator<=>(const AttributeRef&) const = default;
  std::string to_string() const { return variable + "." + attribute; }
};

struct Term {
  struct Constant {
    Value value;
  };
  struct Attr {
    AttributeRef ref;
  };
  struct Arith {
    ArithOp op;
    TermPtr left;
    TermPtr right;
  };
  struct Aggregate {
    AggFn fn;
    TermPtr arg;
  };

  std::variant<Constant, Attr, Arith, Aggregate> node;
  SourceSpan span;
};

TermPtr make_constant(Value value, SourceSpan span = {});
TermPtr make_attr(std::string variable, std::string attribute, SourceSpan span = {});
TermPtr make_arith(ArithOp op, TermPtr left, TermPtr right, SourceSpan span = {});
TermPtr make_aggregate(AggFn fn, TermPtr arg, SourceSpan span = {});

bool contains_aggregate(const Term& t);
/// Every Attr node of the term, aggregate arguments included.
void collect_attr_terms(const TermPtr& t, std::vector<const Term*>& out);
inline const AttributeRef* as_attr(const Term& t) {
  if (auto* a = std::get_if<Term::Attr>(&t.node)) return &a->ref;
  return nullptr;
}

struct Predicate {
  struct Compare {
    CompareOp op;
    TermPtr left;
    TermPtr right;
  };
  struct IsNull {
    TermPtr term;
    bool negated = false;
  };

  std::variant<Compare, IsNull> node;
};

bool contains_aggregate(const Predicate& p);

struct Binding {
  struct Named {
    std::string name;
  };
  struct Nested {
    CollectionPtr collection;
  };
  struct External {
    std::string name;
  };

  std::string var;
  std::variant<Named, Nested, External> source;
  SourceSpan span;
};

struct JoinTree {
  enum class Kind { Leaf, Literal, Inner, Left, Full };

  Kind kind;
  std::string var;  // leaf variable, or the anonymous variable of a literal leaf
  Value literal;
  std::vector<JoinTreePtr> children;
  SourceSpan span;
};

JoinTreePtr make_leaf(std::string var, SourceSpan span = {});
JoinTreePtr make_literal_leaf(Value value, std::string anon_var, SourceSpan span = {});
JoinTreePtr make_join(JoinTree::Kind kind, std::vector<JoinTreePtr> children, SourceSpan span = {});

/// Variables of all leaves (literal leaves included), left to right.
void join_leaf_vars(const JoinTree& tree, std::vector<std::string>& out);
bool has_outer_join(const JoinTree& tree);

struct GroupingOp {
  std::vector<TermPtr> keys;  // each an Attr term
};

enum class Polarity { Exists, NotExists };

struct Formula {
  struct Quantified {
    Polarity polarity = Polarity::Exists;
    std::vector<Binding> bindings;
    std::optional<GroupingOp> grouping;
    JoinTreePtr joins;  // may be null: inner over all bindings
    FormulaPtr body;
  };
  struct And {
    std::vector<FormulaPtr> children;
  };
  struct Or {
    std::vector<FormulaPtr> children;
  };
  struct Not {
    FormulaPtr child;
  };
  struct Atom {
    Predicate pred;
  };
  struct True {};

  std::variant<Quantified, And, Or, Not, Atom, True> node;
  SourceSpan span;
};

FormulaPtr make_quantified(Polarity polarity, std::vector<Binding> bindings,
                           std::optional<GroupingOp> grouping, JoinTreePtr joins,
                           FormulaPtr body, SourceSpan span = {});
FormulaPtr make_and(std::vector<FormulaPtr> children, SourceSpan span = {});
FormulaPtr make_or(std::vector<FormulaPtr> children, SourceSpan span = {});
FormulaPtr make_not(FormulaPtr child, SourceSpan span = {});
FormulaPtr make_compare(CompareOp op, TermPtr left, TermPtr right, SourceSpan span = {});
FormulaPtr make_is_null(TermPtr term, bool negated, SourceSpan span = {});
FormulaPtr make_true(SourceSpan span = {});

/// Conjunction that tolerates 0 or 1 operands (true / the operand itself).
FormulaPtr conjoin(std::vector<FormulaPtr> parts);
/// Direct conjuncts: the formula itself, or the flattened children of nested Ands.
std::vector<FormulaPtr> conjuncts(const FormulaPtr& f);

struct HeadSpec {
  std::string relation;
  std::vector<std::string> attributes;
  SourceSpan span;

  std::optional<std::size_t> index_of(const std::string& attribute) const;
};

struct CollectionExpr {
  HeadSpec head;
  FormulaPtr body;
  SourceSpan span;
};

CollectionPtr make_collection(HeadSpec head, FormulaPtr body, SourceSpan span = {});

struct Definition {
  std::string name;
  CollectionPtr collection;
  bool abstract = false;
  SourceSpan span;
};

struct Program {
  std::vector<Definition> definitions;
  std::variant<CollectionPtr, FormulaPtr> main;

  bool is_sentence() const { return std::holds_alternative<FormulaPtr>(main); }
  const CollectionPtr& main_collection() const { return std::get<CollectionPtr>(main); }
  const FormulaPtr& main_formula() const { return std::get<FormulaPtr>(main); }
  const Definition* find_definition(const std::string& name) const;
};

Program make_program(std::vector<Definition> definitions, std::variant<CollectionPtr, FormulaPtr> main);

/// Structural equality (spans ignored).
bool structurally_equal(const Program& a, const Program& b);

/// Attribute references whose variable is not bound by a quantifier (or, for
/// nested collections, by the collection head) within `f`.
std::set<AttributeRef> free_attribute_refs(const Formula& f);
std::set<AttributeRef> free_attribute_refs(const CollectionExpr& c);

}  // namespace arc
