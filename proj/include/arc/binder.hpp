#pragma once

// Name resolution and legality checking. bind() links every attribute
// reference to the binding (or head) it denotes and classifies predicates;
// the check_* passes validate grouping, head assignment, recursion and
// access patterns on the linked result.

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "arc/alt.hpp"
#include "arc/external.hpp"
#include "arc/span.hpp"

namespace arc {

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  std::string code;
  SourceSpan span;
  std::string message;

  std::string to_string() const;
};

bool has_errors(const std::vector<Diagnostic>& diags);

enum class RelationKind { Base, Intensional, External, Abstract };
enum class PredicateClass { Assignment, Comparison, AggregationAssignment, AggregationComparison };

std::string_view to_string(RelationKind k);
std::string_view to_string(PredicateClass c);

/// Known relation schemas (base relations); optional input to bind().
using Catalog = std::map<std::string, std::vector<std::string>>;

struct Scope {
  enum class Kind { Program, Collection, Quantifier };

  Kind kind = Kind::Program;
  int id = 0;
  int parent = -1;
  std::vector<int> children;
  std::string path;  // "main", "main/q0", "main/q0/x", "def:A/q1", ...
  const CollectionExpr* collection = nullptr;  // Collection scopes
  const Formula* quantifier = nullptr;         // Quantifier scopes
  const Binding* via = nullptr;                // nested collection: the binding it is the source of
  std::string definition;                      // definition collections: the definition name
};

struct LinkTarget {
  enum class Kind { Binding, Literal, Head };

  Kind kind = Kind::Binding;
  const Binding* binding = nullptr;
  const JoinTree* literal = nullptr;
  const CollectionExpr* head = nullptr;
  int scope = 0;  // scope that introduces the target
};

struct LinkedProgram {
  std::shared_ptr<const Program> program;
  std::vector<Scope> scopes;  // scopes[0] is the program root
  std::map<const Term*, LinkTarget> links;
  std::map<const Formula*, PredicateClass> predicate_class;
  std::map<std::string, RelationKind> relation_kinds;
  std::set<std::string> recursive_defs;
  std::map<const Formula*, const JoinTree*> join_condition_assignment;
  std::map<const Formula*, int> quantifier_scope;
  std::map<const CollectionExpr*, int> collection_scope;
  /// Innermost scope (quantifier or collection) in which each atom occurs.
  std::map<const Formula*, int> atom_scope;
  ExternalRegistry registry;
  std::vector<Diagnostic> warnings;

  const Scope& scope(int id) const { return scopes[static_cast<std::size_t>(id)]; }
  const LinkTarget& link(const Term& attr_term) const;
  std::optional<PredicateClass> classify(const Formula& atom) const;
  /// Innermost collection scope enclosing `scope_id` (or -1).
  int enclosing_collection(int scope_id) const;
};

struct BindResult {
  std::optional<LinkedProgram> linked;
  std::vector<Diagnostic> diagnostics;  // errors and warnings

  bool ok() const { return linked.has_value(); }
};

/// Resolves names. Fails with E_UNBOUND_VAR, E_HEAD_IN_BODY,
/// E_DUPLICATE_BINDING, E_UNKNOWN_ATTRIBUTE or E_UNKNOWN_EXTERNAL.
BindResult bind(const Program& p, const ExternalRegistry& registry, const Catalog* catalog = nullptr);
BindResult bind(std::shared_ptr<const Program> p, const ExternalRegistry& registry, const Catalog* catalog = nullptr);

std::vector<Diagnostic> check_grouping(const LinkedProgram& lp);
std::vector<Diagnostic> check_heads(const LinkedProgram& lp);
std::vector<Diagnostic> check_recursion(const LinkedProgram& lp);

struct AccessStep {
  const Binding* binding = nullptr;
  std::string pattern;  // externals only
  /// externals only: attribute index -> term computing its bound value
  std::vector<std::pair<std::size_t, TermPtr>> pinned;
};

struct EvaluationOrder {
  std::map<const Formula*, std::vector<AccessStep>> steps;  // per quantifier
};

/// Orders bindings so external relations are reached only with an admissible
/// access pattern and lateral collections after the siblings they read.
/// Errors: E_UNSAFE_EXTERNAL, E_LATERAL_CYCLE, E_ABSTRACT_UNEXPANDED.
std::variant<EvaluationOrder, std::vector<Diagnostic>> plan_access(const LinkedProgram& lp);

/// bind + all checks. `linked` is set only when no errors were found.
BindResult analyze(const Program& p, const ExternalRegistry& registry, const Catalog* catalog = nullptr);

}  // namespace arc
