#pragma once

// Reference interpreter for linked ARC programs: nested loops over bindings,
// grouping, aggregation, outer joins, semijoin existentials and least
// fixpoints for recursive definitions. Meant as a semantics oracle, not an
// engine.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arc/binder.hpp"
#include "arc/conventions.hpp"
#include "arc/database.hpp"

namespace arc {

/// One binding frame of an environment: the values of a range variable.
struct EnvFrame {
  const void* key = nullptr;  // the Binding or literal JoinTree node
  const std::vector<std::string>* schema = nullptr;
  Tuple values;
  std::shared_ptr<const EnvFrame> next;
};

/// Persistent map from in-scope range variables to tuples.
using Environment = std::shared_ptr<const EnvFrame>;

Environment extend(const Environment& env, const void* key, const std::vector<std::string>* schema, Tuple values);
const EnvFrame* lookup(const Environment& env, const void* key);

Relation eval_query(const LinkedProgram& lp, const Database& db, const Conventions& conv);
bool eval_sentence(const LinkedProgram& lp, const Database& db, const Conventions& conv);

/// Aggregate over `values`, nulls skipped; empty input falls back to
/// empty_aggregate_value. Throws E_TYPE for non-numeric sum/avg input.
Value eval_aggregate(AggFn fn, const std::vector<Value>& values, const Conventions& conv);

/// Least fixpoint of the definitions in `defs` (a recursive stratum),
/// returned as `db` extended by their relations. Throws E_FIXPOINT_CAP,
/// E_BAG_RECURSION.
Database eval_fixpoint(const LinkedProgram& lp, const std::vector<std::string>& defs, const Database& db,
                       const Conventions& conv);

class Evaluator {
 public:
  Evaluator(const LinkedProgram& lp, const Database& db, const Conventions& conv);
  ~Evaluator();
  Evaluator(const Evaluator&) = delete;
  Evaluator& operator=(const Evaluator&) = delete;

  Relation query();
  bool sentence();
  /// Relation of a (non-abstract) definition, computing its stratum if needed.
  const Relation& definition(const std::string& name);

  /// Environments produced by join-tree `node` of `quantifier` on top of
  /// `env`, with the join conditions the binder assigned to each node.
  std::vector<Environment> eval_outer_join(const Formula& quantifier, const JoinTree& node, const Environment& env);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// parse-free pipeline for an already parsed program: expand abstract
/// relations, analyze against the database catalog, evaluate. Throws
/// ArcError carrying the first diagnostic when analysis fails.
Relation evaluate_program(const Program& p, const Database& db, const Conventions& conv,
                          const ExternalRegistry& registry = ExternalRegistry::builtin());
bool evaluate_sentence(const Program& p, const Database& db, const Conventions& conv,
                       const ExternalRegistry& registry = ExternalRegistry::builtin());

}  // namespace arc
