#pragma once

// SQL subset front end: parse_sql builds a small select-statement tree,
// translate_sql maps it onto a pattern-preserving ARC program.
//
// Supported: SELECT [DISTINCT] with aliases and scalar subqueries, FROM with
// comma joins, [INNER] JOIN / LEFT [OUTER] / FULL [OUTER] JOIN ... ON,
// CROSS JOIN, JOIN LATERAL and derived tables, WHERE with AND/OR/NOT,
// comparisons, [NOT] IN (subquery), [NOT] EXISTS, IS [NOT] NULL, GROUP BY,
// HAVING, and `select [not] exists (...)` sentences. Anything else is
// rejected with E_UNSUPPORTED_SQL naming the construct.

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arc/alt.hpp"
#include "arc/binder.hpp"
#include "arc/conventions.hpp"
#include "arc/database.hpp"

namespace arc {

struct SqlSelect;
struct SqlCond;
using SqlSelectPtr = std::shared_ptr<const SqlSelect>;
using SqlCondPtr = std::shared_ptr<const SqlCond>;

struct SqlExpr;
using SqlExprPtr = std::shared_ptr<const SqlExpr>;

struct SqlExpr {
  enum class Kind { Column, Literal, Arith, Aggregate, Subquery };

  Kind kind = Kind::Literal;
  std::string qualifier;  // Column: table alias, empty when unqualified
  std::string name;       // Column
  Value literal;          // Literal
  ArithOp op = ArithOp::Add;
  SqlExprPtr left, right;  // Arith
  AggFn fn = AggFn::Count;
  SqlExprPtr arg;          // Aggregate; null for COUNT(*)
  SqlSelectPtr subquery;   // Subquery (scalar)
  SourceSpan span;
};

struct SqlCond {
  enum class Kind { Compare, And, Or, Not, In, Exists, IsNull, True };

  Kind kind = Kind::True;
  CompareOp op = CompareOp::Eq;
  SqlExprPtr left, right;  // Compare; In and IsNull use left
  std::vector<SqlCondPtr> children;
  SqlSelectPtr subquery;  // In, Exists
  bool negated = false;   // NOT IN, NOT EXISTS, IS NOT NULL
  SourceSpan span;
};

struct SqlTableRef;
using SqlTableRefPtr = std::shared_ptr<const SqlTableRef>;

struct SqlTableRef {
  enum class Kind { Table, Derived, Join };
  enum class JoinKind { Inner, Left, Full, Cross };

  Kind kind = Kind::Table;
  std::string name;   // Table
  std::string alias;  // Table (optional), Derived (required)
  SqlSelectPtr subquery;
  bool lateral = false;
  JoinKind join = JoinKind::Inner;
  SqlTableRefPtr left, right;
  SqlCondPtr on;  // Join; null for CROSS and comma joins
  SourceSpan span;
};

struct SqlSelectItem {
  SqlExprPtr expr;  // null for `*`
  std::string alias;
  bool star = false;
};

struct SqlSelect {
  bool distinct = false;
  std::vector<SqlSelectItem> items;
  std::vector<SqlTableRefPtr> from;
  SqlCondPtr where;
  std::vector<SqlExprPtr> group_by;
  SqlCondPtr having;
  /// `select [not] exists (...)` without FROM: the statement is a sentence.
  SqlCondPtr sentence;
  SourceSpan span;
};

/// Throws ParseError on syntax errors, ArcError(E_UNSUPPORTED_SQL) on
/// recognized constructs outside the subset.
SqlSelect parse_sql(std::string_view text);

struct SqlTranslateOptions {
  /// Schemas for unqualified columns, `*` and COUNT(*); optional.
  const Catalog* catalog = nullptr;
  /// Receives caveat warnings (W_LEFT_JOIN_GROUP_BY) when non-null.
  std::vector<Diagnostic>* warnings = nullptr;
};

Program translate_sql(const SqlSelect& ast, const SqlTranslateOptions& options = {});

/// parse_sql -> translate_sql (catalog from `db`) -> analyze -> evaluate.
Relation sql_roundtrip_eval(std::string_view text, const Database& db, const Conventions& conv);

}  // namespace arc
