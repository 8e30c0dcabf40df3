#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "arc/value.hpp"

namespace arc {

/// Named relation with an ordered schema and a bag of tuples.
struct Relation {
  std::string name;
  std::vector<std::string> schema;
  std::vector<Tuple> rows;

  /// Throws ArcError(E_ARITY) when the tuple does not match the schema.
  void add(Tuple t);
  std::size_t multiplicity(const Tuple& t) const;
  /// Removes duplicate rows, keeping first occurrences.
  void deduplicate();
  /// Rows in value order (multiplicities kept).
  std::vector<Tuple> sorted_rows() const;
};

/// Bag equality (same rows with the same multiplicities, any order).
bool same_bag(const Relation& a, const Relation& b);
/// Set equality (same distinct rows).
bool same_set(const Relation& a, const Relation& b);

struct Database {
  std::map<std::string, Relation> relations;

  void add(Relation r);
  const Relation* find(const std::string& name) const;
  std::map<std::string, std::vector<std::string>> catalog() const;
};

/// {"relations": {"R": {"schema": ["A","B"], "rows": [[9, 0]]}}}. Cells:
/// JSON integers -> int, other JSON numbers -> dec, strings -> text,
/// booleans, null; tagged objects {"int": "..."} / {"dec": "1/3"} are also
/// accepted. Throws SchemaError(path, reason).
Database database_from_json(std::string_view text);
Database database_from_document(const nlohmann::json& doc);
Relation relation_from_json(const std::string& name, const nlohmann::json& j, const std::string& path);

nlohmann::json to_json(const Relation& r);
nlohmann::json to_json(const Database& db);
nlohmann::json cell_to_json(const Value& v);
Value cell_from_json(const nlohmann::json& j, const std::string& path);

/// Aligned text table with a header row; rows in value order.
std::string format_table(const Relation& r);

}  // namespace arc
