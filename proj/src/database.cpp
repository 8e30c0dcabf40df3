#include "arc/database.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

#include "arc/alt_json.hpp"
#include "arc/error.hpp"

namespace arc {

using nlohmann::json;

void Relation::add(Tuple t) {
  if (t.size() != schema.size())
    throw ArcError("E_ARITY", "relation " + name + " has arity " + std::to_string(schema.size()) +
                                  ", got a tuple of arity " + std::to_string(t.size()));
  rows.push_back(std::move(t));
}

std::size_t Relation::multiplicity(const Tuple& t) const {
  return static_cast<std::size_t>(std::count(rows.begin(), rows.end(), t));
}

void Relation::deduplicate() {
  std::unordered_map<Tuple, bool, TupleHash> seen;
  std::vector<Tuple> out;
  for (auto& r : rows)
    if (seen.emplace(r, true).second) out.push_back(std::move(r));
  rows = std::move(out);
}

std::vector<Tuple> Relation::sorted_rows() const {
  std::vector<Tuple> out = rows;
  std::sort(out.begin(), out.end());
  return out;
}

bool same_bag(const Relation& a, const Relation& b) {
  return a.schema.size() == b.schema.size() && a.sorted_rows() == b.sorted_rows();
}

bool same_set(const Relation& a, const Relation& b) {
  auto x = a.sorted_rows();
  auto y = b.sorted_rows();
  x.erase(std::unique(x.begin(), x.end()), x.end());
  y.erase(std::unique(y.begin(), y.end()), y.end());
  return a.schema.size() == b.schema.size() && x == y;
}

void Database::add(Relation r) {
  std::string n = r.name;
  relations[n] = std::move(r);
}

const Relation* Database::find(const std::string& name) const {
  auto it = relations.find(name);
  return it == relations.end() ? nullptr : &it->second;
}

std::map<std::string, std::vector<std::string>> Database::catalog() const {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [name, r] : relations) out[name] = r.schema;
  return out;
}

namespace {

// Exact decimal from a JSON float's shortest round-trip text ("2.5", "1e-05").
Value decimal_from_text(const std::string& text, const std::string& path) {
  std::string mantissa = text;
  long exponent = 0;
  if (auto e = text.find_first_of("eE"); e != std::string::npos) {
    mantissa = text.substr(0, e);
    exponent = std::stol(text.substr(e + 1));
  }
  Value m;
  try {
    m = Value::parse_number(mantissa);
  } catch (const std::invalid_argument& err) {
    throw SchemaError(path, err.what());
  }
  Rational r = m.as_rational();
  Rational scale = 1;
  for (long i = 0; i < (exponent < 0 ? -exponent : exponent); ++i) scale *= 10;
  return Value::decimal(exponent < 0 ? Rational(r / scale) : Rational(r * scale));
}

}  // namespace

Value cell_from_json(const json& j, const std::string& path) {
  if (j.is_null()) return Value::null();
  if (j.is_boolean()) return Value::boolean(j.get<bool>());
  if (j.is_string()) return Value::text(j.get<std::string>());
  if (j.is_number_integer()) return Value::parse_number(j.dump());
  if (j.is_number_float()) return decimal_from_text(j.dump(), path);
  if (j.is_object()) return value_from_json(j, path);
  throw SchemaError(path, "unsupported cell value");
}

json cell_to_json(const Value& v) {
  switch (v.tag()) {
    case ValueTag::Null: return nullptr;
    case ValueTag::Bool: return v.as_bool();
    case ValueTag::Text: return v.as_text();
    case ValueTag::Int: {
      const BigInt& i = v.as_int();
      if (i >= std::numeric_limits<std::int64_t>::min() && i <= std::numeric_limits<std::int64_t>::max())
        return static_cast<std::int64_t>(i);
      return json{{"int", v.payload_string()}};
    }
    case ValueTag::Dec: return json{{"dec", v.payload_string()}};
  }
  return nullptr;
}

Relation relation_from_json(const std::string& name, const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object with schema and rows");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "schema" && it.key() != "rows") throw SchemaError(path + "." + it.key(), "unknown field");
  if (!j.contains("schema")) throw SchemaError(path + ".schema", "missing field");
  if (!j.contains("rows")) throw SchemaError(path + ".rows", "missing field");
  Relation r;
  r.name = name;
  const json& schema = j["schema"];
  if (!schema.is_array()) throw SchemaError(path + ".schema", "expected an array of attribute names");
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (!schema[i].is_string()) throw SchemaError(path + ".schema[" + std::to_string(i) + "]", "expected a string");
    std::string a = schema[i].get<std::string>();
    if (std::find(r.schema.begin(), r.schema.end(), a) != r.schema.end())
      throw SchemaError(path + ".schema[" + std::to_string(i) + "]", "duplicate attribute '" + a + "'");
    r.schema.push_back(a);
  }
  const json& rows = j["rows"];
  if (!rows.is_array()) throw SchemaError(path + ".rows", "expected an array of rows");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::string rp = path + ".rows[" + std::to_string(i) + "]";
    if (!rows[i].is_array() || rows[i].size() != r.schema.size())
      throw SchemaError(rp, "expected a row of arity " + std::to_string(r.schema.size()));
    Tuple t;
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      t.push_back(cell_from_json(rows[i][k], rp + "[" + std::to_string(k) + "]"));
    r.rows.push_back(std::move(t));
  }
  return r;
}

Database database_from_document(const json& doc) {
  if (!doc.is_object()) throw SchemaError("", "expected an object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (it.key() != "relations") throw SchemaError(it.key(), "unknown field");
  if (!doc.contains("relations")) throw SchemaError("relations", "missing field");
  const json& rels = doc["relations"];
  if (!rels.is_object()) throw SchemaError("relations", "expected an object");
  Database db;
  for (auto it = rels.begin(); it != rels.end(); ++it)
    db.add(relation_from_json(it.key(), it.value(), "relations." + it.key()));
  return db;
}

Database database_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  return database_from_document(doc);
}

json to_json(const Relation& r) {
  json rows = json::array();
  for (const auto& t : r.sorted_rows()) {
    json row = json::array();
    for (const auto& v : t) row.push_back(cell_to_json(v));
    rows.push_back(row);
  }
  return json{{"schema", r.schema}, {"rows", rows}};
}

json to_json(const Database& db) {
  json rels = json::object();
  for (const auto& [name, r] : db.relations) rels[name] = to_json(r);
  return json{{"relations", rels}};
}

std::string format_table(const Relation& r) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back(r.schema);
  for (const auto& t : r.sorted_rows()) {
    std::vector<std::string> row;
    for (const auto& v : t) row.push_back(v.to_display());
    cells.push_back(std::move(row));
  }
  std::vector<std::size_t> width(r.schema.size(), 0);
  for (const auto& row : cells)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  std::string out;
  auto line = [&](const std::vector<std::string>& row) {
    std::string l;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) l += " | ";
      l += row[i] + std::string(width[i] - row[i].size(), ' ');
    }
    while (!l.empty() && l.back() == ' ') l.pop_back();
    out += l + "\n";
  };
  line(cells[0]);
  std::string rule;
  for (std::size_t i = 0; i < width.size(); ++i) {
    if (i) rule += "-+-";
    rule += std::string(width[i], '-');
  }
  out += rule + "\n";
  for (std::size_t i = 1; i < cells.size(); ++i) line(cells[i]);
  out += "(" + std::to_string(r.rows.size()) + (r.rows.size() == 1 ? " row)\n" : " rows)\n");
  return out;
}

}  // namespace arc
