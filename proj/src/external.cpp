#include "arc/external.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "arc/error.hpp"
#include "arc/value_ops.hpp"

namespace arc {

namespace {

const char* const kSemantics[] = {"minus", "add", "mul", "cmp_gt", "cmp_lt", "like"};

void validate(const ExternalSpec& s) {
  if (s.name.empty()) throw SchemaError("name", "external relation needs a name");
  bool known = false;
  for (const char* k : kSemantics) known = known || s.semantics == k;
  if (!known) throw SchemaError(s.name + ".semantics", "unknown semantics key '" + s.semantics + "'");
  std::size_t arity = (s.semantics == "cmp_gt" || s.semantics == "cmp_lt" || s.semantics == "like") ? 2 : 3;
  if (s.attributes.size() != arity)
    throw SchemaError(s.name + ".attributes", "semantics " + s.semantics + " needs " + std::to_string(arity) +
                                                 " attributes");
  if (s.patterns.empty()) throw SchemaError(s.name + ".patterns", "at least one access pattern required");
  for (const auto& p : s.patterns) {
    if (p.size() != arity || p.find_first_not_of("bf") != std::string::npos)
      throw SchemaError(s.name + ".patterns", "invalid access pattern '" + p + "'");
    // the built-in functions compute only the last attribute
    if (arity == 3 ? (p[0] != 'b' || p[1] != 'b') : p != "bb")
      throw SchemaError(s.name + ".patterns", "pattern '" + p + "' is not supported by " + s.semantics);
  }
}

}  // namespace

ExternalRegistry ExternalRegistry::builtin() {
  ExternalRegistry r;
  r.add({"Minus", {"left", "right", "out"}, {"bbf", "bbb"}, "minus"});
  r.add({"Add", {"left", "right", "out"}, {"bbf", "bbb"}, "add"});
  r.add({"*", {"$1", "$2", "out"}, {"bbf", "bbb"}, "mul"});
  r.add({"Bigger", {"left", "right"}, {"bb"}, "cmp_gt"});
  r.add({"Smaller", {"left", "right"}, {"bb"}, "cmp_lt"});
  r.add({"Like", {"text", "pattern"}, {"bb"}, "like"});
  return r;
}

ExternalRegistry ExternalRegistry::from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  if (doc.is_object()) {
    if (!doc.contains("externals")) throw SchemaError("externals", "missing field");
    doc = doc["externals"];
  }
  if (!doc.is_array()) throw SchemaError("", "expected an array of external relations");
  ExternalRegistry r;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& e = doc[i];
    std::string path = "[" + std::to_string(i) + "]";
    if (!e.is_object()) throw SchemaError(path, "expected an object");
    for (const char* field : {"name", "attributes", "patterns", "semantics"})
      if (!e.contains(field)) throw SchemaError(path + "." + field, "missing field");
    for (auto it = e.begin(); it != e.end(); ++it)
      if (it.key() != "name" && it.key() != "attributes" && it.key() != "patterns" && it.key() != "semantics")
        throw SchemaError(path + "." + it.key(), "unknown field");
    try {
      r.add(ExternalSpec{e.at("name").get<std::string>(), e.at("attributes").get<std::vector<std::string>>(),
                         e.at("patterns").get<std::vector<std::string>>(), e.at("semantics").get<std::string>()});
    } catch (const nlohmann::json::type_error& err) {
      throw SchemaError(path, err.what());
    }
  }
  return r;
}

ExternalRegistry ExternalRegistry::from_environment() {
  ExternalRegistry r = builtin();
  const char* path = std::getenv("ARC_EXTERNAL_REGISTRY");
  if (!path || !*path) return r;
  std::ifstream in(path);
  if (!in) throw SchemaError(path, "cannot read external registry");
  std::stringstream ss;
  ss << in.rdbuf();
  for (auto& [name, spec] : from_json(ss.str()).specs_) r.add(spec);
  return r;
}

void ExternalRegistry::add(ExternalSpec spec) {
  validate(spec);
  std::string name = spec.name;
  specs_[name] = std::move(spec);
}

const ExternalSpec* ExternalRegistry::find(const std::string& name) const {
  auto it = specs_.find(name);
  return it == specs_.end() ? nullptr : &it->second;
}

bool like_match(std::string_view text, std::string_view pattern) {
  // iterative wildcard matching with backtracking on the last %
  std::size_t t = 0, p = 0, star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '_' || pattern[p] == text[t])) {
      ++t;
      ++p;
    } else if (p < pattern.size() && pattern[p] == '%') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '%') ++p;
  return p == pattern.size();
}

std::vector<Tuple> invoke_external(const ExternalSpec& spec, const std::vector<std::optional<Value>>& inputs) {
  if (inputs.size() != spec.attributes.size())
    throw EvalError("E_EXTERNAL", "external " + spec.name + " invoked with wrong arity");
  if (!inputs[0] || !inputs[1])
    throw EvalError("E_UNSAFE_EXTERNAL", "external " + spec.name + " invoked without its bound inputs");
  const Value& a = *inputs[0];
  const Value& b = *inputs[1];
  if (a.is_null() || b.is_null()) return {};

  if (spec.semantics == "cmp_gt" || spec.semantics == "cmp_lt") {
    bool holds = compare_values(spec.semantics == "cmp_gt" ? CompareOp::Gt : CompareOp::Lt, a, b);
    if (!holds) return {};
    return {Tuple{a, b}};
  }
  if (spec.semantics == "like") {
    if (a.tag() != ValueTag::Text || b.tag() != ValueTag::Text)
      throw EvalError("E_TYPE", "Like expects text operands");
    if (!like_match(a.as_text(), b.as_text())) return {};
    return {Tuple{a, b}};
  }
  ArithOp op = spec.semantics == "minus" ? ArithOp::Sub : spec.semantics == "add" ? ArithOp::Add : ArithOp::Mul;
  Value out = arith_values(op, a, b, true);
  if (inputs[2] && !compare_values(CompareOp::Eq, *inputs[2], out)) return {};
  return {Tuple{a, b, out}};
}

}  // namespace arc
