#include "arc/alt_json.hpp"

#include <set>

#include "arc/error.hpp"

namespace arc {

using nlohmann::json;

// ---- serialization ----

json to_json(const Value& v) {
  switch (v.tag()) {
    case ValueTag::Null: return json{{"null", json::object()}};
    case ValueTag::Int: return json{{"int", v.payload_string()}};
    case ValueTag::Dec: return json{{"dec", v.payload_string()}};
    case ValueTag::Text: return json{{"text", v.as_text()}};
    case ValueTag::Bool: return json{{"bool", v.as_bool()}};
  }
  return {};
}

namespace {

json ref_json(const AttributeRef& r) { return json{{"var", r.variable}, {"attr", r.attribute}}; }

json predicate_json(const Predicate& p) {
  if (auto* c = std::get_if<Predicate::Compare>(&p.node))
    return json{{"compare", {{"op", std::string(to_string(c->op))}, {"left", to_json(*c->left)}, {"right", to_json(*c->right)}}}};
  const auto& n = std::get<Predicate::IsNull>(p.node);
  return json{{"isNull", {{"term", to_json(*n.term)}, {"negated", n.negated}}}};
}

json binding_json(const Binding& b) {
  json source = std::visit(
      [](const auto& s) -> json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Binding::Named>) return json{{"relation", s.name}};
        else if constexpr (std::is_same_v<S, Binding::Nested>) return json{{"collection", to_json(*s.collection)}};
        else return json{{"external", s.name}};
      },
      b.source);
  return json{{"var", b.var}, {"source", source}};
}

}  // namespace

json to_json(const Term& t) {
  return std::visit(
      [](const auto& n) -> json {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Term::Constant>) return json{{"const", to_json(n.value)}};
        else if constexpr (std::is_same_v<N, Term::Attr>) return json{{"attr", ref_json(n.ref)}};
        else if constexpr (std::is_same_v<N, Term::Arith>)
          return json{{"arith", {{"op", std::string(to_string(n.op))}, {"left", to_json(*n.left)}, {"right", to_json(*n.right)}}}};
        else return json{{"agg", {{"fn", std::string(to_string(n.fn))}, {"arg", to_json(*n.arg)}}}};
      },
      t.node);
}

json to_json(const JoinTree& j) {
  switch (j.kind) {
    case JoinTree::Kind::Leaf: return json{{"leaf", j.var}};
    case JoinTree::Kind::Literal: return json{{"literal", {{"value", to_json(j.literal)}, {"var", j.var}}}};
    default: {
      json children = json::array();
      for (const auto& c : j.children) children.push_back(to_json(*c));
      const char* key = j.kind == JoinTree::Kind::Inner ? "inner" : j.kind == JoinTree::Kind::Left ? "left" : "full";
      return json{{key, children}};
    }
  }
}

json to_json(const Formula& f) {
  return std::visit(
      [](const auto& n) -> json {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Formula::Quantified>) {
          json q;
          q["polarity"] = n.polarity == Polarity::Exists ? "exists" : "notExists";
          q["bindings"] = json::array();
          for (const auto& b : n.bindings) q["bindings"].push_back(binding_json(b));
          if (n.grouping) {
            json keys = json::array();
            for (const auto& k : n.grouping->keys) keys.push_back(ref_json(*as_attr(*k)));
            q["grouping"] = json{{"keys", keys}};
          }
          if (n.joins) q["joins"] = to_json(*n.joins);
          q["body"] = to_json(*n.body);
          return json{{"quantified", q}};
        } else if constexpr (std::is_same_v<N, Formula::And> || std::is_same_v<N, Formula::Or>) {
          json children = json::array();
          for (const auto& c : n.children) children.push_back(to_json(*c));
          return json{{std::is_same_v<N, Formula::And> ? "and" : "or", children}};
        } else if constexpr (std::is_same_v<N, Formula::Not>) {
          return json{{"not", to_json(*n.child)}};
        } else if constexpr (std::is_same_v<N, Formula::Atom>) {
          return json{{"atom", predicate_json(n.pred)}};
        } else {
          return json{{"trueLit", json::object()}};
        }
      },
      f.node);
}

json to_json(const CollectionExpr& c) {
  return json{{"head", {{"relation", c.head.relation}, {"attributes", c.head.attributes}}},
              {"body", to_json(*c.body)}};
}

json to_json(const Program& p) {
  json defs = json::array();
  for (const auto& d : p.definitions)
    defs.push_back(json{{"name", d.name}, {"abstract", d.abstract}, {"collection", to_json(*d.collection)}});
  json main = p.is_sentence() ? json{{"formula", to_json(*p.main_formula())}} : to_json(*p.main_collection());
  return json{{"alt_version", kAltVersion}, {"definitions", defs}, {"main", main}};
}

std::string serialize_alt(const Program& p) { return to_json(p).dump(2) + "\n"; }

// ---- deserialization ----

namespace {

class Reader {
 public:
  const json& object(const json& j, const std::string& path, std::initializer_list<const char*> required,
                     std::initializer_list<const char*> optional = {}) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    std::set<std::string> allowed;
    for (const char* k : required) {
      allowed.insert(k);
      if (!j.contains(k)) throw SchemaError(join(path, k), "missing field");
    }
    for (const char* k : optional) allowed.insert(k);
    for (const auto& [k, _] : j.items())
      if (!allowed.count(k)) throw SchemaError(join(path, k), "unknown field");
    return j;
  }

  // An object with exactly one key out of `variants`; returns that key.
  std::string tagged(const json& j, const std::string& path, std::initializer_list<const char*> variants) {
    if (!j.is_object() || j.size() != 1) throw SchemaError(path, "expected an object with exactly one variant key");
    std::string key = j.begin().key();
    for (const char* v : variants)
      if (key == v) return key;
    throw SchemaError(join(path, key), "unknown variant");
  }

  std::string string(const json& j, const std::string& path) {
    if (!j.is_string()) throw SchemaError(path, "expected a string");
    return j.get<std::string>();
  }

  std::string identifier(const json& j, const std::string& path) {
    auto s = string(j, path);
    if (s.empty()) throw SchemaError(path, "expected a nonempty identifier");
    return s;
  }

  const json& array(const json& j, const std::string& path) {
    if (!j.is_array()) throw SchemaError(path, "expected an array");
    return j;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
  static std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

  AttributeRef ref(const json& j, const std::string& path) {
    object(j, path, {"var", "attr"});
    return AttributeRef{identifier(j["var"], join(path, "var")), identifier(j["attr"], join(path, "attr"))};
  }

  TermPtr term(const json& j, const std::string& path) {
    auto key = tagged(j, path, {"const", "attr", "arith", "agg"});
    const json& n = j[key];
    auto p = join(path, key);
    try {
      if (key == "const") return make_constant(value_from_json(n, p));
      if (key == "attr") {
        auto r = ref(n, p);
        return make_attr(r.variable, r.attribute);
      }
      if (key == "arith") {
        object(n, p, {"op", "left", "right"});
        auto op = parse_arith_op(string(n["op"], join(p, "op")));
        if (!op) throw SchemaError(join(p, "op"), "unknown arithmetic operator");
        return make_arith(*op, term(n["left"], join(p, "left")), term(n["right"], join(p, "right")));
      }
      object(n, p, {"fn", "arg"});
      auto fn = parse_agg_fn(string(n["fn"], join(p, "fn")));
      if (!fn) throw SchemaError(join(p, "fn"), "unknown aggregate function");
      return make_aggregate(*fn, term(n["arg"], join(p, "arg")));
    } catch (const AltError& e) {
      throw SchemaError(p, e.what());
    }
  }

  FormulaPtr atom(const json& j, const std::string& path) {
    auto key = tagged(j, path, {"compare", "isNull"});
    const json& n = j[key];
    auto p = join(path, key);
    try {
      if (key == "compare") {
        object(n, p, {"op", "left", "right"});
        auto op = parse_compare_op(string(n["op"], join(p, "op")));
        if (!op || string(n["op"], p) == "!=") throw SchemaError(join(p, "op"), "unknown comparison operator");
        return make_compare(*op, term(n["left"], join(p, "left")), term(n["right"], join(p, "right")));
      }
      object(n, p, {"term", "negated"});
      if (!n["negated"].is_boolean()) throw SchemaError(join(p, "negated"), "expected a boolean");
      return make_is_null(term(n["term"], join(p, "term")), n["negated"].get<bool>());
    } catch (const AltError& e) {
      throw SchemaError(p, e.what());
    }
  }

  JoinTreePtr join_tree(const json& j, const std::string& path) {
    auto key = tagged(j, path, {"leaf", "literal", "inner", "left", "full"});
    const json& n = j[key];
    auto p = join(path, key);
    try {
      if (key == "leaf") return make_leaf(identifier(n, p));
      if (key == "literal") {
        object(n, p, {"value", "var"});
        return make_literal_leaf(value_from_json(n["value"], join(p, "value")), identifier(n["var"], join(p, "var")));
      }
      array(n, p);
      std::vector<JoinTreePtr> children;
      for (std::size_t i = 0; i < n.size(); ++i) children.push_back(join_tree(n[i], index(p, i)));
      auto kind = key == "inner" ? JoinTree::Kind::Inner : key == "left" ? JoinTree::Kind::Left : JoinTree::Kind::Full;
      return make_join(kind, std::move(children));
    } catch (const AltError& e) {
      throw SchemaError(p, e.what());
    }
  }

  Binding binding(const json& j, const std::string& path) {
    object(j, path, {"var", "source"});
    Binding b;
    b.var = identifier(j["var"], join(path, "var"));
    auto sp = join(path, "source");
    auto key = tagged(j["source"], sp, {"relation", "collection", "external"});
    const json& s = j["source"][key];
    if (key == "relation") b.source = Binding::Named{identifier(s, join(sp, key))};
    else if (key == "external") b.source = Binding::External{identifier(s, join(sp, key))};
    else b.source = Binding::Nested{collection(s, join(sp, key))};
    return b;
  }

  FormulaPtr formula(const json& j, const std::string& path) {
    auto key = tagged(j, path, {"quantified", "and", "or", "not", "atom", "trueLit"});
    const json& n = j[key];
    auto p = join(path, key);
    try {
      if (key == "quantified") {
        object(n, p, {"polarity", "bindings", "body"}, {"grouping", "joins"});
        auto pol = string(n["polarity"], join(p, "polarity"));
        if (pol != "exists" && pol != "notExists") throw SchemaError(join(p, "polarity"), "expected exists or notExists");
        std::vector<Binding> bindings;
        const auto& bs = array(n["bindings"], join(p, "bindings"));
        for (std::size_t i = 0; i < bs.size(); ++i) bindings.push_back(binding(bs[i], index(join(p, "bindings"), i)));
        std::optional<GroupingOp> grouping;
        if (n.contains("grouping")) {
          auto gp = join(p, "grouping");
          object(n["grouping"], gp, {"keys"});
          GroupingOp g;
          const auto& ks = array(n["grouping"]["keys"], join(gp, "keys"));
          for (std::size_t i = 0; i < ks.size(); ++i) {
            auto r = ref(ks[i], index(join(gp, "keys"), i));
            g.keys.push_back(make_attr(r.variable, r.attribute));
          }
          grouping = std::move(g);
        }
        JoinTreePtr joins;
        if (n.contains("joins")) joins = join_tree(n["joins"], join(p, "joins"));
        auto body = formula(n["body"], join(p, "body"));
        return make_quantified(pol == "exists" ? Polarity::Exists : Polarity::NotExists, std::move(bindings),
                               std::move(grouping), std::move(joins), std::move(body));
      }
      if (key == "and" || key == "or") {
        array(n, p);
        std::vector<FormulaPtr> children;
        for (std::size_t i = 0; i < n.size(); ++i) children.push_back(formula(n[i], index(p, i)));
        return key == "and" ? make_and(std::move(children)) : make_or(std::move(children));
      }
      if (key == "not") return make_not(formula(n, p));
      if (key == "atom") return atom(n, p);
      object(n, p, {});
      return make_true();
    } catch (const AltError& e) {
      throw SchemaError(p, e.what());
    }
  }

  CollectionPtr collection(const json& j, const std::string& path) {
    object(j, path, {"head", "body"});
    auto hp = join(path, "head");
    object(j["head"], hp, {"relation", "attributes"});
    HeadSpec head;
    head.relation = identifier(j["head"]["relation"], join(hp, "relation"));
    const auto& attrs = array(j["head"]["attributes"], join(hp, "attributes"));
    for (std::size_t i = 0; i < attrs.size(); ++i)
      head.attributes.push_back(identifier(attrs[i], index(join(hp, "attributes"), i)));
    auto body = formula(j["body"], join(path, "body"));
    try {
      return make_collection(std::move(head), std::move(body));
    } catch (const AltError& e) {
      throw SchemaError(hp, e.what());
    }
  }
};

}  // namespace

Value value_from_json(const json& j, const std::string& path) {
  if (!j.is_object() || j.size() != 1) throw SchemaError(path, "expected a tagged value");
  std::string key = j.begin().key();
  const json& v = j.begin().value();
  auto p = path + "." + key;
  if (key == "null") {
    if (!v.is_object() || !v.empty()) throw SchemaError(p, "expected {}");
    return Value::null();
  }
  if (key == "bool") {
    if (!v.is_boolean()) throw SchemaError(p, "expected a boolean");
    return Value::boolean(v.get<bool>());
  }
  if (key == "text") {
    if (!v.is_string()) throw SchemaError(p, "expected a string");
    return Value::text(v.get<std::string>());
  }
  if (key == "int" || key == "dec") {
    std::string s;
    if (v.is_string()) s = v.get<std::string>();
    else if (v.is_number_integer()) s = v.dump();
    else throw SchemaError(p, "expected a numeric string");
    Value out;
    try {
      out = Value::parse_number(s);
    } catch (const std::invalid_argument& e) {
      throw SchemaError(p, e.what());
    }
    if (key == "int" && out.tag() != ValueTag::Int) throw SchemaError(p, "expected an integer");
    if (key == "dec" && out.tag() == ValueTag::Int) out = Value::decimal(Rational(out.as_int()));
    return out;
  }
  throw SchemaError(p, "unknown value tag");
}

Program program_from_json(const json& doc) {
  Reader r;
  r.object(doc, "", {"alt_version", "definitions", "main"});
  if (!doc["alt_version"].is_number_integer() || doc["alt_version"].get<int>() != kAltVersion)
    throw SchemaError("alt_version", "unsupported version");
  std::vector<Definition> defs;
  const auto& ds = r.array(doc["definitions"], "definitions");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto p = Reader::index("definitions", i);
    r.object(ds[i], p, {"name", "collection"}, {"abstract"});
    Definition d;
    d.name = r.identifier(ds[i]["name"], p + ".name");
    if (ds[i].contains("abstract")) {
      if (!ds[i]["abstract"].is_boolean()) throw SchemaError(p + ".abstract", "expected a boolean");
      d.abstract = ds[i]["abstract"].get<bool>();
    }
    d.collection = r.collection(ds[i]["collection"], p + ".collection");
    defs.push_back(std::move(d));
  }
  const json& m = doc["main"];
  std::variant<CollectionPtr, FormulaPtr> main;
  if (m.is_object() && m.contains("formula")) {
    r.object(m, "main", {"formula"});
    main = r.formula(m["formula"], "main.formula");
  } else {
    main = r.collection(m, "main");
  }
  try {
    return make_program(std::move(defs), std::move(main));
  } catch (const AltError& e) {
    throw SchemaError("definitions", e.what());
  }
}

Program deserialize_alt(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("malformed JSON: ") + e.what());
  }
  return program_from_json(doc);
}

}  // namespace arc
