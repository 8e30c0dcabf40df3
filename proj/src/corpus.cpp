#include "arc/corpus.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "arc/alt_json.hpp"
#include "arc/binder.hpp"
#include "arc/database.hpp"
#include "arc/error.hpp"
#include "arc/evaluator.hpp"
#include "arc/expand.hpp"
#include "arc/higraph.hpp"
#include "arc/pattern.hpp"
#include "arc/sql.hpp"
#include "arc/syntax.hpp"

namespace arc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kExpectedFile = "expected.json";
const char* kMainInput = "query.arc";

[[noreturn]] void malformed(const std::string& id, const std::string& why) {
  throw ArcError("E_FIXTURE_MALFORMED", id + ": " + why);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ArcError("E_IO", "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_sql(const std::string& name) { return fs::path(name).extension() == ".sql"; }

const std::set<std::string> kKinds = {"relation", "bool", "error", "diagnostics", "pattern", "classify", "dot"};
const std::set<std::string> kProvenance = {"paper", "derived", "trivial"};

struct Fixture {
  std::string id;
  fs::path dir;
  json expected;
};

void require_file(const Fixture& f, const json& check, const char* key) {
  if (!check.contains(key)) return;
  if (!check[key].is_string()) malformed(f.id, std::string("\"") + key + "\" must be a file name");
  if (!fs::exists(f.dir / check[key].get<std::string>()))
    malformed(f.id, "missing file " + check[key].get<std::string>());
}

void validate_conventions(const Fixture& f, const json& c) {
  if (c.is_string()) {
    if (c != "sql" && c != "souffle") malformed(f.id, "conventions must be \"sql\" or \"souffle\"");
    return;
  }
  if (!c.is_object()) malformed(f.id, "conventions must be a name or an object");
  static const std::set<std::string> keys = {"base", "semantics", "empty_aggregate", "division_by_zero",
                                             "fixpoint_cap"};
  for (const auto& [k, v] : c.items())
    if (!keys.count(k)) malformed(f.id, "unknown conventions field " + k);
}

Fixture load_fixture(const fs::path& dir) {
  Fixture f{dir.filename().string(), dir, {}};
  if (!fs::exists(dir / kExpectedFile)) malformed(f.id, std::string("missing ") + kExpectedFile);
  if (!fs::exists(dir / kMainInput)) malformed(f.id, std::string("missing ") + kMainInput);
  try {
    f.expected = json::parse(read_file(dir / kExpectedFile));
  } catch (const json::parse_error& e) {
    malformed(f.id, std::string("expected.json: ") + e.what());
  }
  if (!f.expected.is_object() || !f.expected.contains("description") || !f.expected["description"].is_string())
    malformed(f.id, "expected.json needs a \"description\" string");
  if (!f.expected.contains("checks") || !f.expected["checks"].is_array() || f.expected["checks"].empty())
    malformed(f.id, "expected.json needs a non-empty \"checks\" array");

  for (const auto& c : f.expected["checks"]) {
    if (!c.is_object() || !c.contains("kind") || !kKinds.count(c["kind"].get<std::string>()))
      malformed(f.id, "every check needs a known \"kind\"");
    std::string kind = c["kind"];
    if (!c.contains("provenance") || !c["provenance"].is_string() || !kProvenance.count(c["provenance"]))
      malformed(f.id, kind + " check needs \"provenance\": paper, derived or trivial");
    if (!c.contains("note") || !c["note"].is_string() || c["note"].get<std::string>().empty())
      malformed(f.id, kind + " check needs a \"note\" saying where the expectation comes from");
    for (const char* key : {"input", "other", "db", "file"}) require_file(f, c, key);
    if (c.contains("conventions")) validate_conventions(f, c["conventions"]);

    auto need = [&](const char* key, bool ok) {
      if (!c.contains(key) || !ok) malformed(f.id, kind + " check: bad or missing \"" + key + "\"");
    };
    if (kind == "relation") need("rows", c.contains("rows") && c["rows"].is_array());
    if (kind == "bool") need("value", c.contains("value") && c["value"].is_boolean());
    if (kind == "error") need("code", c.contains("code") && c["code"].is_string());
    if (kind == "diagnostics") need("codes", c.contains("codes") && c["codes"].is_array());
    if (kind == "pattern") need("equal", c.contains("equal") && c["equal"].is_boolean());
    if (kind == "pattern") need("other", c.contains("other"));
    if (kind == "classify") need("expected", c.contains("expected") && c["expected"].is_array());
    if (kind == "dot") need("file", c.contains("file"));
  }
  return f;
}

std::string input_of(const json& c) { return c.value("input", std::string(kMainInput)); }

Conventions conventions_of(const json& c) {
  if (!c.contains("conventions")) return conventions_sql();
  const json& j = c["conventions"];
  if (j.is_string()) return j == "souffle" ? conventions_souffle() : conventions_sql();
  Conventions conv = j.value("base", std::string("sql")) == "souffle" ? conventions_souffle() : conventions_sql();
  if (j.contains("semantics"))
    conv.semantics = j["semantics"] == "set" ? CollectionSemantics::Set : CollectionSemantics::Bag;
  if (j.contains("empty_aggregate"))
    conv.empty_aggregate = j["empty_aggregate"] == "zero" ? EmptyAggregate::Zero : EmptyAggregate::Null;
  if (j.contains("division_by_zero"))
    conv.division_by_zero = j["division_by_zero"] == "error" ? DivisionByZero::Error : DivisionByZero::Null;
  if (j.contains("fixpoint_cap")) conv.fixpoint_cap = j["fixpoint_cap"].get<std::size_t>();
  return conv;
}

class Runner {
 public:
  explicit Runner(const Fixture& f) : f_(f) {}

  FixtureResult run() {
    FixtureResult result{f_.id, {}};
    const json& checks = f_.expected["checks"];
    for (std::size_t i = 0; i < checks.size(); ++i) {
      const json& c = checks[i];
      std::string name = c["kind"].get<std::string>() + " #" + std::to_string(i + 1) + " (" + input_of(c) + ")";
      result.checks.push_back(guarded(name, [&] { return dispatch(c); }));
    }
    for (const auto& name : inputs()) {
      if (is_sql(name)) {
        if (!expects_error(name)) result.checks.push_back(guarded("translation binds (" + name + ")", [&] {
          return sql_binds(name);
        }));
      } else if (!expects_code(name, "E_PARSE")) {
        result.checks.push_back(guarded("round trip (" + name + ")", [&] { return round_trip(name); }));
      }
    }
    return result;
  }

 private:
  const Fixture& f_;

  // "" on success, otherwise the failure explanation.
  using Check = std::function<std::string()>;

  static CheckResult guarded(const std::string& name, const Check& check) {
    try {
      std::string failure = check();
      return {name, failure.empty(), failure};
    } catch (const ArcError& e) {
      return {name, false, e.code() + ": " + e.what()};
    } catch (const std::exception& e) {
      return {name, false, e.what()};
    }
  }

  // query.arc plus every .arc/.sql file the checks name.
  std::set<std::string> inputs() const {
    std::set<std::string> out{kMainInput};
    for (const auto& c : f_.expected["checks"]) {
      out.insert(input_of(c));
      if (c.contains("other")) out.insert(c["other"].get<std::string>());
    }
    for (const auto& entry : fs::directory_iterator(f_.dir))
      if (is_sql(entry.path().filename().string())) out.insert(entry.path().filename().string());
    return out;
  }

  bool expects_code(const std::string& input, const std::string& code) const {
    for (const auto& c : f_.expected["checks"]) {
      if (input_of(c) != input) continue;
      if (c["kind"] == "diagnostics")
        for (const auto& x : c["codes"])
          if (x == code) return true;
      if (c["kind"] == "error" && c["code"] == code) return true;
    }
    return false;
  }

  bool expects_error(const std::string& input) const {
    for (const auto& c : f_.expected["checks"]) {
      if (input_of(c) != input) continue;
      if (c["kind"] == "error") return true;
      if (c["kind"] == "diagnostics")
        for (const auto& x : c["codes"])
          if (x.get<std::string>().rfind("E_", 0) == 0) return true;
    }
    return false;
  }

  std::string text(const std::string& name) const { return read_file(f_.dir / name); }

  std::optional<Database> database(const json& c) const {
    if (!c.contains("db")) return std::nullopt;
    return database_from_json(text(c["db"].get<std::string>()));
  }

  Program program(const std::string& name, const Catalog* catalog = nullptr,
                  std::vector<Diagnostic>* warnings = nullptr) const {
    if (!is_sql(name)) return parse_arc(text(name));
    return translate_sql(parse_sql(text(name)), SqlTranslateOptions{catalog, warnings});
  }

  // Catalog from the fixture's main database, when it has one.
  std::optional<Catalog> default_catalog() const {
    if (!fs::exists(f_.dir / "db.json")) return std::nullopt;
    return database_from_json(text("db.json")).catalog();
  }

  std::string dispatch(const json& c) {
    std::string kind = c["kind"];
    if (kind == "relation") return relation(c);
    if (kind == "bool") return boolean(c);
    if (kind == "error") return error(c);
    if (kind == "diagnostics") return diagnostics(c);
    if (kind == "pattern") return pattern(c);
    if (kind == "classify") return classify(c);
    return dot(c);
  }

  std::string relation(const json& c) {
    Database db = database(c).value_or(Database{});
    Conventions conv = conventions_of(c);
    std::string name = input_of(c);
    Relation actual = is_sql(name) ? sql_roundtrip_eval(text(name), db, conv)
                                   : evaluate_program(parse_arc(text(name)), db, conv);
    std::vector<Tuple> expected;
    for (std::size_t i = 0; i < c["rows"].size(); ++i) {
      const json& row = c["rows"][i];
      Tuple t;
      for (std::size_t k = 0; k < row.size(); ++k)
        t.push_back(cell_from_json(row[k], "rows/" + std::to_string(i) + "/" + std::to_string(k)));
      expected.push_back(std::move(t));
    }
    if (c.contains("schema") && json(actual.schema) != c["schema"])
      return "schema " + json(actual.schema).dump() + ", expected " + c["schema"].dump();
    if (!same_rows(actual.rows, expected))
      return "got " + to_json(actual)["rows"].dump() + ", expected " + c["rows"].dump();
    return "";
  }

  // Bag equality; numbers compare by value so avg's 60 matches an expected 60.
  static bool same_rows(const std::vector<Tuple>& actual, const std::vector<Tuple>& expected) {
    if (actual.size() != expected.size()) return false;
    auto cell_equal = [](const Value& a, const Value& b) {
      if (a.is_null() || b.is_null()) return a.is_null() && b.is_null();
      if (a.is_numeric() && b.is_numeric()) return a.as_rational() == b.as_rational();
      return a == b;
    };
    std::vector<bool> used(actual.size(), false);
    for (const auto& want : expected) {
      bool found = false;
      for (std::size_t i = 0; i < actual.size() && !found; ++i) {
        if (used[i] || actual[i].size() != want.size()) continue;
        bool eq = true;
        for (std::size_t k = 0; k < want.size() && eq; ++k) eq = cell_equal(actual[i][k], want[k]);
        if (eq) used[i] = found = true;
      }
      if (!found) return false;
    }
    return true;
  }

  std::string boolean(const json& c) {
    Database db = database(c).value_or(Database{});
    Catalog catalog = db.catalog();
    bool actual = evaluate_sentence(program(input_of(c), &catalog), db, conventions_of(c));
    if (actual != c["value"].get<bool>()) return std::string("got ") + (actual ? "true" : "false");
    return "";
  }

  std::string error(const json& c) {
    std::string want = c["code"];
    try {
      Database db = database(c).value_or(Database{});
      Conventions conv = conventions_of(c);
      validate(conv);
      Catalog catalog = db.catalog();
      Program p = program(input_of(c), &catalog);
      if (p.is_sentence()) evaluate_sentence(p, db, conv);
      else evaluate_program(p, db, conv);
    } catch (const ArcError& e) {
      if (e.code() == want) return "";
      return "raised " + e.code() + " (" + e.what() + "), expected " + want;
    }
    return "no error, expected " + want;
  }

  std::string diagnostics(const json& c) {
    std::set<std::string> actual;
    std::optional<Catalog> catalog;
    if (auto db = database(c)) catalog = db->catalog();
    try {
      std::vector<Diagnostic> warnings;
      Program p = program(input_of(c), catalog ? &*catalog : nullptr, &warnings);
      for (const auto& w : warnings) actual.insert(w.code);
      BindResult r = analyze(expand_abstract(p), ExternalRegistry::builtin(), catalog ? &*catalog : nullptr);
      for (const auto& d : r.diagnostics) actual.insert(d.code);
      if (r.ok()) {
        auto plan = plan_access(*r.linked);
        if (auto* errs = std::get_if<std::vector<Diagnostic>>(&plan))
          for (const auto& d : *errs) actual.insert(d.code);
      }
    } catch (const ArcError& e) {
      actual.insert(e.code());
    }
    std::set<std::string> want;
    for (const auto& x : c["codes"]) want.insert(x.get<std::string>());
    if (actual != want) return "got " + json(actual).dump() + ", expected " + json(want).dump();
    return "";
  }

  std::string pattern(const json& c) {
    std::optional<Catalog> catalog = default_catalog();
    const Catalog* cat = catalog ? &*catalog : nullptr;
    Program a = program(input_of(c), cat);
    Program b = program(c["other"].get<std::string>(), cat);
    bool equal = pattern_equal(a, b);
    if (equal != c["equal"].get<bool>()) {
      PatternDiff d = pattern_diff(a, b);
      return equal ? "patterns are equal" : "patterns differ at " + d.path + ": " + d.left + " vs " + d.right;
    }
    if (c.contains("path")) {
      PatternDiff d = pattern_diff(a, b);
      if (d.path != c["path"]) return "first difference at " + d.path + ", expected " + c["path"].get<std::string>();
    }
    return "";
  }

  LinkedProgram link(const std::string& name) const {
    std::optional<Catalog> catalog = default_catalog();
    BindResult r = analyze(program(name, catalog ? &*catalog : nullptr), ExternalRegistry::builtin());
    if (!r.ok())
      for (const auto& d : r.diagnostics)
        if (d.severity == Severity::Error) throw ArcError(d.code, d.message, d.span);
    return std::move(*r.linked);
  }

  std::string classify(const json& c) {
    json actual = json::array();
    for (const auto& k : classify_aggregation(link(input_of(c))))
      actual.push_back({k.path, std::string(to_string(k.pattern))});
    if (actual != c["expected"]) return "got " + actual.dump() + ", expected " + c["expected"].dump();
    return "";
  }

  std::string dot(const json& c) {
    HigraphOptions options;
    if (c.contains("collapse"))
      for (const auto& n : c["collapse"]) options.collapse.insert(n.get<std::string>());
    std::string first = to_dot(to_higraph(link(input_of(c)), options));
    std::string second = to_dot(to_higraph(link(input_of(c)), options));
    if (first != second) return "two renders of the same program differ";
    if (first != text(c["file"].get<std::string>())) return "DOT differs from " + c["file"].get<std::string>();
    return "";
  }

  std::string round_trip(const std::string& name) {
    Program p = parse_arc(text(name));
    std::string printed = print_arc(p);
    Program again = parse_arc(printed);
    if (!structurally_equal(p, again)) return "parse(print(p)) differs from p";
    if (print_arc(again) != printed) return "printing is not a fixed point";
    std::string doc = serialize_alt(p);
    Program back = deserialize_alt(doc);
    if (!structurally_equal(p, back)) return "deserialize(serialize(p)) differs from p";
    if (serialize_alt(back) != doc) return "serialize(deserialize(d)) differs from d";
    return "";
  }

  std::string sql_binds(const std::string& name) {
    std::optional<Catalog> catalog = default_catalog();
    Program p = program(name, catalog ? &*catalog : nullptr);
    BindResult r = analyze(p, ExternalRegistry::builtin(), catalog ? &*catalog : nullptr);
    for (const auto& d : r.diagnostics)
      if (d.severity == Severity::Error) return "translation has binder error " + d.to_string();
    Program reparsed = parse_arc(print_arc(p));
    if (!structurally_equal(p, reparsed)) return "printed translation does not parse back to itself";
    return "";
  }
};

}  // namespace

bool FixtureResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::size_t CorpusReport::passed() const {
  return static_cast<std::size_t>(
      std::count_if(fixtures.begin(), fixtures.end(), [](const FixtureResult& f) { return f.passed(); }));
}

std::size_t CorpusReport::failed() const { return fixtures.size() - passed(); }

std::vector<std::string> list_fixtures(const fs::path& root, std::string_view filter) {
  fs::path dir = root / "fixtures";
  if (!fs::is_directory(dir)) throw ArcError("E_FIXTURE_MALFORMED", "no fixtures directory under " + root.string());
  std::string pattern(filter);
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    std::string id = entry.path().filename().string();
    if (pattern.empty() || fnmatch(pattern.c_str(), id.c_str(), 0) == 0) ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

FixtureResult run_fixture(const fs::path& dir) {
  Fixture f = load_fixture(dir);
  return Runner(f).run();
}

CorpusReport run_corpus(const fs::path& root, std::string_view filter) {
  std::vector<Fixture> fixtures;
  for (const auto& id : list_fixtures(root, filter)) fixtures.push_back(load_fixture(root / "fixtures" / id));
  CorpusReport report;
  for (const auto& f : fixtures) report.fixtures.push_back(Runner(f).run());
  return report;
}

std::string format_report(const CorpusReport& report) {
  std::ostringstream out;
  for (const auto& f : report.fixtures) {
    out << (f.passed() ? "PASS " : "FAIL ") << f.id << " (" << f.checks.size() << " checks)\n";
    for (const auto& c : f.checks)
      if (!c.passed) out << "  " << c.name << ": " << c.detail << "\n";
  }
  out << report.fixtures.size() << " fixtures, " << report.passed() << " passed, " << report.failed() << " failed\n";
  return out.str();
}

}  // namespace arc
