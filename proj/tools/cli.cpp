#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "arc/alt_json.hpp"
#include "arc/binder.hpp"
#include "arc/error.hpp"
#include "arc/evaluator.hpp"
#include "arc/expand.hpp"
#include "arc/higraph.hpp"
#include "arc/pattern.hpp"
#include "arc/sql.hpp"
#include "arc/syntax.hpp"

namespace arc::cli {

namespace {

std::string read_input(const std::string& path) {
  std::stringstream ss;
  if (path == "-") {
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArcError("E_IO", "cannot read " + path);
  ss << in.rdbuf();
  return ss.str();
}

bool is_sql_path(const std::string& path) {
  return path.size() > 4 && path.compare(path.size() - 4, 4, ".sql") == 0;
}

// ARC source, or SQL translated to ARC when the file ends in .sql.
Program load_program(const std::string& path, const Catalog* catalog = nullptr, std::ostream* warn = nullptr) {
  std::string text = read_input(path);
  if (!is_sql_path(path)) return parse_arc(text);
  std::vector<Diagnostic> warnings;
  Program p = translate_sql(parse_sql(text), SqlTranslateOptions{catalog, &warnings});
  if (warn)
    for (const auto& w : warnings) *warn << w.to_string() << "\n";
  return p;
}

LinkedProgram link_or_throw(const Program& p, const ExternalRegistry& registry) {
  BindResult r = analyze(p, registry);
  if (!r.ok()) {
    for (const auto& d : r.diagnostics)
      if (d.severity == Severity::Error) throw ArcError(d.code, d.message, d.span);
  }
  return std::move(*r.linked);
}

std::string set_notation(const Relation& r) {
  if (r.rows.empty()) return "∅";
  std::string s = "{";
  bool first = true;
  for (const auto& t : r.sorted_rows()) {
    s += first ? "(" : ", (";
    first = false;
    for (std::size_t i = 0; i < t.size(); ++i) s += (i ? ", " : "") + t[i].to_display();
    s += ")";
  }
  return s + "}";
}

// Pads to `width` code points.
std::string pad(const std::string& s, std::size_t width) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n >= width ? s + " " : s + std::string(width - n, ' ');
}

// Demo databases and queries are embedded so the binary is self-contained.
const char* kCountBugDb = R"({"relations": {"R": {"schema": ["id","q"], "rows": [[9,0]]},
                              "S": {"schema": ["id","d"], "rows": []}}})";

struct Version {
  const char* name;
  const char* sql;
  const char* arc;
};

const Version kCountBug[] = {
    {"v1 scalar subquery", "select R.id from R where R.q = (select count(S.d) from S where S.id = R.id)",
     "{ Q(id) | exists r in R [ Q.id = r.id and exists s in S, group() [ r.id = s.id and r.q = count(s.d) ] ] }"},
    {"v2 group by + join",
     "select R.id from R, (select S.id, count(S.d) as ct from S group by S.id) as X "
     "where R.q = X.ct and R.id = X.id",
     "{ Q(id) | exists r in R, x in { X(id, ct) | exists s in S, group(s.id) [ X.id = s.id and X.ct = count(s.d) ] } "
     "[ Q.id = r.id and r.id = x.id and r.q = x.ct ] }"},
    {"v3 left join + group by",
     "select R.id from R, (select R2.id, count(S.d) as ct from R R2 left join S on R2.id = S.id group by R2.id) as X "
     "where R.q = X.ct and R.id = X.id",
     "{ Q(id) | exists r in R, x in { X(id, ct) | exists s in S, r2 in R, group(r2.id), left(r2, s) "
     "[ X.id = r2.id and X.ct = count(s.d) and r2.id = s.id ] } [ Q.id = r.id and r.id = x.id and r.q = x.ct ] }"},
};

int demo_count_bug(std::ostream& out) {
  Database db = database_from_json(kCountBugDb);
  out << "count bug on R(id, q) = {(9, 0)}, S(id, d) = ∅, sql conventions\n";
  for (const auto& v : kCountBug) {
    Relation arc_result = evaluate_program(parse_arc(v.arc), db, conventions_sql());
    Relation sql_result = sql_roundtrip_eval(v.sql, db, conventions_sql());
    bool same_pattern = pattern_equal(translate_sql(parse_sql(v.sql)), parse_arc(v.arc));
    out << "  " << pad(v.name, 26) << "ARC " << pad(set_notation(arc_result), 8) << "SQL "
        << pad(set_notation(sql_result), 8) << (same_pattern ? "pattern-equal" : "patterns differ") << "\n";
  }
  return 0;
}

int demo_conventions(std::ostream& out) {
  const char* q =
      "{ Q(ak, sm) | exists r in R, x in { X(sm) | exists s in S, group() [ s.a < r.ak and X.sm = sum(s.b) ] } "
      "[ Q.ak = r.ak and Q.sm = x.sm ] }";
  Database db = database_from_json(R"({"relations": {"R": {"schema": ["ak","c"], "rows": [[1,2]]},
                                                     "S": {"schema": ["a","b"], "rows": []}}})");
  out << "FOI sum over an empty S, R = {(1, 2)}\n" << "  " << q << "\n";
  out << "  " << pad("souffle conventions", 21) << set_notation(evaluate_program(parse_arc(q), db, conventions_souffle())) << "\n";
  out << "  " << pad("sql conventions", 21) << set_notation(evaluate_program(parse_arc(q), db, conventions_sql())) << "\n";
  return 0;
}

int demo_matrix(std::ostream& out) {
  Database db = database_from_json(R"({"relations": {
      "A": {"schema": ["row","col","val"], "rows": [[1,1,2],[1,2,1],[2,2,3]]},
      "B": {"schema": ["row","col","val"], "rows": [[1,1,3],[2,1,4],[2,2,5]]}}})");
  const char* arith =
      "{ C(row, col, val) | exists a in A, b in B, group(a.row, b.col) "
      "[ C.row = a.row and C.col = b.col and a.col = b.row and C.val = sum(a.val * b.val) ] }";
  const char* external =
      "{ C(row, col, val) | exists a in A, b in B, f in ext \"*\", group(a.row, b.col) "
      "[ C.row = a.row and C.col = b.col and a.col = b.row and C.val = sum(f.out) "
      "and f.$1 = a.val and f.$2 = b.val ] }";
  out << "sparse A = {(1,1,2), (1,2,1), (2,2,3)}, B = {(1,1,3), (2,1,4), (2,2,5)}\n";
  out << "C = A * B with arithmetic\n" << format_table(evaluate_program(parse_arc(arith), db, conventions_sql()));
  out << "C = A * B with the external relation \"*\"\n"
      << format_table(evaluate_program(parse_arc(external), db, conventions_sql()));
  return 0;
}

int demo_unique_set(std::ostream& out) {
  Database db = database_from_json(R"({"relations": {"L": {"schema": ["d","b"],
      "rows": [["ann","ale"],["ann","stout"],["bob","ale"],["bob","stout"],["cid","ale"],["dee","ipa"]]}}})");
  const char* flat =
      "{ Q(d) | exists l1 in L [ Q.d = l1.d and not (exists l2 in L [ l2.d <> l1.d and "
      "not (exists l3 in L [ l3.d = l2.d and not (exists l4 in L [ l4.b = l3.b and l4.d = l1.d ]) ]) and "
      "not (exists l5 in L [ l5.d = l1.d and not (exists l6 in L [ l6.d = l2.d and l6.b = l5.b ]) ]) ]) ] }";
  const char* modular =
      "abstract def S := { S(left, right) | not (exists l3 in L [ l3.d = S.left and "
      "not (exists l4 in L [ l4.b = l3.b and l4.d = S.right ]) ]) }\n"
      "{ Q(d) | exists l1 in L [ Q.d = l1.d and not (exists l2 in L, s1 in S, s2 in S [ l2.d <> l1.d and "
      "s1.left = l1.d and s1.right = l2.d and s2.left = l2.d and s2.right = l1.d ]) ] }";
  Conventions set = conventions_souffle();
  out << "drinkers with a unique set of beers, L = " << set_notation(*db.find("L")) << "\n";
  out << "  flat query          " << set_notation(evaluate_program(parse_arc(flat), db, set)) << "\n";
  out << "  with abstract S     " << set_notation(evaluate_program(parse_arc(modular), db, set)) << "\n";
  out << "  expanded program\n    " << print_arc(expand_abstract(parse_arc(modular))) << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Abstract Relational Calculus toolkit", "arc"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string input, input_b, db_path, semantics = "bag", agg_empty = "null", div_zero = "null";
  std::string out_format = "table", emit = "arc", render_format = "dot", demo_name;
  std::size_t fixpoint_cap = 10000;
  std::vector<std::string> collapse_names;

  auto* parse = app.add_subcommand("parse", "Parse ARC (or .sql) and print the ALT as JSON");
  parse->add_option("file", input, "input file, - for stdin")->required();

  auto* check = app.add_subcommand("check", "Bind and check; print diagnostics");
  check->add_option("file", input, "input file, - for stdin")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a query or sentence against a JSON database");
  eval->add_option("file", input, "input file, - for stdin")->required();
  eval->add_option("--db", db_path, "database JSON")->required();
  eval->add_option("--semantics", semantics, "set or bag")->check(CLI::IsMember({"set", "bag"}));
  eval->add_option("--agg-empty", agg_empty, "aggregate over no input: null or zero")
      ->check(CLI::IsMember({"null", "zero"}));
  eval->add_option("--div-zero", div_zero, "division by zero: null or error")->check(CLI::IsMember({"null", "error"}));
  eval->add_option("--fixpoint-cap", fixpoint_cap, "iteration cap for recursive definitions")
      ->check(CLI::PositiveNumber);
  eval->add_option("--out", out_format, "json or table")->check(CLI::IsMember({"json", "table"}));

  auto* from_sql = app.add_subcommand("from-sql", "Translate SQL into ARC");
  from_sql->add_option("file", input, "SQL file, - for stdin")->required();
  from_sql->add_option("--emit", emit, "arc or json")->check(CLI::IsMember({"arc", "json"}));
  from_sql->add_option("--db", db_path, "database JSON supplying schemas for * and count(*)");

  auto* render = app.add_subcommand("render", "Render the higraph modality");
  render->add_option("file", input, "input file, - for stdin")->required();
  render->add_option("--format", render_format, "dot or json")->check(CLI::IsMember({"dot", "json"}));
  render->add_option("--collapse", collapse_names, "abstract relations to draw as module boxes");

  auto* diff = app.add_subcommand("diff", "Compare two queries by relational pattern");
  diff->add_option("a", input, "first query")->required();
  diff->add_option("b", input_b, "second query")->required();

  auto* classify = app.add_subcommand("classify", "Report FIO/FOI for each grouping scope");
  classify->add_option("file", input, "input file, - for stdin")->required();

  auto* demo = app.add_subcommand("demo", "Run a built-in demonstration");
  demo->add_option("name", demo_name, "count-bug, conventions, matrix or unique-set")
      ->required()
      ->check(CLI::IsMember({"count-bug", "conventions", "matrix", "unique-set"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 2;
  }

  try {
    ExternalRegistry registry = ExternalRegistry::from_environment();
    if (parse->parsed()) {
      out << serialize_alt(load_program(input, nullptr, &err)) << "\n";
      return 0;
    }
    if (check->parsed()) {
      Program p = load_program(input, nullptr, &err);
      BindResult r = analyze(p, registry);
      std::vector<Diagnostic> diags = r.diagnostics;
      if (r.ok()) {
        auto plan = plan_access(*r.linked);
        if (auto* errs = std::get_if<std::vector<Diagnostic>>(&plan)) {
          for (const auto& d : *errs)
            // abstract relations are legal until evaluation
            if (d.code != "E_ABSTRACT_UNEXPANDED") diags.push_back(d);
        }
      }
      for (const auto& d : diags) out << d.to_string() << "\n";
      if (has_errors(diags)) return 1;
      out << "ok\n";
      return 0;
    }
    if (eval->parsed()) {
      Database db = database_from_json(read_input(db_path));
      Conventions conv;
      conv.semantics = semantics == "set" ? CollectionSemantics::Set : CollectionSemantics::Bag;
      conv.empty_aggregate = agg_empty == "zero" ? EmptyAggregate::Zero : EmptyAggregate::Null;
      conv.division_by_zero = div_zero == "error" ? DivisionByZero::Error : DivisionByZero::Null;
      conv.fixpoint_cap = fixpoint_cap;
      Catalog catalog = db.catalog();
      Program p = load_program(input, &catalog, &err);
      if (p.is_sentence()) {
        bool v = evaluate_sentence(p, db, conv, registry);
        if (out_format == "json") out << nlohmann::json(v).dump() << "\n";
        else out << (v ? "true" : "false") << "\n";
        return 0;
      }
      Relation r = evaluate_program(p, db, conv, registry);
      if (out_format == "json") out << to_json(r).dump(2) << "\n";
      else out << format_table(r);
      return 0;
    }
    if (from_sql->parsed()) {
      std::optional<Catalog> catalog;
      if (!db_path.empty()) catalog = database_from_json(read_input(db_path)).catalog();
      std::vector<Diagnostic> warnings;
      Program p = translate_sql(parse_sql(read_input(input)),
                                SqlTranslateOptions{catalog ? &*catalog : nullptr, &warnings});
      for (const auto& w : warnings) err << w.to_string() << "\n";
      if (emit == "json") out << serialize_alt(p) << "\n";
      else out << print_arc(p) << "\n";
      return 0;
    }
    if (render->parsed()) {
      LinkedProgram lp = link_or_throw(load_program(input, nullptr, &err), registry);
      HigraphOptions options;
      options.collapse.insert(collapse_names.begin(), collapse_names.end());
      HigraphDoc doc = to_higraph(lp, options);
      if (render_format == "json") out << to_json(doc).dump(2) << "\n";
      else out << to_dot(doc);
      return 0;
    }
    if (diff->parsed()) {
      Program a = load_program(input, nullptr, &err);
      Program b = load_program(input_b, nullptr, &err);
      PatternDiff d = pattern_diff(a, b);
      if (d.equal && pattern_equal(a, b)) {
        out << "patterns equal\n";
        return 0;
      }
      out << "patterns differ at " << d.path << "\n";
      out << "  < " << (d.left.empty() ? "(missing)" : d.left) << "\n";
      out << "  > " << (d.right.empty() ? "(missing)" : d.right) << "\n";
      return 1;
    }
    if (classify->parsed()) {
      LinkedProgram lp = link_or_throw(load_program(input, nullptr, &err), registry);
      auto classes = classify_aggregation(lp);
      if (classes.empty()) out << "no grouping scopes\n";
      for (const auto& c : classes) out << c.path << " " << to_string(c.pattern) << "\n";
      return 0;
    }
    if (demo->parsed()) {
      if (demo_name == "count-bug") return demo_count_bug(out);
      if (demo_name == "conventions") return demo_conventions(out);
      if (demo_name == "matrix") return demo_matrix(out);
      return demo_unique_set(out);
    }
  } catch (const ParseError& e) {
    err << "error " << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const ArcError& e) {
    err << "error " << e.code();
    if (e.span() != SourceSpan{}) err << " at " << e.span().to_string();
    err << ": " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace arc::cli
