#include <doctest.h>

#include <json.hpp>

#include "arc/error.hpp"
#include "arc/pattern.hpp"
#include "arc/sql.hpp"
#include "arc/syntax.hpp"
#include "paper_queries.hpp"

using namespace arc;
using nlohmann::json;

namespace {

Program from_sql(const std::string& text, const Catalog* catalog = nullptr,
                 std::vector<Diagnostic>* warnings = nullptr) {
  return translate_sql(parse_sql(text), SqlTranslateOptions{catalog, warnings});
}

void check_pattern(const std::string& sql, const std::string& arc_text) {
  Program translated = from_sql(sql);
  Program expected = parse_arc(arc_text);
  INFO("translated: " << print_arc(translated));
  INFO("canonical translated: " << canonicalize(translated).text);
  INFO("canonical expected:   " << canonicalize(expected).text);
  CHECK(pattern_equal(translated, expected));
}

std::string sql_error(const std::string& text) {
  try {
    from_sql(text);
  } catch (const ArcError& e) {
    return e.code();
  }
  return "";
}

json rows(const Relation& r) { return to_json(r)["rows"]; }

}  // namespace

TEST_CASE("parse grouped aggregate") {
  SqlSelect s = parse_sql(paper::kSqlGroupedSum);
  REQUIRE(s.group_by.size() == 1);
  CHECK(s.group_by[0]->kind == SqlExpr::Kind::Column);
  CHECK(s.group_by[0]->qualifier == "R");
  CHECK(s.group_by[0]->name == "A");
  REQUIRE(s.items.size() == 2);
  CHECK(s.items[1].expr->kind == SqlExpr::Kind::Aggregate);
  CHECK(s.items[1].expr->fn == AggFn::Sum);
  CHECK(s.items[1].alias == "sm");
}

TEST_CASE("parse scalar subquery in where") {
  SqlSelect s = parse_sql(paper::kSqlCountBug1);
  REQUIRE(s.where);
  CHECK(s.where->kind == SqlCond::Kind::Compare);
  CHECK(s.where->right->kind == SqlExpr::Kind::Subquery);
}

TEST_CASE("unsupported constructs are named") {
  CHECK(sql_error("select * from R order by A") == "E_UNSUPPORTED_SQL");
  CHECK(sql_error("select R.A from R union select S.A from S") == "E_UNSUPPORTED_SQL");
  CHECK(sql_error("select R.A from R where R.A like 'x%'") == "E_UNSUPPORTED_SQL");
  CHECK(sql_error("select R.A from R right join S on R.A = S.A") == "E_UNSUPPORTED_SQL");
}

TEST_CASE("translations preserve the paper's patterns") {
  check_pattern(paper::kSqlGroupedSum, paper::kGroupedSum);
  check_pattern(paper::kSqlScalarSum, paper::kGroupedSumFoi);
  check_pattern(paper::kSqlLateralSum, paper::kGroupedSumFoi);
  check_pattern(paper::kSqlNotIn, paper::kNotInNulls);
  check_pattern(paper::kSqlCountBug1, paper::kCountBug1);
  check_pattern(paper::kSqlCountBug2, paper::kCountBug2);
  check_pattern(paper::kSqlCountBug3, paper::kCountBug3);
  check_pattern("select R.dept, avg(S.sal) av\nfrom R, S\nwhere R.empl=S.empl\ngroup by R.dept\nhaving sum(S.sal)>100",
                paper::kHella);
  check_pattern("select R.m, S.n\nfrom R\nleft outer join S\non (R.h=11 and R.y=S.y)",
                "{ Q(m, n) | exists r in R, s in S, left(r, inner(lit 11 as v, s)) "
                "[ Q.m = r.m and Q.n = s.n and r.y = s.y and r.h = v.val ] }");
  check_pattern("select x.A, z.B\nfrom X as x\njoin lateral (\n  select y.A as B\n  from Y as y\n"
                "  where x.A < y.A) as z\non true",
                "{ Q(A, B) | exists x in X, z in { Z(B) | exists y in Y [ Z.B = y.A and x.A < y.A ] } "
                "[ Q.A = x.A and Q.B = z.B ] }");
}

TEST_CASE("FIO and FOI translations are different patterns") {
  CHECK_FALSE(pattern_equal(from_sql(paper::kSqlGroupedSum), from_sql(paper::kSqlScalarSum)));
  CHECK(pattern_equal(from_sql(paper::kSqlScalarSum), from_sql(paper::kSqlLateralSum)));
}

TEST_CASE("translations evaluate like SQL") {
  Database bug = database_from_json(R"({"relations": {"R": {"schema": ["id","q"], "rows": [[9,0]]},
                                                     "S": {"schema": ["id","d"], "rows": []}}})");
  CHECK(rows(sql_roundtrip_eval(paper::kSqlCountBug1, bug, conventions_sql())) == json::parse("[[9]]"));
  CHECK(rows(sql_roundtrip_eval(paper::kSqlCountBug2, bug, conventions_sql())) == json::array());
  CHECK(rows(sql_roundtrip_eval(paper::kSqlCountBug3, bug, conventions_sql())) == json::parse("[[9]]"));

  Database nulls = database_from_json(R"({"relations": {"R": {"schema": ["A"], "rows": [[1]]},
                                                       "S": {"schema": ["A"], "rows": [[null]]}}})");
  CHECK(rows(sql_roundtrip_eval(paper::kSqlNotIn, nulls, conventions_sql())) == json::array());
  Database no_nulls = database_from_json(R"({"relations": {"R": {"schema": ["A"], "rows": [[1]]},
                                                          "S": {"schema": ["A"], "rows": []}}})");
  CHECK(rows(sql_roundtrip_eval(paper::kSqlNotIn, no_nulls, conventions_sql())) == json::parse("[[1]]"));
}

TEST_CASE("star and count(*) need a catalog") {
  Database db = database_from_json(R"({"relations": {"R": {"schema": ["A","B"], "rows": [[1,2],[1,3]]}}})");
  CHECK(sql_error("select * from R") == "E_UNSUPPORTED_SQL");
  CHECK(rows(sql_roundtrip_eval("select * from R", db, conventions_sql())) == json::parse("[[1,2],[1,3]]"));
  CHECK(rows(sql_roundtrip_eval("select R.A, count(*) n from R group by R.A", db, conventions_sql())) ==
        json::parse("[[1,2]]"));
}

TEST_CASE("left join with grouping warns about the key assumption") {
  std::vector<Diagnostic> warnings;
  from_sql(paper::kSqlCountBug3, nullptr, &warnings);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].code == "W_LEFT_JOIN_GROUP_BY");
}
