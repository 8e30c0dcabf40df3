#include <doctest.h>

#include "arc/alt_json.hpp"
#include "arc/error.hpp"
#include "arc/syntax.hpp"

using namespace arc;

namespace {

const char* kJoin = "{ Q(A) | exists r in R, s in S [ Q.A = r.A and r.B = s.B and s.C = 0 ] }";
const char* kGroup = "{ Q(A,sm) | exists r in R, group(r.A) [ Q.A = r.A and Q.sm = sum(r.B) ] }";
const char* kAncestor =
    "def A := { A(s,t) | exists p in P [ A.s = p.s and A.t = p.t ] or "
    "exists p in P, a2 in A [ A.s = p.s and p.t = a2.s and a2.t = A.t ] }\n"
    "{ Q(s,t) | exists a in A [ Q.s = a.s and Q.t = a.t ] }";

void check_round_trip(const Program& p) {
  std::string text = print_arc(p);
  Program again = parse_arc(text);
  CHECK(structurally_equal(p, again));
  CHECK(print_arc(again) == text);
}

}  // namespace

TEST_CASE("join query parses into one quantifier with three conjuncts") {
  Program p = parse_arc(kJoin);
  REQUIRE_FALSE(p.is_sentence());
  const auto& c = *p.main_collection();
  CHECK(c.head.relation == "Q");
  CHECK(c.head.attributes == std::vector<std::string>{"A"});
  const auto& q = std::get<Formula::Quantified>(c.body->node);
  CHECK(q.bindings.size() == 2);
  CHECK_FALSE(q.grouping.has_value());
  CHECK(conjuncts(q.body).size() == 3);
  check_round_trip(p);
}

TEST_CASE("grouping scope") {
  Program p = parse_arc(kGroup);
  const auto& q = std::get<Formula::Quantified>(p.main_collection()->body->node);
  REQUIRE(q.grouping.has_value());
  CHECK(q.grouping->keys.size() == 1);
  check_round_trip(p);
}

TEST_CASE("dangling and is a parse error at the bracket") {
  try {
    parse_arc("{ Q(A) | exists r in R [ Q.A = r.A and ] }");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.code() == "E_PARSE");
    CHECK(e.span().column == 39);
  }
}

TEST_CASE("ancestor definition prints with or") {
  Program p = parse_arc(kAncestor);
  REQUIRE(p.definitions.size() == 1);
  CHECK(print_arc(p).find(" or ") != std::string::npos);
  check_round_trip(p);
}

TEST_CASE("true sentence") {
  Program p = parse_arc("true");
  CHECK(p.is_sentence());
  CHECK(print_arc(p) == "true\n");
}

TEST_CASE("keywords are case-insensitive, identifiers are not") {
  Program a = parse_arc("{ Q(A) | EXISTS r IN R [ Q.A = r.A AND r.B IS NOT NULL ] }");
  Program b = parse_arc("{ Q(A) | exists r in R [ Q.A = r.A and r.B is not null ] }");
  CHECK(structurally_equal(a, b));
  Program c = parse_arc("{ Q(A) | exists r in r2 [ Q.A = r.A ] }");
  CHECK_FALSE(structurally_equal(b, c));
}

TEST_CASE("lateral collections, joins, literals and externals round trip") {
  const char* texts[] = {
      "{ Q(A,B) | exists x in X, z in { Z(B) | exists y in Y [ Z.B = y.A and x.A < y.A ] } "
      "[ Q.A = x.A and Q.B = z.B ] }",
      "{ Q(m,n) | exists r in R, s in S, left(r, inner(lit 11 as v, s)) "
      "[ Q.m = r.m and Q.n = s.n and r.y = s.y and r.h = v.val ] }",
      "{ Q(A) | exists r in R, s in S, f in ext Minus [ Q.A = r.A and f.left = r.B and f.right = s.B ] }",
      "{ C(row,col,val) | exists a in A, b in B, f in ext \"*\", group(a.row, b.col) "
      "[ C.row = a.row and C.col = b.col and a.col = b.row and f.\"$1\" = a.val and "
      "f.$2 = b.val and C.val = sum(f.out) ] }",
      "not exists r in R [ exists s in S, group() [ r.id = s.id and r.q > count(s.d) ] ]",
      "{ Q(A) | exists r in R [ Q.A = r.A and not (exists s in S [ s.A = r.A or s.A is null or r.A is null ]) ] }",
      "{ Q(x) | exists r in R [ Q.x = (r.a + 2) * -3 - r.b / (r.c - r.d) and (r.e = 'it''s' or r.f <> 2.50) ] }",
      "abstract def Subset := { Subset(left,right) | not exists l3 in L [ l3.d = Subset.left and "
      "not exists l4 in L [ l4.b = l3.b and l4.d = Subset.right ] ] }\n"
      "{ Q(d) | exists l in L [ Q.d = l.d ] }",
  };
  for (const char* t : texts) {
    CAPTURE(t);
    check_round_trip(parse_arc(t));
  }
}

TEST_CASE("not exists parses as a negative quantifier, not (...) as negation") {
  Program a = parse_arc("not exists r in R [ true ]");
  CHECK(std::get<Formula::Quantified>(a.main_formula()->node).polarity == Polarity::NotExists);
  Program b = parse_arc("not (exists r in R [ true ])");
  CHECK(std::holds_alternative<Formula::Not>(b.main_formula()->node));
}

TEST_CASE("invariant violations surface as parse errors") {
  CHECK_THROWS_AS(parse_arc("{ Q(A,A) | true }"), ParseError);
  CHECK_THROWS_AS(parse_arc("{ Q(A) | exists r in R [ Q.A = sum(count(r.B)) ] }"), ParseError);
  CHECK_THROWS_AS(parse_arc("{ Q(A) | exists r in R, left(r, s) [ Q.A = r.A ] }"), ParseError);
}

TEST_CASE("spans use code points") {
  Program p = parse_arc("-- é comment\n{ Q(A) | exists r in R [ Q.A = 'é' ] }");
  const auto& c = *p.main_collection();
  CHECK(c.span.line == 1);
  CHECK(c.span.column == 0);
  CHECK(c.span.start == 13);
}

TEST_CASE("parsed programs survive the JSON round trip") {
  Program p = parse_arc(kAncestor);
  CHECK(structurally_equal(p, deserialize_alt(serialize_alt(p))));
}
