#include <doctest.h>

#include "arc/binder.hpp"
#include "arc/pattern.hpp"
#include "arc/syntax.hpp"
#include "paper_queries.hpp"

using namespace arc;

namespace {

LinkedProgram link(const std::string& text) {
  auto r = analyze(parse_arc(text), ExternalRegistry::builtin());
  REQUIRE(r.ok());
  return std::move(*r.linked);
}

bool same(const std::string& a, const std::string& b) { return pattern_equal(parse_arc(a), parse_arc(b)); }

const std::vector<const char*> kSamples = {
    paper::kGroupedSum, paper::kGroupedSumFoi, paper::kHella,      paper::kHellaKlug, paper::kHellaRel,
    paper::kNotInNulls, paper::kCountBug1,     paper::kCountBug2,  paper::kCountBug3,
    "exists r in R [ exists s in S, group() [ r.id = s.id and r.q <= count(s.d) ] ]",
    "def A := { A(s, t) | exists p in P [ A.s = p.s and A.t = p.t ] or "
    "exists p in P, a2 in A [ A.s = p.s and p.t = a2.s and a2.t = A.t ] }\n"
    "{ Q(s, t) | exists a in A [ Q.s = a.s and Q.t = a.t ] }",
};

}  // namespace

TEST_CASE("canonicalization is idempotent") {
  for (const char* q : kSamples) {
    CanonicalForm once = canonicalize(parse_arc(q));
    INFO(once.text);
    CHECK(canonicalize(once.program).text == once.text);
    CHECK(canonicalize(parse_arc(once.text)).text == once.text);
  }
}

TEST_CASE("renaming, reordering and orientation do not change the pattern") {
  CHECK(same("{ Q(A) | exists r in R, s in S [ Q.A = r.A and r.B = s.B and s.C = 0 ] }",
             "{ Q(A) | exists t in S, u in R [ 0 = t.C and t.B = u.B and Q.A = u.A ] }"));
  CHECK(same("{ Q(A) | exists r in R [ Q.A = r.A and r.B > 3 ] }", "{ Q(A) | exists r in R [ 3 < r.B and Q.A = r.A ] }"));
  CHECK(same("{ Q(A) | exists r in R [ Q.A = r.A and not (exists s in S [ s.A = r.A ]) ] }",
             "{ Q(A) | exists r in R [ Q.A = r.A and not exists s in S [ s.A = r.A ] ] }"));
  CHECK(same("{ Q(A) | exists r in R [ Q.A = r.A and (r.B = 1 or r.B = 2) ] }",
             "{ Q(A) | exists r in R [ (r.B = 2 or r.B = 1) and Q.A = r.A ] }"));
  // nested head and attribute names are not part of the pattern
  CHECK(same(paper::kGroupedSumFoi,
             "{ Q(A, sm) | exists k in { K(total) | exists t in R, group() [ K.total = sum(t.B) and r.A = t.A ] }, "
             "r in R [ Q.sm = k.total and Q.A = r.A ] }"));
  // dedup-only grouping at the collection top is the set interpretation, not a pattern
  CHECK(same("{ Q(A, B) | exists r in R, group(r.A, r.B) [ Q.A = r.A and Q.B = r.B ] }",
             "{ Q(A, B) | exists r in R [ Q.A = r.A and Q.B = r.B ] }"));
  CHECK(same("{ Q(A) | exists r in R, s in S, t in T, inner(r, inner(s, t)) [ Q.A = r.A ] }",
             "{ Q(A) | exists r in R, s in S, t in T [ Q.A = r.A ] }"));
}

TEST_CASE("distinct patterns stay distinct") {
  CHECK_FALSE(same(paper::kGroupedSum, paper::kGroupedSumFoi));
  CHECK_FALSE(same(paper::kHella, paper::kHellaKlug));
  CHECK_FALSE(same(paper::kHella, paper::kHellaRel));
  CHECK_FALSE(same(paper::kHellaKlug, paper::kHellaRel));
  CHECK_FALSE(same(paper::kCountBug1, paper::kCountBug2));
  CHECK_FALSE(same(paper::kCountBug2, paper::kCountBug3));
  // a grouping key that is not the full head projection still matters
  CHECK_FALSE(same("{ Q(A) | exists r in R, group(r.A, r.B) [ Q.A = r.A ] }", "{ Q(A) | exists r in R [ Q.A = r.A ] }"));
  CHECK_FALSE(same("{ Q(A) | exists r in R, s in S, left(r, s) [ Q.A = r.A and r.B = s.B ] }",
                   "{ Q(A) | exists r in R, s in S, left(s, r) [ Q.A = r.A and r.B = s.B ] }"));
  CHECK_FALSE(same("{ Q(A) | exists r in R [ Q.A = r.A and r.B < 3 ] }", "{ Q(A) | exists r in R [ Q.A = r.A and r.B <= 3 ] }"));
}

TEST_CASE("pattern equality is an equivalence on the samples") {
  std::vector<std::string> canon;
  for (const char* q : kSamples) canon.push_back(canonicalize(parse_arc(q)).text);
  for (std::size_t i = 0; i < kSamples.size(); ++i) {
    CHECK(same(kSamples[i], kSamples[i]));
    for (std::size_t j = 0; j < kSamples.size(); ++j) {
      CHECK(same(kSamples[i], kSamples[j]) == same(kSamples[j], kSamples[i]));
      CHECK(same(kSamples[i], kSamples[j]) == (canon[i] == canon[j]));
    }
  }
}

TEST_CASE("diff reports the first divergent scope") {
  PatternDiff eq = pattern_diff(parse_arc(paper::kGroupedSum), parse_arc(paper::kGroupedSum));
  CHECK(eq.equal);
  PatternDiff d = pattern_diff(parse_arc(paper::kGroupedSum), parse_arc(paper::kGroupedSumFoi));
  CHECK_FALSE(d.equal);
  CHECK(d.path == "main/q0");
  CHECK(d.left.find("group(v0_0.A)") != std::string::npos);
  CHECK(d.right.find("{...}") != std::string::npos);

  PatternDiff deeper = pattern_diff(parse_arc(paper::kCountBug2), parse_arc(paper::kCountBug3));
  CHECK_FALSE(deeper.equal);
  CHECK(deeper.path == "main/q0/v0_1/q0");
  CHECK(deeper.right.find("left(") != std::string::npos);
  PatternDiff inner =
      pattern_diff(parse_arc("{ Q(A) | exists r in R [ Q.A = r.A and exists s in S [ s.B = r.B ] ] }"),
                   parse_arc("{ Q(A) | exists r in R [ Q.A = r.A and exists s in S [ s.B < r.B ] ] }"));
  CHECK(inner.path == "main/q0/q0");
}

TEST_CASE("aggregation patterns are classified") {
  auto fio = classify_aggregation(link(paper::kGroupedSum));
  REQUIRE(fio.size() == 1);
  CHECK(fio[0].pattern == AggregationPattern::FIO);
  CHECK(fio[0].path == "main/q0");

  auto foi = classify_aggregation(link(paper::kGroupedSumFoi));
  REQUIRE(foi.size() == 1);
  CHECK(foi[0].pattern == AggregationPattern::FOI);
  CHECK(foi[0].path == "main/q0/x/q0");

  auto klug = classify_aggregation(link(paper::kHellaKlug));
  REQUIRE(klug.size() == 2);
  CHECK(klug[0].pattern == AggregationPattern::FOI);
  CHECK(klug[1].pattern == AggregationPattern::FOI);

  // grouped collections joined outside are produced inside out
  for (const auto& c : classify_aggregation(link(paper::kHellaRel))) CHECK(c.pattern == AggregationPattern::FIO);
  for (const auto& c : classify_aggregation(link(paper::kCountBug2))) CHECK(c.pattern == AggregationPattern::FIO);
  CHECK(to_string(AggregationPattern::FOI) == "FOI");
}
