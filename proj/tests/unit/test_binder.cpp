#include <doctest.h>

#include <algorithm>

#include "arc/binder.hpp"
#include "arc/syntax.hpp"

using namespace arc;

namespace {

BindResult analyze_text(const std::string& text) { return analyze(parse_arc(text), ExternalRegistry::builtin()); }

std::vector<std::string> codes(const std::vector<Diagnostic>& ds) {
  std::vector<std::string> out;
  for (const auto& d : ds)
    if (d.severity == Severity::Error) out.push_back(d.code);
  return out;
}

std::vector<std::string> error_codes(const std::string& text) { return codes(analyze_text(text).diagnostics); }

bool has_code(const std::string& text, const std::string& code) {
  auto cs = error_codes(text);
  return std::find(cs.begin(), cs.end(), code) != cs.end();
}

const LinkTarget* link_of(const LinkedProgram& lp, const std::string& var, const std::string& attr) {
  for (const auto& [term, target] : lp.links) {
    const auto* ref = as_attr(*term);
    if (ref->variable == var && ref->attribute == attr) return &target;
  }
  return nullptr;
}

std::map<std::string, PredicateClass> classes(const LinkedProgram& lp) {
  std::map<std::string, PredicateClass> out;
  for (const auto& [f, c] : lp.predicate_class) out[print_formula(*f)] = c;
  return out;
}

}  // namespace

TEST_CASE("join query links and classes") {
  auto r = analyze_text("{ Q(A) | exists r in R, s in S [ Q.A = r.A and r.B = s.B and s.C = 0 ] }");
  REQUIRE(r.ok());
  const auto& lp = *r.linked;
  CHECK(link_of(lp, "Q", "A")->kind == LinkTarget::Kind::Head);
  CHECK(link_of(lp, "r", "A")->binding->var == "r");
  CHECK(link_of(lp, "s", "C")->binding->var == "s");
  auto cls = classes(lp);
  CHECK(cls.at("Q.A = r.A") == PredicateClass::Assignment);
  CHECK(cls.at("r.B = s.B") == PredicateClass::Comparison);
  CHECK(cls.at("s.C = 0") == PredicateClass::Comparison);
  CHECK(lp.relation_kinds.at("R") == RelationKind::Base);
}

TEST_CASE("lateral reference links to the enclosing binding") {
  auto r = analyze_text(
      "{ Q(A,B) | exists x in X, z in { Z(B) | exists y in Y [ Z.B = y.A and x.A < y.A ] } "
      "[ Q.A = x.A and Q.B = z.B ] }");
  REQUIRE(r.ok());
  const auto& lp = *r.linked;
  const LinkTarget* x = link_of(lp, "x", "A");
  REQUIRE(x);
  CHECK(lp.scope(x->scope).path == "main/q0");
  CHECK(link_of(lp, "Z", "B")->kind == LinkTarget::Kind::Head);
  CHECK(lp.scopes.size() == 5);  // root, main, main/q0, main/q0/z, main/q0/z/q0
}

TEST_CASE("unbound, duplicate and head misuse") {
  CHECK(error_codes("{ Q(A) | exists r in R [ Q.A = t.A ] }") == std::vector<std::string>{"E_UNBOUND_VAR"});
  CHECK(has_code("{ Q(A) | exists r in R, r in S [ Q.A = r.A ] }", "E_DUPLICATE_BINDING"));
  CHECK(has_code("{ Q(A) | exists r in R [ Q.A = r.A and Q.A < 3 ] }", "E_HEAD_IN_BODY"));
  CHECK(has_code("{ Q(A) | exists r in R [ Q.A = r.A and not (Q.A = r.B) ] }", "E_HEAD_IN_BODY"));
  CHECK(has_code("{ Q(A) | exists r in R, x in { X(B) | exists s in S [ X.B = s.B and Q.A = s.A ] } [ Q.A = r.A ] }",
                 "E_HEAD_IN_BODY"));
  CHECK(has_code("{ Q(A) | exists r in R [ Q.B = r.A ] }", "E_UNKNOWN_ATTRIBUTE"));
  CHECK(has_code("{ Q(A) | exists f in ext Nope [ Q.A = f.out ] }", "E_UNKNOWN_EXTERNAL"));
}

TEST_CASE("grouping legality") {
  CHECK(error_codes("{ Q(A,sm) | exists r in R, group(r.A) [ Q.A = r.A and Q.sm = sum(r.B) ] }").empty());
  CHECK(has_code("{ Q(A,sm) | exists r in R, group() [ Q.A = r.A and Q.sm = sum(r.B) ] }",
                 "E_NONKEY_REF_POST_GROUP"));
  CHECK(has_code("{ Q(sm) | exists r in R [ Q.sm = sum(r.B) ] }", "E_AGG_NO_GROUP"));
  CHECK(has_code("{ Q(sm) | exists r in R, group() [ Q.sm = sum(r.B) or r.A = 1 ] }", "E_AGG_NO_GROUP"));
  CHECK(error_codes("{ Q(dept,av) | exists x in { X(dept,av,sm) | exists r in R, s in S, group(r.dept) "
                    "[ X.dept = r.dept and X.av = avg(s.sal) and X.sm = sum(s.sal) and r.empl = s.empl ] } "
                    "[ Q.dept = x.dept and Q.av = x.av and x.sm > 100 ] }")
            .empty());
  auto neg = analyze_text("not exists r in R, group() [ count(r.A) > 2 ]");
  REQUIRE(neg.ok());
  CHECK(neg.diagnostics.size() == 1);
  CHECK(neg.diagnostics[0].code == "W_NEGATED_GROUPING");
}

TEST_CASE("head assignment per branch") {
  const std::string anc =
      "def A := { A(s,t) | exists p in P [ A.s = p.s and A.t = p.t ] or "
      "exists p in P, a2 in A [ A.s = p.s and p.t = a2.s and a2.t = A.t ] }\n"
      "{ Q(s,t) | exists a in A [ Q.s = a.s and Q.t = a.t ] }";
  auto r = analyze_text(anc);
  REQUIRE(r.ok());
  CHECK(r.linked->recursive_defs == std::set<std::string>{"A"});
  auto broken = analyze_text(
      "def A := { A(s,t) | exists p in P [ A.s = p.s and A.t = p.t ] or "
      "exists p in P, a2 in A [ A.s = p.s and p.t = a2.s ] }\n"
      "{ Q(s,t) | exists a in A [ Q.s = a.s and Q.t = a.t ] }");
  REQUIRE(codes(broken.diagnostics) == std::vector<std::string>{"E_HEAD_UNASSIGNED"});
  CHECK(broken.diagnostics[0].message.find("A.t") != std::string::npos);
  CHECK(broken.diagnostics[0].message.find("branch 2") != std::string::npos);
  CHECK(error_codes("{ Q(A,B) | exists r in R [ Q.A = r.A ] }") == std::vector<std::string>{"E_HEAD_UNASSIGNED"});
  // Q.A = s.A and Q.B = s.B each assign on one branch and repeat on the other
  CHECK(error_codes("{ Q(A,B) | exists r in R, s in S [ (Q.A = r.A or Q.B = r.B) and Q.A = s.A and Q.B = s.B ] }") ==
        std::vector<std::string>{"E_HEAD_MULTIASSIGNED", "E_HEAD_MULTIASSIGNED"});
}

TEST_CASE("designated assignment is the first equality") {
  auto r = analyze_text("{ Q(A) | exists r in R, s in S [ Q.A = r.A and Q.A = s.A ] }");
  REQUIRE(r.ok());
  auto cls = classes(*r.linked);
  CHECK(cls.at("Q.A = r.A") == PredicateClass::Assignment);
  CHECK(cls.at("Q.A = s.A") == PredicateClass::Comparison);
}

TEST_CASE("recursion stratification") {
  CHECK(has_code("def A := { A(s) | exists p in P [ A.s = p.s and not exists a in A [ a.s = p.s ] ] }\n"
                 "{ Q(s) | exists a in A [ Q.s = a.s ] }",
                 "E_UNSTRATIFIED"));
  CHECK(has_code("def A := { A(s,t) | exists p in P [ A.s = p.s and A.t = p.t ] or "
                 "exists a in A, group(a.s) [ A.s = a.s and A.t = sum(a.t) ] }\n"
                 "{ Q(s) | exists a in A [ Q.s = a.s ] }",
                 "E_UNSTRATIFIED"));
  CHECK(has_code("{ Q(s) | exists p in P [ Q.s = p.s ] or exists p in P [ Q.s = p.t and not exists q in Q [ q.s = p.s ] ] }",
                 "E_UNSTRATIFIED"));
}

TEST_CASE("access planning for external relations") {
  auto r = analyze_text(
      "{ Q(A) | exists r in R, s in S, t in T, f in ext Minus "
      "[ Q.A = r.A and f.left = r.B and f.right = s.B and f.out > t.B ] }");
  REQUIRE(r.ok());
  auto plan = plan_access(*r.linked);
  REQUIRE(std::holds_alternative<EvaluationOrder>(plan));
  const auto& steps = std::get<EvaluationOrder>(plan).steps.begin()->second;
  REQUIRE(steps.size() == 4);
  CHECK(steps[3].binding->var == "f");
  CHECK(steps[3].pattern == "bbf");

  auto chain = analyze_text(
      "{ Q(A) | exists r in R, s in S, t in T, g in ext Bigger, f in ext Minus "
      "[ Q.A = r.A and f.left = r.B and f.right = s.B and f.out = g.left and g.right = t.B ] }");
  REQUIRE(chain.ok());
  auto plan2 = plan_access(*chain.linked);
  REQUIRE(std::holds_alternative<EvaluationOrder>(plan2));
  const auto& steps2 = std::get<EvaluationOrder>(plan2).steps.begin()->second;
  CHECK(steps2[3].binding->var == "f");
  CHECK(steps2[3].pattern == "bbf");
  CHECK(steps2[4].binding->var == "g");
  CHECK(steps2[4].pattern == "bb");

  auto unsafe = analyze_text("{ Q(A) | exists f in ext Minus [ Q.A = f.out ] }");
  REQUIRE(unsafe.ok());
  auto plan3 = plan_access(*unsafe.linked);
  REQUIRE(std::holds_alternative<std::vector<Diagnostic>>(plan3));
  CHECK(std::get<std::vector<Diagnostic>>(plan3)[0].code == "E_UNSAFE_EXTERNAL");
}

TEST_CASE("join conditions attach to the lowest spanning node") {
  auto r = analyze_text(
      "{ Q(m,n) | exists r in R, s in S, left(r, inner(lit 11 as v, s)) "
      "[ Q.m = r.m and Q.n = s.n and r.y = s.y and r.h = v.val and s.n = v.val and r.m = 'x' ] }");
  REQUIRE(r.ok());
  std::map<std::string, JoinTree::Kind> at;
  for (const auto& [f, node] : r.linked->join_condition_assignment) at[print_formula(*f)] = node->kind;
  CHECK(at.at("r.y = s.y") == JoinTree::Kind::Left);
  CHECK(at.at("r.h = v.val") == JoinTree::Kind::Left);
  CHECK(at.at("s.n = v.val") == JoinTree::Kind::Inner);
  CHECK(at.at("r.m = 'x'") == JoinTree::Kind::Leaf);
  CHECK_FALSE(at.count("Q.m = r.m"));
}
