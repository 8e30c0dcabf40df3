#include <doctest.h>

#include <fstream>
#include <sstream>

#include "arc/higraph.hpp"
#include "arc/syntax.hpp"
#include "paper_queries.hpp"

using namespace arc;

namespace {

LinkedProgram link(const std::string& text) {
  auto r = analyze(parse_arc(text), ExternalRegistry::builtin());
  REQUIRE(r.ok());
  return std::move(*r.linked);
}

std::string golden(const std::string& name) {
  std::ifstream in(std::string(ARC_SOURCE_DIR) + "/tests/golden/" + name);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const HigraphNode* find_node(const HigraphDoc& d, const std::string& id) {
  for (const auto& n : d.nodes)
    if (n.id == id) return &n;
  return nullptr;
}

std::size_t count_atoms(const FormulaPtr& f);

std::size_t count_atoms(const CollectionExpr& c) { return count_atoms(c.body); }

std::size_t count_atoms(const FormulaPtr& f) {
  return std::visit(
      [&](const auto& n) -> std::size_t {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Formula::Quantified>) {
          std::size_t k = count_atoms(n.body);
          for (const auto& b : n.bindings)
            if (auto* ne = std::get_if<Binding::Nested>(&b.source)) k += count_atoms(*ne->collection);
          return k;
        } else if constexpr (std::is_same_v<N, Formula::And> || std::is_same_v<N, Formula::Or>) {
          std::size_t k = 0;
          for (const auto& c : n.children) k += count_atoms(c);
          return k;
        } else if constexpr (std::is_same_v<N, Formula::Not>) {
          return count_atoms(n.child);
        } else if constexpr (std::is_same_v<N, Formula::Atom>) {
          return 1;
        } else {
          return 0;
        }
      },
      f->node);
}

const char* kSimpleJoin = "{ Q(A) | exists r in R, s in S [ Q.A = r.A and r.B = s.B and s.C = 0 ] }";

const char* kUniqueSetCollapsed =
    "abstract def S := { S(left, right) | not (exists l3 in L [ l3.d = S.left and "
    "not (exists l4 in L [ l4.b = l3.b and l4.d = S.right ]) ]) }\n"
    "{ Q(d) | exists l1 in L [ Q.d = l1.d and not (exists l2 in L, s1 in S, s2 in S [ l2.d <> l1.d and "
    "s1.left = l1.d and s1.right = l2.d and s2.left = l2.d and s2.right = l1.d ]) ] }";

}  // namespace

TEST_CASE("simple join diagram") {
  HigraphDoc d = to_higraph(link(kSimpleJoin));
  REQUIRE(d.regions.size() == 3);
  CHECK(d.regions[1].kind == HigraphRegion::Kind::Collection);
  CHECK(d.regions[2].kind == HigraphRegion::Kind::Quantifier);
  REQUIRE(d.edges.size() == 3);
  CHECK(d.edges[0].kind == HigraphEdge::Kind::Assignment);
  CHECK(d.edges[0].from == "r");
  CHECK(d.edges[0].to == "Q");
  CHECK(d.edges[0].to_port == "A");
  CHECK(d.edges[1].from == "r");
  CHECK(d.edges[1].to == "s");
  CHECK(d.edges[2].to_port == "0");
  const HigraphNode* s = find_node(d, "s");
  REQUIRE(s);
  CHECK(s->ports.back().constant);
  std::string dot = to_dot(d);
  CHECK(dot.find("r:B -- s:B") != std::string::npos);
}

TEST_CASE("grouping scope is double bordered with shaded keys") {
  HigraphDoc d = to_higraph(link(paper::kGroupedSum));
  CHECK(d.regions[2].grouping);
  const HigraphNode* r = find_node(d, "r");
  REQUIRE(r);
  CHECK(r->ports[0].name == "A");
  CHECK(r->ports[0].shaded);
  CHECK_FALSE(r->ports[1].shaded);
  CHECK(to_dot(d).find("peripheries=2") != std::string::npos);
}

TEST_CASE("outer join marks the optional side") {
  HigraphDoc d = to_higraph(link(paper::kCountBug3));
  const HigraphNode* s = find_node(d, "s");
  REQUIRE(s);
  CHECK(s->optional);
  CHECK_FALSE(find_node(d, "r2")->optional);
  std::string dot = to_dot(d);
  CHECK(dot.find("peripheries=2") != std::string::npos);
  CHECK(dot.find("odot") != std::string::npos);

  HigraphDoc cross = to_higraph(link("{ Q(A) | exists r in R, s in S, left(r, s) [ Q.A = r.A ] }"));
  CHECK(cross.regions.back().notes.back() == "×");
}

TEST_CASE("regions mirror scopes and edges mirror predicates") {
  for (const char* q : {kSimpleJoin, paper::kGroupedSum, paper::kGroupedSumFoi, paper::kHella, paper::kHellaKlug,
                        paper::kNotInNulls, paper::kCountBug1, paper::kCountBug2, paper::kCountBug3}) {
    LinkedProgram lp = link(q);
    HigraphDoc d = to_higraph(lp);
    INFO(q);
    CHECK(d.regions.size() == lp.scopes.size());
    CHECK(d.edges.size() == count_atoms(*lp.program->main_collection()));
    std::string dot = to_dot(d);
    std::size_t clusters = 0;
    for (std::size_t at = dot.find("subgraph cluster_"); at != std::string::npos;
         at = dot.find("subgraph cluster_", at + 1))
      ++clusters;
    CHECK(clusters == lp.scopes.size());
    for (const auto& e : d.edges) {
      const HigraphNode* from = find_node(d, e.from);
      const HigraphNode* to = find_node(d, e.to);
      REQUIRE(from);
      REQUIRE(to);
      auto has = [](const HigraphNode* n, const std::string& port) {
        for (const auto& p : n->ports)
          if (p.name == port) return true;
        return false;
      };
      CHECK(has(from, e.from_port));
      CHECK(has(to, e.to_port));
    }
  }
}

TEST_CASE("abstract relations collapse into module boxes") {
  LinkedProgram lp = link(kUniqueSetCollapsed);
  HigraphDoc full = to_higraph(lp);
  HigraphDoc folded = to_higraph(lp, HigraphOptions{{"S"}});
  std::size_t modules = 0;
  for (const auto& n : folded.nodes) modules += n.kind == HigraphNode::Kind::Module;
  CHECK(modules == 2);
  for (const auto& r : folded.regions) CHECK(r.path.rfind("def:S", 0) != 0);
  CHECK(folded.regions.size() + 3 == full.regions.size());
  CHECK(expand(folded, "S") == full);
  CHECK(collapse(full, "S") == folded);
  CHECK(to_dot(expand(folded, "S")) == to_dot(full));
}

TEST_CASE("dot output is deterministic and matches the golden files") {
  CHECK(to_dot(to_higraph(link(paper::kCountBug3))) == to_dot(to_higraph(link(paper::kCountBug3))));
  CHECK(to_dot(to_higraph(link(kSimpleJoin))) == golden("simple_join.dot"));
  CHECK(to_dot(to_higraph(link(paper::kGroupedSum))) == golden("grouped_sum.dot"));
  CHECK(to_dot(to_higraph(link(paper::kCountBug3))) == golden("count_bug_left_join.dot"));
  CHECK(to_dot(to_higraph(link("true"))) == golden("true.dot"));
}

TEST_CASE("json document") {
  auto j = to_json(to_higraph(link(paper::kGroupedSum)));
  CHECK(j["regions"].size() == 3);
  CHECK(j["regions"][2]["grouping"] == true);
  CHECK(j["edges"][1]["kind"] == "assignment");
  CHECK(j["edges"][1]["label"] == "sum(r.B)");
  CHECK(j["nodes"][1]["ports"][0]["shaded"] == true);
}
