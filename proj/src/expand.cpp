#include "arc/expand.hpp"

#include <functional>
#include <map>
#include <set>

namespace arc {

namespace {

struct Rewrite {
  std::map<std::pair<std::string, std::string>, TermPtr> subst;  // (var, attr) -> term
  std::map<std::string, std::string> rename;                     // bound variable -> fresh name
};

std::string renamed(const Rewrite& rw, const std::string& var) {
  auto it = rw.rename.find(var);
  return it == rw.rename.end() ? var : it->second;
}

TermPtr rewrite(const TermPtr& t, const Rewrite& rw) {
  return std::visit(
      [&](const auto& n) -> TermPtr {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Term::Constant>) {
          return t;
        } else if constexpr (std::is_same_v<N, Term::Attr>) {
          auto it = rw.subst.find({n.ref.variable, n.ref.attribute});
          if (it != rw.subst.end()) return it->second;
          if (!rw.rename.count(n.ref.variable)) return t;
          return make_attr(renamed(rw, n.ref.variable), n.ref.attribute, t->span);
        } else if constexpr (std::is_same_v<N, Term::Arith>) {
          return make_arith(n.op, rewrite(n.left, rw), rewrite(n.right, rw), t->span);
        } else {
          return make_aggregate(n.fn, rewrite(n.arg, rw), t->span);
        }
      },
      t->node);
}

FormulaPtr rewrite(const FormulaPtr& f, const Rewrite& rw);

CollectionPtr rewrite(const CollectionPtr& c, const Rewrite& rw) {
  return make_collection(c->head, rewrite(c->body, rw), c->span);
}

JoinTreePtr rewrite(const JoinTreePtr& j, const Rewrite& rw) {
  if (!j) return j;
  switch (j->kind) {
    case JoinTree::Kind::Leaf: return make_leaf(renamed(rw, j->var), j->span);
    case JoinTree::Kind::Literal: return make_literal_leaf(j->literal, renamed(rw, j->var), j->span);
    default: {
      std::vector<JoinTreePtr> children;
      for (const auto& c : j->children) children.push_back(rewrite(c, rw));
      return make_join(j->kind, std::move(children), j->span);
    }
  }
}

FormulaPtr rewrite(const FormulaPtr& f, const Rewrite& rw) {
  return std::visit(
      [&](const auto& n) -> FormulaPtr {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Formula::Quantified>) {
          std::vector<Binding> bindings;
          for (const auto& b : n.bindings) {
            Binding nb = b;
            nb.var = renamed(rw, b.var);
            if (auto* ne = std::get_if<Binding::Nested>(&b.source)) nb.source = Binding::Nested{rewrite(ne->collection, rw)};
            bindings.push_back(std::move(nb));
          }
          std::optional<GroupingOp> grouping;
          if (n.grouping) {
            grouping.emplace();
            for (const auto& k : n.grouping->keys) grouping->keys.push_back(rewrite(k, rw));
          }
          return make_quantified(n.polarity, std::move(bindings), std::move(grouping), rewrite(n.joins, rw),
                                 rewrite(n.body, rw), f->span);
        } else if constexpr (std::is_same_v<N, Formula::And> || std::is_same_v<N, Formula::Or>) {
          std::vector<FormulaPtr> children;
          for (const auto& c : n.children) children.push_back(rewrite(c, rw));
          return std::is_same_v<N, Formula::And> ? make_and(std::move(children), f->span)
                                                 : make_or(std::move(children), f->span);
        } else if constexpr (std::is_same_v<N, Formula::Not>) {
          return make_not(rewrite(n.child, rw), f->span);
        } else if constexpr (std::is_same_v<N, Formula::Atom>) {
          if (auto* c = std::get_if<Predicate::Compare>(&n.pred.node))
            return make_compare(c->op, rewrite(c->left, rw), rewrite(c->right, rw), f->span);
          const auto& in = std::get<Predicate::IsNull>(n.pred.node);
          return make_is_null(rewrite(in.term, rw), in.negated, f->span);
        } else {
          return f;
        }
      },
      f->node);
}

void bound_vars(const FormulaPtr& f, std::set<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Formula::Quantified>) {
          for (const auto& b : n.bindings) {
            out.insert(b.var);
            if (auto* ne = std::get_if<Binding::Nested>(&b.source)) bound_vars(ne->collection->body, out);
          }
          if (n.joins) {
            std::vector<std::string> leaves;
            join_leaf_vars(*n.joins, leaves);
            out.insert(leaves.begin(), leaves.end());
          }
          bound_vars(n.body, out);
        } else if constexpr (std::is_same_v<N, Formula::And> || std::is_same_v<N, Formula::Or>) {
          for (const auto& c : n.children) bound_vars(c, out);
        } else if constexpr (std::is_same_v<N, Formula::Not>) {
          bound_vars(n.child, out);
        }
      },
      f->node);
}

void referenced_names(const FormulaPtr& f, std::set<std::string>& out) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Formula::Quantified>) {
          for (const auto& b : n.bindings) {
            if (auto* nm = std::get_if<Binding::Named>(&b.source)) out.insert(nm->name);
            if (auto* ne = std::get_if<Binding::Nested>(&b.source)) referenced_names(ne->collection->body, out);
          }
          referenced_names(n.body, out);
        } else if constexpr (std::is_same_v<N, Formula::And> || std::is_same_v<N, Formula::Or>) {
          for (const auto& c : n.children) referenced_names(c, out);
        } else if constexpr (std::is_same_v<N, Formula::Not>) {
          referenced_names(n.child, out);
        }
      },
      f->node);
}

bool mentions_var(const TermPtr& t, const std::string& var) {
  std::vector<const Term*> attrs;
  collect_attr_terms(t, attrs);
  for (const Term* a : attrs)
    if (as_attr(*a)->variable == var) return true;
  return false;
}

class Expander {
 public:
  explicit Expander(const Program& p) : program_(p) {
    for (const auto& d : p.definitions) {
      bound_vars(d.collection->body, used_);
      used_.insert(d.name);
    }
    if (p.is_sentence()) {
      bound_vars(p.main_formula(), used_);
    } else {
      bound_vars(p.main_collection()->body, used_);
    }
  }

  FormulaPtr formula(const FormulaPtr& f, int depth = 0) {
    return std::visit(
        [&](const auto& n) -> FormulaPtr {
          using N = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<N, Formula::Quantified>) {
            return quantified(f, n, depth);
          } else if constexpr (std::is_same_v<N, Formula::And> || std::is_same_v<N, Formula::Or>) {
            std::vector<FormulaPtr> children;
            for (const auto& c : n.children) children.push_back(formula(c, depth));
            return std::is_same_v<N, Formula::And> ? make_and(std::move(children), f->span)
                                                   : make_or(std::move(children), f->span);
          } else if constexpr (std::is_same_v<N, Formula::Not>) {
            return make_not(formula(n.child, depth), f->span);
          } else {
            return f;
          }
        },
        f->node);
  }

  CollectionPtr collection(const CollectionPtr& c, int depth = 0) {
    return make_collection(c->head, formula(c->body, depth), c->span);
  }

 private:
  FormulaPtr quantified(const FormulaPtr& f, const Formula::Quantified& q, int depth) {
    std::vector<Binding> bindings;
    for (const auto& b : q.bindings) {
      Binding nb = b;
      if (auto* ne = std::get_if<Binding::Nested>(&b.source)) nb.source = Binding::Nested{collection(ne->collection, depth)};
      bindings.push_back(std::move(nb));
    }
    FormulaPtr body = formula(q.body, depth);

    // inlining needs the plain conjunctive shape: no grouping, no join annotation
    if (!q.grouping && !q.joins && depth < kMaxDepth) {
      for (std::size_t i = 0; i < bindings.size();) {
        auto inlined = try_inline(bindings[i], body, depth);
        if (!inlined) {
          ++i;
          continue;
        }
        body = *inlined;
        bindings.erase(bindings.begin() + static_cast<std::ptrdiff_t>(i));
      }
      if (bindings.empty()) return q.polarity == Polarity::Exists ? body : make_not(body, f->span);
    }
    return make_quantified(q.polarity, std::move(bindings), q.grouping, q.joins, body, f->span);
  }

  std::optional<FormulaPtr> try_inline(const Binding& b, const FormulaPtr& body, int depth) {
    auto* named = std::get_if<Binding::Named>(&b.source);
    if (!named) return std::nullopt;
    const Definition* def = program_.find_definition(named->name);
    if (!def || !def->abstract) return std::nullopt;

    std::vector<FormulaPtr> parts = conjuncts(body);
    std::set<std::size_t> pinning;
    Rewrite host;
    for (const auto& attr : def->collection->head.attributes) {
      bool found = false;
      for (std::size_t j = 0; j < parts.size() && !found; ++j) {
        if (pinning.count(j)) continue;
        auto* atom = std::get_if<Formula::Atom>(&parts[j]->node);
        if (!atom) continue;
        auto* c = std::get_if<Predicate::Compare>(&atom->pred.node);
        if (!c || c->op != CompareOp::Eq) continue;
        for (int side = 0; side < 2 && !found; ++side) {
          const TermPtr& mine = side == 0 ? c->left : c->right;
          const TermPtr& other = side == 0 ? c->right : c->left;
          const AttributeRef* ref = as_attr(*mine);
          if (!ref || ref->variable != b.var || ref->attribute != attr) continue;
          if (mentions_var(other, b.var) || contains_aggregate(*other)) continue;
          host.subst[{b.var, attr}] = other;
          pinning.insert(j);
          found = true;
        }
      }
      if (!found) return std::nullopt;
    }

    Rewrite inner;
    for (const auto& [key, term] : host.subst) inner.subst[{def->collection->head.relation, key.second}] = term;
    std::set<std::string> vars;
    bound_vars(def->collection->body, vars);
    for (const auto& v : vars) inner.rename[v] = fresh(v);

    std::vector<FormulaPtr> out;
    for (std::size_t j = 0; j < parts.size(); ++j)
      if (!pinning.count(j)) out.push_back(rewrite(parts[j], host));
    out.push_back(formula(rewrite(def->collection->body, inner), depth + 1));
    return conjoin(std::move(out));
  }

  std::string fresh(const std::string& base) {
    for (int k = 1;; ++k) {
      std::string name = base + "_" + std::to_string(k);
      if (used_.insert(name).second) return name;
    }
  }

  static constexpr int kMaxDepth = 64;
  const Program& program_;
  std::set<std::string> used_;
};

}  // namespace

Program expand_abstract(const Program& p) {
  bool any_abstract = false;
  for (const auto& d : p.definitions) any_abstract = any_abstract || d.abstract;
  if (!any_abstract) return p;

  Expander ex(p);
  std::vector<Definition> defs;
  for (const auto& d : p.definitions) {
    Definition nd = d;
    nd.collection = ex.collection(d.collection);
    defs.push_back(std::move(nd));
  }
  std::variant<CollectionPtr, FormulaPtr> main;
  if (p.is_sentence()) {
    main = ex.formula(p.main_formula());
  } else {
    main = ex.collection(p.main_collection());
  }

  std::set<std::string> used;
  for (const auto& d : defs)
    if (!d.abstract) referenced_names(d.collection->body, used);
  referenced_names(p.is_sentence() ? std::get<FormulaPtr>(main) : std::get<CollectionPtr>(main)->body, used);
  // abstract definitions still referenced keep their own references alive
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& d : defs) {
      if (!d.abstract || !used.count(d.name)) continue;
      std::size_t before = used.size();
      referenced_names(d.collection->body, used);
      grew = grew || used.size() != before;
    }
  }
  std::vector<Definition> kept;
  for (auto& d : defs)
    if (!d.abstract || used.count(d.name)) kept.push_back(std::move(d));
  return make_program(std::move(kept), std::move(main));
}

}  // namespace arc
