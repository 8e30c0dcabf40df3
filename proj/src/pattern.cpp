#include "arc/pattern.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <set>

#include "arc/syntax.hpp"

namespace arc {

namespace {

// How a source-level variable appears in canonical text.
struct Renamed {
  std::string var;
  std::map<std::string, std::string> attrs;  // attribute renaming (nested heads)
};

using Env = std::map<std::string, Renamed>;

constexpr std::size_t kMaxCandidates = 256;

TermPtr rename(const TermPtr& t, const Env& env) {
  return std::visit(
      [&](const auto& n) -> TermPtr {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Term::Attr>) {
          auto it = env.find(n.ref.variable);
          if (it == env.end()) return t;
          auto a = it->second.attrs.find(n.ref.attribute);
          return make_attr(it->second.var, a == it->second.attrs.end() ? n.ref.attribute : a->second);
        } else if constexpr (std::is_same_v<N, Term::Arith>) {
          return make_arith(n.op, rename(n.left, env), rename(n.right, env));
        } else if constexpr (std::is_same_v<N, Term::Aggregate>) {
          return make_aggregate(n.fn, rename(n.arg, env));
        } else {
          return make_constant(n.value);
        }
      },
      t->node);
}

FormulaPtr oriented(CompareOp op, TermPtr l, TermPtr r) {
  if (op == CompareOp::Gt || op == CompareOp::Ge) {
    std::swap(l, r);
    op = flip(op);
  }
  if ((op == CompareOp::Eq || op == CompareOp::Ne) && print_term(*r) < print_term(*l)) std::swap(l, r);
  return make_compare(op, std::move(l), std::move(r));
}

FormulaPtr rename_atom(const Formula::Atom& a, const Env& env) {
  if (auto* c = std::get_if<Predicate::Compare>(&a.pred.node))
    return oriented(c->op, rename(c->left, env), rename(c->right, env));
  const auto& n = std::get<Predicate::IsNull>(a.pred.node);
  return make_is_null(rename(n.term, env), n.negated);
}

std::string text(const FormulaPtr& f) { return print_formula(*f); }

FormulaPtr sorted_nary(bool conj, std::vector<FormulaPtr> parts) {
  std::vector<FormulaPtr> flat;
  for (auto& p : parts) {
    if (conj && std::holds_alternative<Formula::And>(p->node)) {
      for (const auto& c : std::get<Formula::And>(p->node).children) flat.push_back(c);
    } else if (!conj && std::holds_alternative<Formula::Or>(p->node)) {
      for (const auto& c : std::get<Formula::Or>(p->node).children) flat.push_back(c);
    } else if (conj && std::holds_alternative<Formula::True>(p->node)) {
      continue;
    } else {
      flat.push_back(p);
    }
  }
  std::vector<std::pair<std::string, FormulaPtr>> keyed;
  for (auto& f : flat) keyed.emplace_back(text(f), f);
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<FormulaPtr> out;
  for (auto& [k, f] : keyed) out.push_back(f);
  if (out.empty()) return make_true();
  if (out.size() == 1) return out[0];
  return conj ? make_and(std::move(out)) : make_or(std::move(out));
}

bool has_aggregate_atom(const FormulaPtr& f) {
  bool found = false;
  std::function<void(const FormulaPtr&)> walk = [&](const FormulaPtr& g) {
    std::visit(
        [&](const auto& n) {
          using N = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<N, Formula::And> || std::is_same_v<N, Formula::Or>) {
            for (const auto& c : n.children) walk(c);
          } else if constexpr (std::is_same_v<N, Formula::Not>) {
            walk(n.child);
          } else if constexpr (std::is_same_v<N, Formula::Atom>) {
            found = found || contains_aggregate(n.pred);
          }
        },
        g->node);
  };
  walk(f);
  return found;
}

// Flattens nested inner annotations and sorts the children of symmetric nodes.
JoinTreePtr canon_joins(const JoinTreePtr& j, const Env& env) {
  switch (j->kind) {
    case JoinTree::Kind::Leaf: {
      auto it = env.find(j->var);
      return make_leaf(it == env.end() ? j->var : it->second.var);
    }
    case JoinTree::Kind::Literal: {
      auto it = env.find(j->var);
      return make_literal_leaf(j->literal, it == env.end() ? j->var : it->second.var);
    }
    default: break;
  }
  std::vector<JoinTreePtr> children;
  for (const auto& c : j->children) {
    JoinTreePtr cc = canon_joins(c, env);
    if (j->kind == JoinTree::Kind::Inner && cc->kind == JoinTree::Kind::Inner) {
      children.insert(children.end(), cc->children.begin(), cc->children.end());
    } else {
      children.push_back(cc);
    }
  }
  if (j->kind != JoinTree::Kind::Left)
    std::stable_sort(children.begin(), children.end(),
                     [](const JoinTreePtr& a, const JoinTreePtr& b) { return print_join_tree(*a) < print_join_tree(*b); });
  return make_join(j->kind, std::move(children));
}

class Canonicalizer {
 public:
  CollectionPtr collection(const CollectionExpr& c, const Env& env, int depth, bool anonymize,
                           std::map<std::string, std::string>* attr_map) {
    if (!anonymize) {
      Env inner = env;
      inner[c.head.relation] = Renamed{c.head.relation, {}};
      FormulaPtr body = formula(c.body, inner, depth, &c, c.head.relation);
      return make_collection(c.head, body);
    }
    // order attributes by the canonical text of the atoms that mention them
    Env probe = env;
    probe[c.head.relation] = Renamed{"C", {}};
    std::vector<std::string> keys(c.head.attributes.size());
    for (std::size_t i = 0; i < c.head.attributes.size(); ++i) {
      Env marked = probe;
      marked[c.head.relation] = Renamed{"C", {}};
      for (std::size_t j = 0; j < c.head.attributes.size(); ++j)
        marked[c.head.relation].attrs[c.head.attributes[j]] = j == i ? "#" : "?";
      keys[i] = print_formula(*formula(c.body, marked, depth, &c, "C"));
    }
    std::vector<std::size_t> order(keys.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
    std::map<std::string, std::string> amap;
    std::vector<std::string> attrs;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      amap[c.head.attributes[order[rank]]] = "a" + std::to_string(rank + 1);
      attrs.push_back("a" + std::to_string(rank + 1));
    }
    Env inner = env;
    inner[c.head.relation] = Renamed{"C", amap};
    FormulaPtr body = formula(c.body, inner, depth, &c, "C");
    if (attr_map) *attr_map = amap;
    return make_collection(HeadSpec{"C", attrs, {}}, body);
  }

  FormulaPtr formula(const FormulaPtr& f, const Env& env, int depth, const CollectionExpr* coll,
                     const std::string& head, bool collection_top = true) {
    return std::visit(
        [&](const auto& n) -> FormulaPtr {
          using N = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<N, Formula::Quantified>) {
            return quantified(n, env, depth, coll, head, collection_top);
          } else if constexpr (std::is_same_v<N, Formula::And> || std::is_same_v<N, Formula::Or>) {
            std::vector<FormulaPtr> parts;
            for (const auto& c : n.children) parts.push_back(formula(c, env, depth, coll, head, collection_top));
            return sorted_nary(std::is_same_v<N, Formula::And>, std::move(parts));
          } else if constexpr (std::is_same_v<N, Formula::Not>) {
            FormulaPtr c = formula(n.child, env, depth, coll, head, false);
            if (auto* q = std::get_if<Formula::Quantified>(&c->node)) {
              Polarity p = q->polarity == Polarity::Exists ? Polarity::NotExists : Polarity::Exists;
              return make_quantified(p, q->bindings, q->grouping, q->joins, q->body);
            }
            if (auto* inner = std::get_if<Formula::Not>(&c->node)) return inner->child;
            return make_not(c);
          } else if constexpr (std::is_same_v<N, Formula::Atom>) {
            return rename_atom(n, env);
          } else {
            return make_true();
          }
        },
        f->node);
  }

 private:
  struct Slot {
    const Binding* binding = nullptr;
    const JoinTree* literal = nullptr;
    std::string key;
    std::map<std::string, std::string> attrs;  // nested sources: attribute renaming
  };

  FormulaPtr quantified(const Formula::Quantified& q, const Env& env, int depth, const CollectionExpr* coll,
                        const std::string& head, bool collection_top) {
    std::vector<Slot> slots;
    for (const auto& b : q.bindings) slots.push_back(Slot{&b, nullptr, "", {}});
    if (q.joins) {
      std::function<void(const JoinTree&)> lits = [&](const JoinTree& t) {
        if (t.kind == JoinTree::Kind::Literal) slots.push_back(Slot{nullptr, &t, "", {}});
        for (const auto& c : t.children) lits(*c);
      };
      lits(*q.joins);
    }
    auto var_of = [](const Slot& s) { return s.binding ? s.binding->var : s.literal->var; };

    // name-independent keys: siblings appear as "?", the slot itself as "#"
    Env unknown = env;
    for (const auto& s : slots) unknown[var_of(s)] = Renamed{"?", {}};
    for (auto& s : slots) {
      if (!s.binding) continue;
      if (auto* ne = std::get_if<Binding::Nested>(&s.binding->source)) {
        collection(*ne->collection, unknown, depth + 1, true, &s.attrs);
        unknown[s.binding->var].attrs = s.attrs;
      }
    }
    std::vector<FormulaPtr> direct = conjuncts(q.body);
    for (auto& s : slots) {
      Env self = unknown;
      self[var_of(s)].var = "#";
      std::string src;
      if (s.literal) {
        src = "lit " + s.literal->literal.to_literal();
      } else if (auto* nm = std::get_if<Binding::Named>(&s.binding->source)) {
        src = "0 " + nm->name;
      } else if (auto* ex = std::get_if<Binding::External>(&s.binding->source)) {
        src = "1 " + ex->name;
      } else {
        src = "2 " + print_collection(*collection(*std::get<Binding::Nested>(s.binding->source).collection, self,
                                                  depth + 1, true, nullptr));
      }
      std::vector<std::string> preds;
      for (const auto& c : direct) {
        std::string t = print_formula(*formula(c, self, depth + 1, coll, head, false));
        if (t.find('#') != std::string::npos) preds.push_back(t);
      }
      std::sort(preds.begin(), preds.end());
      s.key = src;
      for (const auto& p : preds) s.key += " | " + p;
    }
    std::vector<std::size_t> order(slots.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      // base, external, then nested sources, so lateral references follow their targets; literal leaves last
      bool la = slots[a].literal != nullptr, lb = slots[b].literal != nullptr;
      if (la != lb) return lb;
      return slots[a].key < slots[b].key;
    });

    // candidate orderings: permutations within runs of equal keys
    std::vector<std::vector<std::size_t>> candidates{order};
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j < order.size() && slots[order[j]].key == slots[order[i]].key) ++j;
      if (j - i > 1) {
        std::vector<std::vector<std::size_t>> next;
        for (const auto& cand : candidates) {
          std::vector<std::size_t> run(cand.begin() + static_cast<std::ptrdiff_t>(i),
                                       cand.begin() + static_cast<std::ptrdiff_t>(j));
          std::sort(run.begin(), run.end());
          do {
            if (next.size() >= kMaxCandidates) break;
            auto c = cand;
            std::copy(run.begin(), run.end(), c.begin() + static_cast<std::ptrdiff_t>(i));
            next.push_back(std::move(c));
          } while (std::next_permutation(run.begin(), run.end()));
        }
        candidates = std::move(next);
      }
      i = j;
    }

    FormulaPtr best;
    std::string best_text;
    for (const auto& cand : candidates) {
      FormulaPtr f = render(q, slots, cand, env, depth, coll, head, collection_top);
      std::string t = text(f);
      if (!best || t < best_text) {
        best = f;
        best_text = std::move(t);
      }
    }
    return best;
  }

  FormulaPtr render(const Formula::Quantified& q, const std::vector<Slot>& slots, const std::vector<std::size_t>& order,
                    const Env& env, int depth, const CollectionExpr* coll, const std::string& head,
                    bool collection_top) {
    Env inner = env;
    std::size_t nb = 0, nl = 0;
    for (std::size_t idx : order) {
      const Slot& s = slots[idx];
      if (s.literal) {
        inner[s.literal->var] = Renamed{"l" + std::to_string(depth) + "_" + std::to_string(nl++), {}};
      } else {
        inner[s.binding->var] = Renamed{"v" + std::to_string(depth) + "_" + std::to_string(nb++), s.attrs};
      }
    }
    std::vector<Binding> bindings;
    for (std::size_t idx : order) {
      const Slot& s = slots[idx];
      if (!s.binding) continue;
      Binding b;
      b.var = inner[s.binding->var].var;
      if (auto* ne = std::get_if<Binding::Nested>(&s.binding->source)) {
        b.source = Binding::Nested{collection(*ne->collection, inner, depth + 1, true, nullptr)};
      } else {
        b.source = s.binding->source;
      }
      bindings.push_back(std::move(b));
    }
    FormulaPtr body = formula(q.body, inner, depth + 1, coll, head, false);

    std::optional<GroupingOp> grouping;
    if (q.grouping) {
      std::vector<std::pair<std::string, TermPtr>> keys;
      for (const auto& k : q.grouping->keys) {
        TermPtr t = rename(k, inner);
        keys.emplace_back(print_term(*t), t);
      }
      std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      keys.erase(std::unique(keys.begin(), keys.end(), [](const auto& a, const auto& b) { return a.first == b.first; }),
                 keys.end());
      grouping.emplace();
      for (auto& [t, k] : keys) grouping->keys.push_back(k);
      if (collection_top && dedup_only(*grouping, body, head)) grouping.reset();
    }
    JoinTreePtr joins;
    if (q.joins) {
      joins = canon_joins(q.joins, inner);
      bool literal = false;
      std::function<void(const JoinTree&)> scan = [&](const JoinTree& t) {
        literal = literal || t.kind == JoinTree::Kind::Literal;
        for (const auto& c : t.children) scan(*c);
      };
      scan(*joins);
      // a pure inner annotation over plain bindings is the default and carries no pattern
      if (!has_outer_join(*joins) && !literal) joins = nullptr;
    }
    return make_quantified(q.polarity, std::move(bindings), std::move(grouping), std::move(joins), body);
  }

  // Grouping whose keys are exactly the terms assigned to the head, with no aggregates: pure deduplication.
  static bool dedup_only(const GroupingOp& g, const FormulaPtr& body, const std::string& head) {
    if (has_aggregate_atom(body)) return false;
    std::set<std::string> assigned;
    for (const auto& c : conjuncts(body)) {
      auto* a = std::get_if<Formula::Atom>(&c->node);
      if (!a) continue;
      auto* cmp = std::get_if<Predicate::Compare>(&a->pred.node);
      if (!cmp || cmp->op != CompareOp::Eq) continue;
      const AttributeRef* l = as_attr(*cmp->left);
      const AttributeRef* r = as_attr(*cmp->right);
      if (l && l->variable == head && !(r && r->variable == head)) assigned.insert(print_term(*cmp->right));
      if (r && r->variable == head && !(l && l->variable == head)) assigned.insert(print_term(*cmp->left));
    }
    std::set<std::string> keys;
    for (const auto& k : g.keys) keys.insert(print_term(*k));
    return keys == assigned;
  }
};

struct ScopeSummary {
  std::string path;
  std::string content;
};

std::string quantifier_summary(const Formula::Quantified& q) {
  std::string s = q.polarity == Polarity::Exists ? "exists " : "not exists ";
  for (std::size_t i = 0; i < q.bindings.size(); ++i) {
    const auto& b = q.bindings[i];
    if (i) s += ", ";
    s += b.var + " in ";
    if (auto* nm = std::get_if<Binding::Named>(&b.source)) s += quote_name(nm->name);
    else if (auto* ex = std::get_if<Binding::External>(&b.source)) s += "ext " + quote_name(ex->name);
    else s += "{...}";
  }
  if (q.grouping) {
    s += ", group(";
    for (std::size_t i = 0; i < q.grouping->keys.size(); ++i) s += (i ? ", " : "") + print_term(*q.grouping->keys[i]);
    s += ")";
  }
  if (q.joins) s += ", " + print_join_tree(*q.joins);
  std::vector<std::string> atoms;
  for (const auto& c : conjuncts(q.body))
    if (!std::holds_alternative<Formula::Quantified>(c->node)) atoms.push_back(print_formula(*c));
  s += " [";
  for (std::size_t i = 0; i < atoms.size(); ++i) s += (i ? " and " : " ") + atoms[i];
  return s + " ]";
}

void summarize(const FormulaPtr& f, const std::string& container, int& counter, std::vector<ScopeSummary>& out);

void summarize_collection(const CollectionExpr& c, const std::string& path, std::vector<ScopeSummary>& out) {
  std::string head = c.head.relation + "(";
  for (std::size_t i = 0; i < c.head.attributes.size(); ++i) head += (i ? ", " : "") + c.head.attributes[i];
  out.push_back({path, head + ")"});
  int counter = 0;
  summarize(c.body, path, counter, out);
}

void summarize(const FormulaPtr& f, const std::string& container, int& counter, std::vector<ScopeSummary>& out) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Formula::Quantified>) {
          std::string path = container + "/q" + std::to_string(counter++);
          out.push_back({path, quantifier_summary(n)});
          for (const auto& b : n.bindings)
            if (auto* ne = std::get_if<Binding::Nested>(&b.source))
              summarize_collection(*ne->collection, path + "/" + b.var, out);
          int inner = 0;
          summarize(n.body, path, inner, out);
        } else if constexpr (std::is_same_v<N, Formula::And> || std::is_same_v<N, Formula::Or>) {
          for (const auto& c : n.children) summarize(c, container, counter, out);
        } else if constexpr (std::is_same_v<N, Formula::Not>) {
          summarize(n.child, container, counter, out);
        }
      },
      f->node);
}

std::vector<ScopeSummary> summaries(const Program& p) {
  std::vector<ScopeSummary> out;
  for (const auto& d : p.definitions) summarize_collection(*d.collection, "def:" + d.name, out);
  if (p.is_sentence()) {
    int counter = 0;
    summarize(p.main_formula(), "main", counter, out);
  } else {
    summarize_collection(*p.main_collection(), "main", out);
  }
  return out;
}

}  // namespace

CanonicalForm canonicalize(const Program& p) {
  Canonicalizer c;
  std::vector<Definition> defs;
  for (const auto& d : p.definitions) {
    Definition nd = d;
    nd.span = {};
    nd.collection = c.collection(*d.collection, {}, 0, false, nullptr);
    defs.push_back(std::move(nd));
  }
  std::sort(defs.begin(), defs.end(), [](const Definition& a, const Definition& b) { return a.name < b.name; });
  std::variant<CollectionPtr, FormulaPtr> main;
  if (p.is_sentence()) {
    main = c.formula(p.main_formula(), {}, 0, nullptr, "", false);
  } else {
    main = c.collection(*p.main_collection(), {}, 0, false, nullptr);
  }
  CanonicalForm out{make_program(std::move(defs), std::move(main)), ""};
  out.text = print_arc(out.program);
  return out;
}

CanonicalForm canonicalize(const LinkedProgram& lp) { return canonicalize(*lp.program); }

bool pattern_equal(const Program& a, const Program& b) { return canonicalize(a).text == canonicalize(b).text; }

bool pattern_equal(const LinkedProgram& a, const LinkedProgram& b) { return pattern_equal(*a.program, *b.program); }

PatternDiff pattern_diff(const Program& a, const Program& b) {
  auto sa = summaries(canonicalize(a).program);
  auto sb = summaries(canonicalize(b).program);
  PatternDiff d;
  std::size_t n = std::max(sa.size(), sb.size());
  for (std::size_t i = 0; i < n; ++i) {
    const ScopeSummary* x = i < sa.size() ? &sa[i] : nullptr;
    const ScopeSummary* y = i < sb.size() ? &sb[i] : nullptr;
    if (x && y && x->path == y->path && x->content == y->content) continue;
    d.equal = false;
    d.path = x ? x->path : y->path;
    d.left = x ? x->content : "";
    d.right = y ? y->content : "";
    return d;
  }
  return d;
}

std::string_view to_string(AggregationPattern p) { return p == AggregationPattern::FIO ? "FIO" : "FOI"; }

std::vector<AggregationClass> classify_aggregation(const LinkedProgram& lp) {
  std::vector<AggregationClass> out;
  for (const Scope& s : lp.scopes) {
    if (s.kind != Scope::Kind::Quantifier) continue;
    const auto& q = std::get<Formula::Quantified>(s.quantifier->node);
    if (!q.grouping) continue;
    AggregationClass c{s.id, s.path, AggregationPattern::FIO};
    int coll_id = lp.enclosing_collection(s.id);
    const Scope* coll = coll_id >= 0 ? &lp.scope(coll_id) : nullptr;
    if (coll && coll->via) {
      auto inside = [&](int scope) {
        for (int x = scope; x >= 0; x = lp.scope(x).parent)
          if (x == coll_id) return true;
        return false;
      };
      // correlation: an equality between a binding inside the collection and one outside it
      for (const auto& [atom, scope] : lp.atom_scope) {
        if (!inside(scope)) continue;
        auto* a = std::get_if<Formula::Atom>(&atom->node);
        auto* cmp = a ? std::get_if<Predicate::Compare>(&a->pred.node) : nullptr;
        if (!cmp || cmp->op != CompareOp::Eq || !as_attr(*cmp->left) || !as_attr(*cmp->right)) continue;
        const LinkTarget& l = lp.link(*cmp->left);
        const LinkTarget& r = lp.link(*cmp->right);
        if (l.kind == LinkTarget::Kind::Head || r.kind == LinkTarget::Kind::Head) continue;
        if (inside(l.scope) != inside(r.scope)) {
          c.pattern = AggregationPattern::FOI;
          break;
        }
      }
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace arc
