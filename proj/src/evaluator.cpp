#include "arc/evaluator.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "arc/error.hpp"
#include "arc/expand.hpp"
#include "arc/value_ops.hpp"

namespace arc {

Environment extend(const Environment& env, const void* key, const std::vector<std::string>* schema, Tuple values) {
  auto frame = std::make_shared<EnvFrame>();
  frame->key = key;
  frame->schema = schema;
  frame->values = std::move(values);
  frame->next = env;
  return frame;
}

const EnvFrame* lookup(const Environment& env, const void* key) {
  for (const EnvFrame* f = env.get(); f; f = f->next.get())
    if (f->key == key) return f;
  return nullptr;
}

Value eval_aggregate(AggFn fn, const std::vector<Value>& values, const Conventions& conv) {
  std::vector<const Value*> present;
  for (const auto& v : values)
    if (!v.is_null()) present.push_back(&v);
  if (present.empty()) return empty_aggregate_value(fn, conv);

  switch (fn) {
    case AggFn::Count: return Value::integer(static_cast<std::int64_t>(present.size()));
    case AggFn::CountDistinct: {
      std::set<Value> distinct;
      for (const Value* v : present) distinct.insert(*v);
      return Value::integer(static_cast<std::int64_t>(distinct.size()));
    }
    case AggFn::Sum:
    case AggFn::Avg: {
      bool all_int = true;
      Rational total = 0;
      BigInt int_total = 0;
      for (const Value* v : present) {
        if (!v->is_numeric())
          throw EvalError("E_TYPE", std::string(to_string(fn)) + " over non-numeric value " + v->to_literal());
        if (v->tag() == ValueTag::Int) {
          int_total += v->as_int();
        } else {
          all_int = false;
        }
        total += v->as_rational();
      }
      if (fn == AggFn::Avg) return Value::decimal(Rational(total / static_cast<std::int64_t>(present.size())));
      return all_int ? Value::integer(int_total) : Value::decimal(total);
    }
    case AggFn::Min:
    case AggFn::Max: {
      const Value* best = present[0];
      for (const Value* v : present) {
        bool better = compare_values(fn == AggFn::Min ? CompareOp::Lt : CompareOp::Gt, *v, *best);
        if (better) best = v;
      }
      return *best;
    }
  }
  return Value::null();
}

namespace {

using Partial = std::vector<std::optional<Value>>;
using Partials = std::vector<Partial>;

const std::vector<std::string> kLiteralSchema{"val"};

struct Group {
  std::vector<Environment> envs;
};

struct Ctx {
  const CollectionExpr* coll = nullptr;
  const Group* group = nullptr;
  bool top = false;
};

struct QuantPlan {
  const Formula* formula = nullptr;
  const Formula::Quantified* q = nullptr;
  bool tree = false;
  std::vector<AccessStep> steps;
  std::vector<const JoinTree*> literals;
  std::vector<std::vector<const Formula*>> pushed;  // by number of placed bindings
  std::map<const JoinTree*, std::vector<const Formula*>> node_conditions;
  FormulaPtr residual;  // non-grouping scopes
  FormulaPtr pre;       // grouping scopes: per-environment filter
  FormulaPtr post;      // grouping scopes: per-group part
  bool assigns = false;
  std::map<std::string, const Binding*> binding_of;
};

void walk_named_bindings(const FormulaPtr& f, const std::function<void(const Binding&)>& fn) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Formula::Quantified>) {
          for (const auto& b : n.bindings) {
            if (std::holds_alternative<Binding::Named>(b.source)) fn(b);
            if (auto* ne = std::get_if<Binding::Nested>(&b.source)) walk_named_bindings(ne->collection->body, fn);
          }
          walk_named_bindings(n.body, fn);
        } else if constexpr (std::is_same_v<N, Formula::And> || std::is_same_v<N, Formula::Or>) {
          for (const auto& c : n.children) walk_named_bindings(c, fn);
        } else if constexpr (std::is_same_v<N, Formula::Not>) {
          walk_named_bindings(n.child, fn);
        }
      },
      f->node);
}

void for_each_atom(const FormulaPtr& f, const std::function<void(const Formula&)>& fn) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Formula::Quantified>) {
          for_each_atom(n.body, fn);
        } else if constexpr (std::is_same_v<N, Formula::And> || std::is_same_v<N, Formula::Or>) {
          for (const auto& c : n.children) for_each_atom(c, fn);
        } else if constexpr (std::is_same_v<N, Formula::Not>) {
          for_each_atom(n.child, fn);
        } else if constexpr (std::is_same_v<N, Formula::Atom>) {
          fn(*f);
        }
      },
      f->node);
}

void atom_attrs(const Formula& atom, std::vector<const Term*>& out) {
  const auto& pred = std::get<Formula::Atom>(atom.node).pred;
  if (auto* c = std::get_if<Predicate::Compare>(&pred.node)) {
    collect_attr_terms(c->left, out);
    collect_attr_terms(c->right, out);
  } else {
    collect_attr_terms(std::get<Predicate::IsNull>(pred.node).term, out);
  }
}

void join_leaves(const JoinTree& t, std::vector<const JoinTree*>& out) {
  if (t.kind == JoinTree::Kind::Leaf || t.kind == JoinTree::Kind::Literal) out.push_back(&t);
  for (const auto& c : t.children) join_leaves(*c, out);
}

}  // namespace

struct Evaluator::Impl {
  const LinkedProgram& lp;
  const Database& db;
  Conventions conv;
  EvaluationOrder order;

  std::map<std::string, Relation> base_cache;
  std::map<std::string, Relation> intensional;
  std::set<std::string> in_progress;
  std::map<const Binding*, const Relation*> overrides;
  std::map<const CollectionExpr*, Relation> uncorrelated_cache;
  std::set<const CollectionExpr*> correlated;
  std::map<const Formula*, QuantPlan> plans;
  std::unordered_map<const Term*, std::size_t> attr_index;
  std::map<std::string, std::set<std::string>> deps;  // intensional dependency graph
  std::string main_pseudo;                            // self-recursive main head

  Impl(const LinkedProgram& l, const Database& d, const Conventions& c) : lp(l), db(d), conv(c) {
    validate(conv);
    auto planned = plan_access(lp);
    if (auto* diags = std::get_if<std::vector<Diagnostic>>(&planned)) {
      const Diagnostic& first = diags->front();
      throw EvalError(first.code, first.message, first.span);
    }
    order = std::get<EvaluationOrder>(std::move(planned));

    const Program& p = *lp.program;
    for (const auto& def : p.definitions) {
      if (def.abstract) continue;
      auto& out = deps[def.name];
      walk_named_bindings(def.collection->body, [&](const Binding& b) {
        const auto& name = std::get<Binding::Named>(b.source).name;
        if (is_intensional(name)) out.insert(name);
      });
    }
    if (!p.is_sentence()) {
      const auto& head = p.main_collection()->head.relation;
      if (!p.find_definition(head) && lp.recursive_defs.count(head)) {
        main_pseudo = head;
        auto& out = deps[head];
        walk_named_bindings(p.main_collection()->body, [&](const Binding& b) {
          const auto& name = std::get<Binding::Named>(b.source).name;
          if (is_intensional(name) || name == head) out.insert(name);
        });
      }
    }
  }

  bool is_intensional(const std::string& name) const {
    auto it = lp.relation_kinds.find(name);
    return it != lp.relation_kinds.end() && it->second == RelationKind::Intensional;
  }

  const CollectionExpr* collection_of(const std::string& name) const {
    if (const Definition* d = lp.program->find_definition(name)) return d->collection.get();
    if (name == main_pseudo) return lp.program->main_collection().get();
    return nullptr;
  }

  // ---- relations ---------------------------------------------------------

  const Relation& base(const std::string& name) {
    const Relation* r = db.find(name);
    if (!r) throw EvalError("E_UNKNOWN_RELATION", "relation " + name + " is not in the database");
    if (conv.semantics == CollectionSemantics::Bag) return *r;
    auto it = base_cache.find(name);
    if (it != base_cache.end()) return it->second;
    Relation copy = *r;
    copy.deduplicate();
    return base_cache.emplace(name, std::move(copy)).first->second;
  }

  std::set<std::string> stratum_of(const std::string& name) const {
    // nodes reachable from `name` that also reach it
    auto reach = [&](const std::string& from) {
      std::set<std::string> seen;
      std::vector<std::string> todo{from};
      while (!todo.empty()) {
        std::string v = todo.back();
        todo.pop_back();
        auto it = deps.find(v);
        if (it == deps.end()) continue;
        for (const auto& w : it->second)
          if (seen.insert(w).second) todo.push_back(w);
      }
      return seen;
    };
    std::set<std::string> out{name};
    for (const auto& v : reach(name))
      if (reach(v).count(name)) out.insert(v);
    return out;
  }

  const Relation& definition(const std::string& name) {
    auto it = intensional.find(name);
    if (it != intensional.end()) return it->second;
    if (lp.recursive_defs.count(name)) {
      fixpoint(stratum_of(name));
      return intensional.at(name);
    }
    const CollectionExpr* c = collection_of(name);
    if (!c) throw EvalError("E_UNKNOWN_RELATION", "no definition named " + name);
    if (!in_progress.insert(name).second)
      throw EvalError("E_UNSTRATIFIED", "definition " + name + " depends on itself");
    Relation r = collection(*c, nullptr);
    in_progress.erase(name);
    return intensional.emplace(name, std::move(r)).first->second;
  }

  const Relation& named(const Binding& b) {
    auto o = overrides.find(&b);
    if (o != overrides.end()) return *o->second;
    const auto& name = std::get<Binding::Named>(b.source).name;
    if (is_intensional(name)) return definition(name);
    return base(name);
  }

  const std::vector<std::string>* schema_of(const Binding& b) {
    if (std::holds_alternative<Binding::Named>(b.source)) {
      const auto& name = std::get<Binding::Named>(b.source).name;
      if (const CollectionExpr* c = collection_of(name)) return &c->head.attributes;
      return &base(name).schema;
    }
    if (auto* ne = std::get_if<Binding::Nested>(&b.source)) return &ne->collection->head.attributes;
    return &lp.registry.find(std::get<Binding::External>(b.source).name)->attributes;
  }

  // Rows of a binding's source in environment `env` (stored in `holder` when computed).
  const std::vector<Tuple>& rows_of(const Binding& b, const AccessStep* step, const Environment& env,
                                    std::vector<Tuple>& holder) {
    if (std::holds_alternative<Binding::Named>(b.source)) return named(b).rows;
    if (auto* ne = std::get_if<Binding::Nested>(&b.source)) {
      const CollectionExpr& c = *ne->collection;
      if (!is_correlated(c)) {
        auto it = uncorrelated_cache.find(&c);
        if (it == uncorrelated_cache.end()) it = uncorrelated_cache.emplace(&c, collection(c, env)).first;
        return it->second.rows;
      }
      holder = collection(c, env).rows;
      return holder;
    }
    const ExternalSpec& spec = *lp.registry.find(std::get<Binding::External>(b.source).name);
    std::vector<std::optional<Value>> inputs(spec.attributes.size());
    if (step)
      for (const auto& [pos, term] : step->pinned) inputs[pos] = eval_term(*term, env, nullptr);
    holder = invoke_external(spec, inputs);
    return holder;
  }

  bool is_correlated(const CollectionExpr& c) {
    auto it = correlation.find(&c);
    if (it != correlation.end()) return it->second;
    bool corr = !free_attribute_refs(c).empty() || references_overridden(c);
    correlation[&c] = corr;
    return corr;
  }
  std::map<const CollectionExpr*, bool> correlation;

  // Collections reading a relation that changes during a fixpoint are never cached.
  bool references_overridden(const CollectionExpr& c) {
    bool found = false;
    walk_named_bindings(c.body, [&](const Binding& b) {
      found = found || lp.recursive_defs.count(std::get<Binding::Named>(b.source).name) > 0;
    });
    return found;
  }

  // ---- terms and atoms ---------------------------------------------------

  Value attr_value(const Term& t, const Environment& env) {
    const LinkTarget& target = lp.link(t);
    const void* key = target.kind == LinkTarget::Kind::Literal ? static_cast<const void*>(target.literal)
                                                                : static_cast<const void*>(target.binding);
    if (target.kind == LinkTarget::Kind::Head)
      throw EvalError("E_HEAD_IN_BODY", "head attribute " + as_attr(t)->to_string() + " read as a value", t.span);
    const EnvFrame* f = lookup(env, key);
    if (!f) throw EvalError("E_INTERNAL", "variable " + as_attr(t)->variable + " is not in the environment", t.span);
    auto it = attr_index.find(&t);
    std::size_t idx;
    if (it != attr_index.end() && it->second < f->schema->size() && (*f->schema)[it->second] == as_attr(t)->attribute) {
      idx = it->second;
    } else {
      auto pos = std::find(f->schema->begin(), f->schema->end(), as_attr(t)->attribute);
      if (pos == f->schema->end())
        throw EvalError("E_UNKNOWN_ATTRIBUTE", "no attribute " + as_attr(t)->to_string(), t.span);
      idx = static_cast<std::size_t>(pos - f->schema->begin());
      attr_index[&t] = idx;
    }
    return f->values[idx];
  }

  Value eval_term(const Term& t, const Environment& env, const Group* group) {
    return std::visit(
        [&](const auto& n) -> Value {
          using N = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<N, Term::Constant>) {
            return n.value;
          } else if constexpr (std::is_same_v<N, Term::Attr>) {
            return attr_value(t, env);
          } else if constexpr (std::is_same_v<N, Term::Arith>) {
            Value a = eval_term(*n.left, env, group);
            Value b = eval_term(*n.right, env, group);
            return arith_values(n.op, a, b, conv.division_by_zero == DivisionByZero::Null);
          } else {
            if (!group) throw EvalError("E_AGG_NO_GROUP", "aggregate outside of a grouping scope", t.span);
            std::vector<Value> values;
            values.reserve(group->envs.size());
            for (const auto& e : group->envs) values.push_back(eval_term(*n.arg, e, nullptr));
            return eval_aggregate(n.fn, values, conv);
          }
        },
        t.node);
  }

  std::optional<std::size_t> head_index(const Term& t, const Ctx& ctx) {
    if (!as_attr(t)) return std::nullopt;
    const LinkTarget& target = lp.link(t);
    if (target.kind != LinkTarget::Kind::Head) return std::nullopt;
    (void)ctx;
    return target.head->head.index_of(as_attr(t)->attribute);
  }

  bool atom(const Formula& f, const Environment& env, Partial& partial, const Ctx& ctx) {
    const auto& pred = std::get<Formula::Atom>(f.node).pred;
    if (auto* c = std::get_if<Predicate::Compare>(&pred.node)) {
      if (c->op == CompareOp::Eq) {
        auto li = head_index(*c->left, ctx);
        auto ri = li ? std::nullopt : head_index(*c->right, ctx);
        if (li || ri) {
          std::size_t idx = li ? *li : *ri;
          Value v = eval_term(li ? *c->right : *c->left, env, ctx.group);
          if (partial[idx]) return compare_values(CompareOp::Eq, *partial[idx], v);
          partial[idx] = std::move(v);
          return true;
        }
      }
      Value a = eval_term(*c->left, env, ctx.group);
      Value b = eval_term(*c->right, env, ctx.group);
      return compare_values(c->op, a, b);
    }
    const auto& n = std::get<Predicate::IsNull>(pred.node);
    return eval_term(*n.term, env, ctx.group).is_null() != n.negated;
  }

  bool holds(const std::vector<const Formula*>& atoms, const Environment& env) {
    Partial none;
    for (const Formula* a : atoms)
      if (!atom(*a, env, none, Ctx{})) return false;
    return true;
  }

  // ---- formulas ----------------------------------------------------------

  Partials formula(const FormulaPtr& f, const Environment& env, const Partial& partial, const Ctx& ctx) {
    return std::visit(
        [&](const auto& n) -> Partials {
          using N = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<N, Formula::Quantified>) {
            return quantified(*f, env, partial, ctx);
          } else if constexpr (std::is_same_v<N, Formula::And>) {
            Partials current{partial};
            for (const auto& c : n.children) {
              Partials next;
              for (const auto& p : current) {
                Partials outs = formula(c, env, p, ctx);
                next.insert(next.end(), std::make_move_iterator(outs.begin()), std::make_move_iterator(outs.end()));
              }
              current = std::move(next);
              if (current.empty()) break;
            }
            return current;
          } else if constexpr (std::is_same_v<N, Formula::Or>) {
            Partials out;
            for (const auto& c : n.children) {
              Partials outs = formula(c, env, partial, ctx);
              out.insert(out.end(), std::make_move_iterator(outs.begin()), std::make_move_iterator(outs.end()));
            }
            return out;
          } else if constexpr (std::is_same_v<N, Formula::Not>) {
            Ctx inner = ctx;
            inner.top = false;
            if (formula(n.child, env, partial, inner).empty()) return {partial};
            return {};
          } else if constexpr (std::is_same_v<N, Formula::Atom>) {
            Partial p = partial;
            if (atom(*f, env, p, ctx)) return {std::move(p)};
            return {};
          } else {
            return {partial};
          }
        },
        f->node);
  }

  const QuantPlan& plan(const Formula& qf) {
    auto it = plans.find(&qf);
    if (it != plans.end()) return it->second;
    QuantPlan p;
    p.formula = &qf;
    p.q = &std::get<Formula::Quantified>(qf.node);
    const auto& q = *p.q;
    int scope_id = lp.quantifier_scope.at(&qf);
    for (const auto& b : q.bindings) p.binding_of[b.var] = &b;
    p.steps = order.steps.at(&qf);
    p.tree = q.joins && has_outer_join(*q.joins);
    if (q.joins && !p.tree) {
      std::vector<const JoinTree*> leaves;
      join_leaves(*q.joins, leaves);
      for (const JoinTree* l : leaves)
        if (l->kind == JoinTree::Kind::Literal) p.literals.push_back(l);
    }

    auto refs_head = [&](const Formula& a) {
      std::vector<const Term*> attrs;
      atom_attrs(a, attrs);
      return std::any_of(attrs.begin(), attrs.end(),
                         [&](const Term* t) { return lp.link(*t).kind == LinkTarget::Kind::Head; });
    };
    auto post_group = [&](const FormulaPtr& c) {
      bool post = false;
      for_each_atom(c, [&](const Formula& a) {
        auto cls = lp.classify(a);
        if ((cls && *cls != PredicateClass::Comparison) || refs_head(a)) post = true;
      });
      return post;
    };

    std::vector<FormulaPtr> rest;
    std::vector<FormulaPtr> post;
    p.pushed.resize(p.steps.size() + 1);
    std::map<const Binding*, std::size_t> depth_of;
    for (std::size_t i = 0; i < p.steps.size(); ++i) depth_of[p.steps[i].binding] = i + 1;

    for (const FormulaPtr& c : conjuncts(q.body)) {
      if (p.tree) {
        auto it2 = lp.join_condition_assignment.find(c.get());
        if (it2 != lp.join_condition_assignment.end() && it2->second->kind != JoinTree::Kind::Leaf) {
          p.node_conditions[it2->second].push_back(c.get());
          continue;
        }
      }
      if (q.grouping && post_group(c)) {
        post.push_back(c);
        continue;
      }
      if (!p.tree && std::holds_alternative<Formula::Atom>(c->node)) {
        auto cls = lp.classify(*c);
        if (cls && *cls == PredicateClass::Comparison && !refs_head(*c)) {
          std::vector<const Term*> attrs;
          atom_attrs(*c, attrs);
          std::size_t depth = 0;
          for (const Term* t : attrs) {
            const LinkTarget& target = lp.link(*t);
            if (target.kind == LinkTarget::Kind::Binding && target.scope == scope_id)
              depth = std::max(depth, depth_of.at(target.binding));
          }
          p.pushed[depth].push_back(c.get());
          continue;
        }
      }
      rest.push_back(c);
    }
    if (q.grouping) {
      p.pre = conjoin(rest);
      p.post = conjoin(post);
    } else {
      p.residual = conjoin(rest);
    }
    for_each_atom(q.grouping ? p.post : p.residual, [&](const Formula& a) { p.assigns = p.assigns || refs_head(a); });
    return plans.emplace(&qf, std::move(p)).first->second;
  }

  // Nested-loop enumeration of the bindings of a quantifier.
  void enumerate(const QuantPlan& p, const Environment& env, const std::function<bool(const Environment&)>& emit) {
    Environment start = env;
    for (const JoinTree* l : p.literals) start = extend(start, l, &kLiteralSchema, Tuple{l->literal});
    if (!holds(p.pushed[0], start)) return;
    std::function<bool(std::size_t, const Environment&)> rec = [&](std::size_t i, const Environment& e) -> bool {
      if (i == p.steps.size()) return emit(e);
      const AccessStep& step = p.steps[i];
      std::vector<Tuple> holder;
      const auto& rows = rows_of(*step.binding, &step, e, holder);
      const auto* schema = schema_of(*step.binding);
      for (const auto& row : rows) {
        Environment next = extend(e, step.binding, schema, row);
        if (!holds(p.pushed[i + 1], next)) continue;
        if (!rec(i + 1, next)) return false;
      }
      return true;
    };
    rec(0, start);
  }

  Environment null_extend(Environment env, const JoinTree& subtree, const QuantPlan& p) {
    std::vector<const JoinTree*> leaves;
    join_leaves(subtree, leaves);
    for (const JoinTree* l : leaves) {
      if (l->kind == JoinTree::Kind::Literal) {
        env = extend(env, l, &kLiteralSchema, Tuple{Value::null()});
      } else {
        const Binding* b = p.binding_of.at(l->var);
        const auto* schema = schema_of(*b);
        env = extend(env, b, schema, Tuple(schema->size()));
      }
    }
    return env;
  }

  // Frames of `extra` above `stop`, replayed on top of `base`.
  static Environment graft(Environment base, const Environment& extra, const Environment& stop) {
    std::vector<const EnvFrame*> frames;
    for (const EnvFrame* f = extra.get(); f && f != stop.get(); f = f->next.get()) frames.push_back(f);
    for (auto it = frames.rbegin(); it != frames.rend(); ++it) base = extend(base, (*it)->key, (*it)->schema, (*it)->values);
    return base;
  }

  std::vector<Environment> join(const QuantPlan& p, const JoinTree& node, const Environment& env) {
    static const std::vector<const Formula*> kNone;
    auto cit = p.node_conditions.find(&node);
    const auto& conds = cit == p.node_conditions.end() ? kNone : cit->second;
    std::vector<Environment> out;
    switch (node.kind) {
      case JoinTree::Kind::Literal:
        out.push_back(extend(env, &node, &kLiteralSchema, Tuple{node.literal}));
        return out;
      case JoinTree::Kind::Leaf: {
        const Binding* b = p.binding_of.at(node.var);
        const AccessStep* step = nullptr;
        for (const auto& s : p.steps)
          if (s.binding == b) step = &s;
        std::vector<Tuple> holder;
        const auto& rows = rows_of(*b, step, env, holder);
        const auto* schema = schema_of(*b);
        for (const auto& row : rows) out.push_back(extend(env, b, schema, row));
        return out;
      }
      case JoinTree::Kind::Inner: {
        std::vector<Environment> current{env};
        for (const auto& child : node.children) {
          std::vector<Environment> next;
          for (const auto& e : current) {
            auto more = join(p, *child, e);
            next.insert(next.end(), more.begin(), more.end());
          }
          current = std::move(next);
        }
        for (auto& e : current)
          if (holds(conds, e)) out.push_back(std::move(e));
        return out;
      }
      case JoinTree::Kind::Left: {
        for (const auto& le : join(p, *node.children[0], env)) {
          bool matched = false;
          for (auto& re : join(p, *node.children[1], le)) {
            if (!holds(conds, re)) continue;
            matched = true;
            out.push_back(std::move(re));
          }
          if (!matched) out.push_back(null_extend(le, *node.children[1], p));
        }
        return out;
      }
      case JoinTree::Kind::Full: {
        auto left = join(p, *node.children[0], env);
        auto right = join(p, *node.children[1], env);
        std::vector<bool> right_matched(right.size(), false);
        for (const auto& le : left) {
          bool matched = false;
          for (std::size_t j = 0; j < right.size(); ++j) {
            Environment both = graft(le, right[j], env);
            if (!holds(conds, both)) continue;
            matched = true;
            right_matched[j] = true;
            out.push_back(std::move(both));
          }
          if (!matched) out.push_back(null_extend(le, *node.children[1], p));
        }
        for (std::size_t j = 0; j < right.size(); ++j)
          if (!right_matched[j]) out.push_back(graft(null_extend(env, *node.children[0], p), right[j], env));
        return out;
      }
    }
    return out;
  }

  Environment null_scope(const QuantPlan& p, Environment env) {
    if (p.q->joins) return null_extend(env, *p.q->joins, p);
    for (const auto& b : p.q->bindings) {
      const auto* schema = schema_of(b);
      env = extend(env, &b, schema, Tuple(schema->size()));
    }
    return env;
  }

  Partials quantified(const Formula& qf, const Environment& env, const Partial& partial, const Ctx& ctx) {
    const QuantPlan& p = plan(qf);
    const auto& q = *p.q;
    bool negative = q.polarity == Polarity::NotExists;
    Ctx inner{ctx.coll, nullptr, false};

    Partials out;
    std::set<Partial> seen;
    bool found = false;
    // returns false to stop enumerating
    auto consume = [&](Partials outs) -> bool {
      if (outs.empty()) return true;
      found = true;
      if (negative) return false;
      if (ctx.top) {
        out.insert(out.end(), std::make_move_iterator(outs.begin()), std::make_move_iterator(outs.end()));
        return true;
      }
      for (auto& o : outs)
        if (seen.insert(o).second) out.push_back(std::move(o));
      return p.assigns;
    };

    if (!q.grouping) {
      if (p.tree) {
        for (const auto& e : join(p, *q.joins, env))
          if (!consume(formula(p.residual, e, partial, inner))) break;
      } else {
        enumerate(p, env, [&](const Environment& e) { return consume(formula(p.residual, e, partial, inner)); });
      }
    } else {
      std::vector<Environment> envs;
      auto keep = [&](const Environment& e) {
        if (!formula(p.pre, e, partial, inner).empty()) envs.push_back(e);
        return true;
      };
      if (p.tree) {
        for (const auto& e : join(p, *q.joins, env)) keep(e);
      } else {
        enumerate(p, env, keep);
      }
      std::vector<Group> groups;
      std::unordered_map<Tuple, std::size_t, TupleHash> index;
      for (const auto& e : envs) {
        Tuple key;
        for (const auto& k : q.grouping->keys) key.push_back(eval_term(*k, e, nullptr));
        auto [it, fresh] = index.emplace(std::move(key), groups.size());
        if (fresh) groups.emplace_back();
        groups[it->second].envs.push_back(e);
      }
      if (groups.empty() && q.grouping->keys.empty()) groups.emplace_back();
      for (const auto& g : groups) {
        Environment rep = g.envs.empty() ? null_scope(p, env) : g.envs.front();
        Ctx group_ctx{ctx.coll, &g, false};
        if (!consume(formula(p.post, rep, partial, group_ctx))) break;
      }
    }
    if (negative) return found ? Partials{} : Partials{partial};
    return out;
  }

  Relation collection(const CollectionExpr& c, const Environment& env) {
    Relation r;
    r.name = c.head.relation;
    r.schema = c.head.attributes;
    Partial start(c.head.attributes.size());
    for (auto& p : formula(c.body, env, start, Ctx{&c, nullptr, true})) {
      Tuple t;
      t.reserve(p.size());
      for (auto& v : p) t.push_back(v ? std::move(*v) : Value::null());
      r.rows.push_back(std::move(t));
    }
    if (conv.semantics == CollectionSemantics::Set) r.deduplicate();
    return r;
  }

  // ---- recursion ---------------------------------------------------------

  void fixpoint(const std::set<std::string>& stratum) {
    if (conv.semantics == CollectionSemantics::Bag)
      throw EvalError("E_BAG_RECURSION", "recursive definitions require set semantics");
    std::map<std::string, std::vector<const Binding*>> occurrences;
    for (const auto& name : stratum) {
      auto& occ = occurrences[name];
      walk_named_bindings(collection_of(name)->body, [&](const Binding& b) {
        if (stratum.count(std::get<Binding::Named>(b.source).name)) occ.push_back(&b);
      });
    }
    std::map<std::string, Relation> total, delta;
    std::map<std::string, std::unordered_set<Tuple, TupleHash>> known;
    for (const auto& name : stratum) {
      const CollectionExpr* c = collection_of(name);
      total[name] = Relation{name, c->head.attributes, {}};
      delta[name] = Relation{name, c->head.attributes, {}};
    }
    auto point_all = [&](const std::map<std::string, Relation>& rels) {
      for (const auto& [name, occ] : occurrences)
        for (const Binding* b : occ) overrides[b] = &rels.at(std::get<Binding::Named>(b->source).name);
    };

    point_all(total);
    for (const auto& name : stratum) {
      Relation r = collection(*collection_of(name), nullptr);
      for (auto& t : r.rows)
        if (known[name].insert(t).second) delta[name].rows.push_back(t);
    }
    for (const auto& name : stratum) total[name].rows = delta[name].rows;

    std::size_t iterations = 1;
    for (;;) {
      bool any = std::any_of(delta.begin(), delta.end(), [](const auto& kv) { return !kv.second.rows.empty(); });
      if (!any) break;
      if (++iterations > conv.fixpoint_cap)
        throw EvalError("E_FIXPOINT_CAP", "fixpoint did not converge within " + std::to_string(conv.fixpoint_cap) +
                                              " iterations");
      std::map<std::string, Relation> fresh;
      for (const auto& name : stratum) fresh[name] = Relation{name, total[name].schema, {}};
      for (const auto& name : stratum) {
        for (const Binding* o : occurrences[name]) {
          point_all(total);
          overrides[o] = &delta.at(std::get<Binding::Named>(o->source).name);
          Relation r = collection(*collection_of(name), nullptr);
          for (auto& t : r.rows)
            if (known[name].insert(t).second) fresh[name].rows.push_back(std::move(t));
        }
      }
      for (const auto& name : stratum) {
        auto& rows = total[name].rows;
        rows.insert(rows.end(), fresh[name].rows.begin(), fresh[name].rows.end());
      }
      delta = std::move(fresh);
    }
    for (const auto& [name, occ] : occurrences)
      for (const Binding* b : occ) overrides.erase(b);
    for (auto& [name, rel] : total) intensional[name] = std::move(rel);
  }
};

Evaluator::Evaluator(const LinkedProgram& lp, const Database& db, const Conventions& conv)
    : impl_(std::make_unique<Impl>(lp, db, conv)) {}

Evaluator::~Evaluator() = default;

Relation Evaluator::query() {
  const Program& p = *impl_->lp.program;
  if (p.is_sentence()) throw EvalError("E_NOT_A_QUERY", "program is a sentence; use eval_sentence");
  if (!impl_->main_pseudo.empty()) return impl_->definition(impl_->main_pseudo);
  return impl_->collection(*p.main_collection(), nullptr);
}

bool Evaluator::sentence() {
  const Program& p = *impl_->lp.program;
  if (!p.is_sentence()) throw EvalError("E_NOT_A_SENTENCE", "program is a query; use eval_query");
  return !impl_->formula(p.main_formula(), nullptr, Partial{}, Ctx{}).empty();
}

const Relation& Evaluator::definition(const std::string& name) { return impl_->definition(name); }

std::vector<Environment> Evaluator::eval_outer_join(const Formula& quantifier, const JoinTree& node,
                                                    const Environment& env) {
  return impl_->join(impl_->plan(quantifier), node, env);
}

Relation eval_query(const LinkedProgram& lp, const Database& db, const Conventions& conv) {
  return Evaluator(lp, db, conv).query();
}

bool eval_sentence(const LinkedProgram& lp, const Database& db, const Conventions& conv) {
  return Evaluator(lp, db, conv).sentence();
}

Database eval_fixpoint(const LinkedProgram& lp, const std::vector<std::string>& defs, const Database& db,
                       const Conventions& conv) {
  Evaluator ev(lp, db, conv);
  Database out = db;
  for (const auto& d : defs) out.add(ev.definition(d));
  return out;
}

namespace {

LinkedProgram prepare(const Program& p, const Database& db, const ExternalRegistry& registry) {
  Program expanded = expand_abstract(p);
  auto catalog = db.catalog();
  BindResult r = analyze(expanded, registry, &catalog);
  if (!r.ok()) {
    for (const auto& d : r.diagnostics)
      if (d.severity == Severity::Error) throw ArcError(d.code, d.message, d.span);
  }
  return std::move(*r.linked);
}

}  // namespace

Relation evaluate_program(const Program& p, const Database& db, const Conventions& conv,
                          const ExternalRegistry& registry) {
  LinkedProgram lp = prepare(p, db, registry);
  return eval_query(lp, db, conv);
}

bool evaluate_sentence(const Program& p, const Database& db, const Conventions& conv,
                       const ExternalRegistry& registry) {
  LinkedProgram lp = prepare(p, db, registry);
  return eval_sentence(lp, db, conv);
}

}  // namespace arc
