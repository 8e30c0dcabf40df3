#include "arc/binder.hpp"

#include <algorithm>
#include <functional>

#include "arc/syntax.hpp"

namespace arc {

std::string Diagnostic::to_string() const {
  return std::string(severity == Severity::Error ? "error " : "warning ") + code + " at " + span.to_string() + ": " +
         message;
}

bool has_errors(const std::vector<Diagnostic>& diags) {
  return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

std::string_view to_string(RelationKind k) {
  switch (k) {
    case RelationKind::Base: return "base";
    case RelationKind::Intensional: return "intensional";
    case RelationKind::External: return "external";
    case RelationKind::Abstract: return "abstract";
  }
  return "?";
}

std::string_view to_string(PredicateClass c) {
  switch (c) {
    case PredicateClass::Assignment: return "assignment";
    case PredicateClass::Comparison: return "comparison";
    case PredicateClass::AggregationAssignment: return "aggregation+assignment";
    case PredicateClass::AggregationComparison: return "aggregation+comparison";
  }
  return "?";
}

const LinkTarget& LinkedProgram::link(const Term& attr_term) const { return links.at(&attr_term); }

std::optional<PredicateClass> LinkedProgram::classify(const Formula& atom) const {
  auto it = predicate_class.find(&atom);
  if (it == predicate_class.end()) return std::nullopt;
  return it->second;
}

int LinkedProgram::enclosing_collection(int scope_id) const {
  for (int s = scope_id; s >= 0; s = scope(s).parent)
    if (scope(s).kind == Scope::Kind::Collection) return s;
  return -1;
}

namespace {

void mark_recursive(LinkedProgram& lp);

Diagnostic error(std::string code, SourceSpan span, std::string message) {
  return Diagnostic{Severity::Error, std::move(code), span, std::move(message)};
}

void collect_literal_leaves(const JoinTree& t, std::vector<const JoinTree*>& out) {
  if (t.kind == JoinTree::Kind::Literal) out.push_back(&t);
  for (const auto& c : t.children) collect_literal_leaves(*c, out);
}

// Attr terms of a term outside of aggregate arguments.
void attrs_outside_aggregates(const TermPtr& t, std::vector<const Term*>& out) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Term::Attr>) {
          out.push_back(t.get());
        } else if constexpr (std::is_same_v<N, Term::Arith>) {
          attrs_outside_aggregates(n.left, out);
          attrs_outside_aggregates(n.right, out);
        }
      },
      t->node);
}

void predicate_terms(const Predicate& p, std::vector<TermPtr>& out) {
  if (auto* c = std::get_if<Predicate::Compare>(&p.node)) {
    out.push_back(c->left);
    out.push_back(c->right);
  } else {
    out.push_back(std::get<Predicate::IsNull>(p.node).term);
  }
}

// Visits every atom of a formula without descending into nested collections.
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

// ---------------------------------------------------------------------------
// name resolution

class Binder {
 public:
  Binder(std::shared_ptr<const Program> p, const ExternalRegistry& registry, const Catalog* catalog)
      : catalog_(catalog) {
    lp_.program = std::move(p);
    lp_.registry = registry;
  }

  BindResult run() {
    const Program& p = *lp_.program;
    lp_.scopes.push_back(Scope{Scope::Kind::Program, 0, -1, {}, "", nullptr, nullptr, nullptr, ""});
    for (const auto& d : p.definitions)
      lp_.relation_kinds[d.name] = d.abstract ? RelationKind::Abstract : RelationKind::Intensional;
    if (!p.is_sentence()) {
      const auto& head = p.main_collection()->head.relation;
      if (!p.find_definition(head)) main_head_ = head;
    }

    for (const auto& d : p.definitions) collection(*d.collection, 0, "def:" + d.name, nullptr, d.name, d.abstract);
    if (p.is_sentence()) {
      int counter = 0;
      formula(p.main_formula(), Ctx{0, "main", &counter, false, false});
    } else {
      collection(*p.main_collection(), 0, "main", nullptr, "", false);
    }

    BindResult result;
    if (has_errors(diags_)) {
      result.diagnostics = std::move(diags_);
      return result;
    }
    classify_predicates();
    assign_join_conditions();
    mark_recursive(lp_);
    result.diagnostics = diags_;
    lp_.warnings = diags_;
    result.linked = std::move(lp_);
    return result;
  }

 private:
  struct Frame {
    bool is_collection = false;
    int scope = 0;
    const CollectionExpr* coll = nullptr;
    bool abstract_def = false;
    std::vector<std::pair<std::string, LinkTarget>> vars;
    std::string hidden;  // binding whose own nested source is being resolved
  };

  struct Ctx {
    int container;       // scope that owns quantifiers created here
    std::string path;    // path of the container
    int* counter;        // quantifier numbering within the container
    bool negated;        // under not / notExists
    bool grouping_key;   // resolving grouping keys
  };

  LinkedProgram lp_;
  const Catalog* catalog_;
  std::vector<Diagnostic> diags_;
  std::vector<Frame> frames_;
  std::string main_head_;

  int new_scope(Scope::Kind kind, int parent, std::string path) {
    int id = static_cast<int>(lp_.scopes.size());
    Scope s;
    s.kind = kind;
    s.id = id;
    s.parent = parent;
    s.path = std::move(path);
    lp_.scopes.push_back(std::move(s));
    lp_.scopes[static_cast<std::size_t>(parent)].children.push_back(id);
    return id;
  }

  void collection(const CollectionExpr& c, int parent, std::string path, const Binding* via, const std::string& def,
                  bool abstract) {
    int id = new_scope(Scope::Kind::Collection, parent, path);
    Scope& s = lp_.scopes[static_cast<std::size_t>(id)];
    s.collection = &c;
    s.via = via;
    s.definition = def;
    lp_.collection_scope[&c] = id;
    Frame f;
    f.is_collection = true;
    f.scope = id;
    f.coll = &c;
    f.abstract_def = abstract;
    frames_.push_back(std::move(f));
    int counter = 0;
    formula(c.body, Ctx{id, path, &counter, false, false});
    frames_.pop_back();
  }

  std::optional<std::vector<std::string>> schema_of(const Binding& b) const {
    if (auto* n = std::get_if<Binding::Named>(&b.source)) {
      if (auto* d = lp_.program->find_definition(n->name)) return d->collection->head.attributes;
      if (n->name == main_head_) return lp_.program->main_collection()->head.attributes;
      if (catalog_) {
        auto it = catalog_->find(n->name);
        if (it != catalog_->end()) return it->second;
      }
      return std::nullopt;
    }
    if (auto* e = std::get_if<Binding::External>(&b.source)) {
      if (auto* spec = lp_.registry.find(e->name)) return spec->attributes;
      return std::nullopt;
    }
    return std::get<Binding::Nested>(b.source).collection->head.attributes;
  }

  void formula(const FormulaPtr& f, const Ctx& ctx) {
    std::visit(
        [&](const auto& n) {
          using N = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<N, Formula::Quantified>) {
            quantified(*f, n, ctx);
          } else if constexpr (std::is_same_v<N, Formula::And> || std::is_same_v<N, Formula::Or>) {
            for (const auto& c : n.children) formula(c, ctx);
          } else if constexpr (std::is_same_v<N, Formula::Not>) {
            Ctx inner = ctx;
            inner.negated = true;
            formula(n.child, inner);
          } else if constexpr (std::is_same_v<N, Formula::Atom>) {
            atom(*f, n.pred, ctx);
          }
        },
        f->node);
  }

  void quantified(const Formula& f, const Formula::Quantified& q, const Ctx& ctx) {
    std::string path = ctx.path + "/q" + std::to_string((*ctx.counter)++);
    int id = new_scope(Scope::Kind::Quantifier, ctx.container, path);
    lp_.scopes[static_cast<std::size_t>(id)].quantifier = &f;
    lp_.quantifier_scope[&f] = id;

    Frame frame;
    frame.scope = id;
    std::set<std::string> seen;
    for (const auto& b : q.bindings) {
      if (!seen.insert(b.var).second) {
        diags_.push_back(error("E_DUPLICATE_BINDING", b.span, "variable '" + b.var + "' is bound twice in one quantifier"));
        continue;
      }
      LinkTarget t;
      t.kind = LinkTarget::Kind::Binding;
      t.binding = &b;
      t.scope = id;
      frame.vars.emplace_back(b.var, t);
      if (auto* n = std::get_if<Binding::Named>(&b.source)) {
        if (!lp_.relation_kinds.count(n->name))
          lp_.relation_kinds[n->name] = n->name == main_head_ ? RelationKind::Intensional : RelationKind::Base;
      } else if (auto* e = std::get_if<Binding::External>(&b.source)) {
        if (!lp_.registry.find(e->name))
          diags_.push_back(error("E_UNKNOWN_EXTERNAL", b.span, "no external relation named '" + e->name + "'"));
        else
          lp_.relation_kinds[e->name] = RelationKind::External;
      }
    }
    if (q.joins) {
      std::vector<const JoinTree*> lits;
      collect_literal_leaves(*q.joins, lits);
      for (const JoinTree* l : lits) {
        LinkTarget t;
        t.kind = LinkTarget::Kind::Literal;
        t.literal = l;
        t.scope = id;
        frame.vars.emplace_back(l->var, t);
      }
    }
    frames_.push_back(std::move(frame));

    for (const auto& b : q.bindings) {
      if (auto* nested = std::get_if<Binding::Nested>(&b.source)) {
        frames_.back().hidden = b.var;
        std::size_t depth = frames_.size();
        collection(*nested->collection, id, path + "/" + b.var, &b, "", false);
        (void)depth;
        frames_[depth - 1].hidden.clear();
      }
    }
    int counter = 0;
    Ctx inner{id, path, &counter, ctx.negated || q.polarity == Polarity::NotExists, false};
    if (q.grouping) {
      Ctx keys = inner;
      keys.grouping_key = true;
      for (const auto& k : q.grouping->keys) resolve(*k, nullptr, keys);
    }
    formula(q.body, inner);
    frames_.pop_back();
  }

  void atom(const Formula& f, const Predicate& pred, const Ctx& ctx) {
    lp_.atom_scope[&f] = innermost_scope();
    std::vector<TermPtr> terms;
    predicate_terms(pred, terms);
    for (const auto& t : terms) {
      std::vector<const Term*> attrs;
      collect_attr_terms(t, attrs);
      for (const Term* a : attrs) resolve(*a, &f, ctx);
    }
  }

  int innermost_scope() const { return frames_.empty() ? 0 : frames_.back().scope; }

  // May the head attribute reference `t` (inside atom `f`) appear here?
  bool head_position_ok(const Term& t, const Formula* f, const Ctx& ctx) const {
    if (!f || ctx.negated || ctx.grouping_key) return false;
    const auto* atom = std::get_if<Formula::Atom>(&f->node);
    const auto* cmp = atom ? std::get_if<Predicate::Compare>(&atom->pred.node) : nullptr;
    if (!cmp || cmp->op != CompareOp::Eq) return false;
    return cmp->left.get() == &t || cmp->right.get() == &t;
  }

  void resolve(const Term& t, const Formula* f, const Ctx& ctx) {
    const AttributeRef& ref = *as_attr(t);
    bool passed_collection = false;
    for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
      const Frame& fr = *it;
      if (fr.is_collection) {
        if (ref.variable == fr.coll->head.relation) {
          if (passed_collection) {
            diags_.push_back(error("E_HEAD_IN_BODY", t.span,
                                   "head '" + ref.variable + "' of an enclosing collection is read in " +
                                       ref.to_string()));
            return;
          }
          if (!fr.coll->head.index_of(ref.attribute)) {
            diags_.push_back(error("E_UNKNOWN_ATTRIBUTE", t.span,
                                   "head " + ref.variable + " has no attribute '" + ref.attribute + "'"));
            return;
          }
          if (!fr.abstract_def && !head_position_ok(t, f, ctx)) {
            diags_.push_back(error("E_HEAD_IN_BODY", t.span,
                                   "head attribute " + ref.to_string() +
                                       " may only appear as a bare side of a positive equality"));
            return;
          }
          LinkTarget target;
          target.kind = LinkTarget::Kind::Head;
          target.head = fr.coll;
          target.scope = fr.scope;
          lp_.links[&t] = target;
          return;
        }
        passed_collection = true;
        continue;
      }
      for (const auto& [name, target] : fr.vars) {
        if (name != ref.variable || name == fr.hidden) continue;
        std::optional<std::vector<std::string>> schema;
        if (target.kind == LinkTarget::Kind::Literal)
          schema = std::vector<std::string>{"val"};
        else
          schema = schema_of(*target.binding);
        if (schema && std::find(schema->begin(), schema->end(), ref.attribute) == schema->end()) {
          diags_.push_back(error("E_UNKNOWN_ATTRIBUTE", t.span,
                                 "variable " + ref.variable + " has no attribute '" + ref.attribute + "'"));
          return;
        }
        lp_.links[&t] = target;
        return;
      }
    }
    diags_.push_back(error("E_UNBOUND_VAR", t.span, "variable '" + ref.variable + "' is not bound in scope"));
  }

  // -------------------------------------------------------------------------

  void classify_predicates();
  void assign_join_conditions();
};

}  // namespace

// ---------------------------------------------------------------------------
// assignment designation

namespace {

using Branch = std::vector<const Formula*>;
constexpr std::size_t kBranchCap = 4096;

bool is_head_equality(const LinkedProgram& lp, const Formula& f, const CollectionExpr& c, std::string* attr) {
  const auto* atom = std::get_if<Formula::Atom>(&f.node);
  if (!atom) return false;
  const auto* cmp = std::get_if<Predicate::Compare>(&atom->pred.node);
  if (!cmp || cmp->op != CompareOp::Eq) return false;
  for (const TermPtr& side : {cmp->left, cmp->right}) {
    const AttributeRef* ref = as_attr(*side);
    if (!ref) continue;
    auto it = lp.links.find(side.get());
    if (it != lp.links.end() && it->second.kind == LinkTarget::Kind::Head && it->second.head == &c) {
      if (attr) *attr = ref->attribute;
      return true;
    }
  }
  return false;
}

// Disjunctive branches of a collection body, each listing the candidate
// assignment atoms in source order.
std::vector<Branch> branches(const LinkedProgram& lp, const FormulaPtr& f, const CollectionExpr& c) {
  return std::visit(
      [&](const auto& n) -> std::vector<Branch> {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Formula::Quantified>) {
          if (n.polarity == Polarity::NotExists) return {Branch{}};
          return branches(lp, n.body, c);
        } else if constexpr (std::is_same_v<N, Formula::And>) {
          std::vector<Branch> acc{Branch{}};
          for (const auto& child : n.children) {
            auto sub = branches(lp, child, c);
            std::vector<Branch> next;
            for (const auto& a : acc) {
              for (const auto& b : sub) {
                if (next.size() >= kBranchCap) break;
                Branch joined = a;
                joined.insert(joined.end(), b.begin(), b.end());
                next.push_back(std::move(joined));
              }
            }
            acc = std::move(next);
          }
          return acc;
        } else if constexpr (std::is_same_v<N, Formula::Or>) {
          std::vector<Branch> acc;
          for (const auto& child : n.children) {
            auto sub = branches(lp, child, c);
            for (auto& b : sub)
              if (acc.size() < kBranchCap) acc.push_back(std::move(b));
          }
          return acc;
        } else if constexpr (std::is_same_v<N, Formula::Atom>) {
          if (is_head_equality(lp, *f, c, nullptr)) return {Branch{f.get()}};
          return {Branch{}};
        } else {
          return {Branch{}};
        }
      },
      f->node);
}

struct Designation {
  std::set<const Formula*> designated;
  std::vector<Diagnostic> diagnostics;
};

Designation designate(const LinkedProgram& lp, const CollectionExpr& c) {
  Designation out;
  auto bs = branches(lp, c.body, c);
  std::set<const Formula*> redundant;
  for (std::size_t i = 0; i < bs.size(); ++i) {
    std::map<std::string, const Formula*> first;
    for (const Formula* f : bs[i]) {
      std::string attr;
      is_head_equality(lp, *f, c, &attr);
      if (!first.count(attr))
        first[attr] = f;
      else
        redundant.insert(f);
    }
    for (const auto& a : c.head.attributes) {
      if (!first.count(a)) {
        out.diagnostics.push_back(error("E_HEAD_UNASSIGNED", c.head.span,
                                        "head attribute " + c.head.relation + "." + a +
                                            " is not assigned on branch " + std::to_string(i + 1)));
      }
    }
    for (const auto& [attr, f] : first) out.designated.insert(f);
  }
  for (const Formula* f : redundant) {
    if (out.designated.count(f)) {
      out.diagnostics.push_back(error("E_HEAD_MULTIASSIGNED", f->span,
                                      "predicate " + print_formula(*f) +
                                          " assigns a head attribute on one branch but repeats an assignment on another"));
    }
  }
  return out;
}

std::vector<const CollectionExpr*> assignable_collections(const LinkedProgram& lp) {
  std::vector<const CollectionExpr*> out;
  for (const auto& s : lp.scopes) {
    if (s.kind != Scope::Kind::Collection) continue;
    if (!s.definition.empty()) {
      const Definition* d = lp.program->find_definition(s.definition);
      if (d && d->abstract) continue;
    }
    out.push_back(s.collection);
  }
  return out;
}

void Binder::classify_predicates() {
  std::set<const Formula*> designated;
  for (const CollectionExpr* c : assignable_collections(lp_)) {
    auto d = designate(lp_, *c);
    designated.insert(d.designated.begin(), d.designated.end());
  }
  for (const auto& [f, scope] : lp_.atom_scope) {
    bool agg = contains_aggregate(std::get<Formula::Atom>(f->node).pred);
    bool assign = designated.count(f) > 0;
    lp_.predicate_class[f] = assign ? (agg ? PredicateClass::AggregationAssignment : PredicateClass::Assignment)
                                    : (agg ? PredicateClass::AggregationComparison : PredicateClass::Comparison);
  }
}

// The node of `tree` spanning every leaf in `leaves` as low as possible.
const JoinTree* lowest_spanning(const JoinTree& tree, const std::set<const JoinTree*>& leaves) {
  std::function<std::size_t(const JoinTree&)> count = [&](const JoinTree& t) -> std::size_t {
    if (t.kind == JoinTree::Kind::Leaf || t.kind == JoinTree::Kind::Literal) return leaves.count(&t);
    std::size_t n = 0;
    for (const auto& c : t.children) n += count(*c);
    return n;
  };
  const JoinTree* node = &tree;
  for (;;) {
    const JoinTree* next = nullptr;
    for (const auto& c : node->children)
      if (count(*c) == leaves.size()) next = c.get();
    if (!next) return node;
    node = next;
  }
}

void find_leaves(const JoinTree& t, std::map<std::string, const JoinTree*>& out) {
  if (t.kind == JoinTree::Kind::Leaf || t.kind == JoinTree::Kind::Literal) out[t.var] = &t;
  for (const auto& c : t.children) find_leaves(*c, out);
}

void Binder::assign_join_conditions() {
  for (const auto& [qf, scope_id] : lp_.quantifier_scope) {
    const auto& q = std::get<Formula::Quantified>(qf->node);
    if (!q.joins || !has_outer_join(*q.joins)) continue;
    std::map<std::string, const JoinTree*> leaf_of;
    find_leaves(*q.joins, leaf_of);
    for (const FormulaPtr& c : conjuncts(q.body)) {
      const auto* atom = std::get_if<Formula::Atom>(&c->node);
      if (!atom) continue;
      if (lp_.predicate_class.at(c.get()) != PredicateClass::Comparison) continue;
      std::vector<TermPtr> terms;
      predicate_terms(atom->pred, terms);
      std::set<const JoinTree*> leaves;
      for (const auto& t : terms) {
        std::vector<const Term*> attrs;
        collect_attr_terms(t, attrs);
        for (const Term* a : attrs) {
          const LinkTarget& target = lp_.links.at(a);
          if (target.scope != scope_id || target.kind == LinkTarget::Kind::Head) continue;
          leaves.insert(leaf_of.at(as_attr(*a)->variable));
        }
      }
      if (!leaves.empty()) lp_.join_condition_assignment[c.get()] = lowest_spanning(*q.joins, leaves);
    }
  }
}

}  // namespace

BindResult bind(std::shared_ptr<const Program> p, const ExternalRegistry& registry, const Catalog* catalog) {
  return Binder(std::move(p), registry, catalog).run();
}

BindResult bind(const Program& p, const ExternalRegistry& registry, const Catalog* catalog) {
  return bind(std::make_shared<const Program>(p), registry, catalog);
}

// ---------------------------------------------------------------------------
// checks

std::vector<Diagnostic> check_heads(const LinkedProgram& lp) {
  std::vector<Diagnostic> out;
  for (const CollectionExpr* c : assignable_collections(lp)) {
    auto d = designate(lp, *c);
    out.insert(out.end(), d.diagnostics.begin(), d.diagnostics.end());
  }
  return out;
}

namespace {

std::set<std::string> local_vars(const Formula::Quantified& q) {
  std::set<std::string> out;
  for (const auto& b : q.bindings) out.insert(b.var);
  if (q.joins) {
    std::vector<std::string> vars;
    join_leaf_vars(*q.joins, vars);
    out.insert(vars.begin(), vars.end());
  }
  return out;
}

bool contains_post_group_atom(const LinkedProgram& lp, const FormulaPtr& f) {
  bool found = false;
  for_each_atom(f, [&](const Formula& a) {
    auto cls = lp.classify(a);
    if (cls && *cls != PredicateClass::Comparison) found = true;
  });
  return found;
}

}  // namespace

std::vector<Diagnostic> check_grouping(const LinkedProgram& lp) {
  std::vector<Diagnostic> out;

  // aggregate predicates must be direct conjuncts of a grouping scope
  for (const auto& [f, scope_id] : lp.atom_scope) {
    if (!contains_aggregate(std::get<Formula::Atom>(f->node).pred)) continue;
    const Scope& s = lp.scope(scope_id);
    bool ok = false;
    if (s.kind == Scope::Kind::Quantifier) {
      const auto& q = std::get<Formula::Quantified>(s.quantifier->node);
      if (q.grouping) {
        for (const auto& c : conjuncts(q.body)) ok = ok || c.get() == f;
      }
    }
    if (!ok)
      out.push_back(error("E_AGG_NO_GROUP", f->span,
                          "aggregate predicate " + print_formula(*f) +
                              " must be a direct conjunct of a scope with a grouping operator"));
  }

  for (const auto& [qf, scope_id] : lp.quantifier_scope) {
    const auto& q = std::get<Formula::Quantified>(qf->node);
    if (!q.grouping) continue;
    if (q.polarity == Polarity::NotExists)
      out.push_back(Diagnostic{Severity::Warning, "W_NEGATED_GROUPING", qf->span,
                               "grouping operator on a negated quantifier"});
    std::set<AttributeRef> keys;
    for (const auto& k : q.grouping->keys) keys.insert(*as_attr(*k));
    auto locals = local_vars(q);
    auto is_local = [&](const Term& t) {
      const LinkTarget& target = lp.link(t);
      return target.kind != LinkTarget::Kind::Head && target.scope == scope_id &&
             locals.count(as_attr(t)->variable);
    };
    for (const auto& k : q.grouping->keys)
      if (!is_local(*k))
        out.push_back(error("E_NONKEY_REF_POST_GROUP", k->span,
                            "grouping key " + as_attr(*k)->to_string() + " is not bound by the grouping scope"));

    for (const FormulaPtr& c : conjuncts(q.body)) {
      if (!contains_post_group_atom(lp, c)) continue;
      // evaluated once per group: local references must be keys unless aggregated
      std::vector<const Formula*> atoms;
      for_each_atom(c, [&](const Formula& a) { atoms.push_back(&a); });
      for (const Formula* a : atoms) {
        std::vector<TermPtr> terms;
        predicate_terms(std::get<Formula::Atom>(a->node).pred, terms);
        for (const auto& t : terms) {
          std::vector<const Term*> attrs;
          attrs_outside_aggregates(t, attrs);
          for (const Term* at : attrs) {
            if (is_local(*at) && !keys.count(*as_attr(*at)))
              out.push_back(error("E_NONKEY_REF_POST_GROUP", at->span,
                                  as_attr(*at)->to_string() + " is neither a grouping key nor aggregated in " +
                                      print_formula(*a)));
          }
        }
      }
    }
  }
  return out;
}

namespace {

struct DepEdge {
  std::string to;
  bool flagged;
  std::string why;
  SourceSpan span;
};

void collect_deps(const LinkedProgram& lp, const FormulaPtr& f, bool flagged, const std::string& why,
                  std::vector<DepEdge>& out) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Formula::Quantified>) {
          bool fl = flagged;
          std::string w = why;
          if (!fl && n.polarity == Polarity::NotExists) { fl = true; w = "negation"; }
          if (!fl && n.grouping) { fl = true; w = "grouping"; }
          if (!fl && n.joins && has_outer_join(*n.joins)) { fl = true; w = "outer join"; }
          for (const auto& b : n.bindings) {
            if (auto* nm = std::get_if<Binding::Named>(&b.source)) {
              auto it = lp.relation_kinds.find(nm->name);
              if (it != lp.relation_kinds.end() && it->second == RelationKind::Intensional)
                out.push_back(DepEdge{nm->name, fl, w, b.span});
            } else if (auto* ne = std::get_if<Binding::Nested>(&b.source)) {
              collect_deps(lp, ne->collection->body, fl, w, out);
            }
          }
          collect_deps(lp, n.body, fl, w, out);
        } else if constexpr (std::is_same_v<N, Formula::And> || std::is_same_v<N, Formula::Or>) {
          for (const auto& c : n.children) collect_deps(lp, c, flagged, why, out);
        } else if constexpr (std::is_same_v<N, Formula::Not>) {
          collect_deps(lp, n.child, true, flagged ? why : "negation", out);
        }
      },
      f->node);
}

}  // namespace

std::vector<Diagnostic> check_recursion(const LinkedProgram& lp) {
  const Program& p = *lp.program;
  std::map<std::string, std::vector<DepEdge>> graph;
  std::map<std::string, SourceSpan> where;
  for (const auto& d : p.definitions) {
    if (d.abstract) continue;
    collect_deps(lp, d.collection->body, false, "", graph[d.name]);
    where[d.name] = d.span;
  }
  if (!p.is_sentence()) {
    const auto& head = p.main_collection()->head.relation;
    if (!p.find_definition(head)) {
      collect_deps(lp, p.main_collection()->body, false, "", graph[head]);
      where[head] = p.main_collection()->span;
    }
  }

  // Tarjan's strongly connected components
  std::map<std::string, int> index, low, component;
  std::vector<std::string> stack;
  std::set<std::string> on_stack;
  int counter = 0, components = 0;
  std::function<void(const std::string&)> visit = [&](const std::string& v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack.insert(v);
    for (const auto& e : graph[v]) {
      if (!graph.count(e.to)) continue;
      if (!index.count(e.to)) {
        visit(e.to);
        low[v] = std::min(low[v], low[e.to]);
      } else if (on_stack.count(e.to)) {
        low[v] = std::min(low[v], index[e.to]);
      }
    }
    if (low[v] == index[v]) {
      for (;;) {
        std::string w = stack.back();
        stack.pop_back();
        on_stack.erase(w);
        component[w] = components;
        if (w == v) break;
      }
      ++components;
    }
  };
  std::vector<std::string> names;
  for (const auto& [name, edges] : graph) names.push_back(name);
  for (const auto& n : names)
    if (!index.count(n)) visit(n);

  std::vector<Diagnostic> out;
  for (const auto& [from, edges] : graph) {
    for (const auto& e : edges) {
      if (!graph.count(e.to) || component[e.to] != component[from]) continue;
      if (e.flagged)
        out.push_back(error("E_UNSTRATIFIED", e.span,
                            "recursive dependency " + from + " -> " + e.to + " passes through " + e.why));
    }
  }
  return out;
}

namespace {

void mark_recursive(LinkedProgram& lp) {
  // definitions on a dependency cycle (including self-loops)
  const Program& p = *lp.program;
  std::map<std::string, std::vector<DepEdge>> graph;
  for (const auto& d : p.definitions)
    if (!d.abstract) collect_deps(lp, d.collection->body, false, "", graph[d.name]);
  if (!p.is_sentence() && !p.find_definition(p.main_collection()->head.relation))
    collect_deps(lp, p.main_collection()->body, false, "", graph[p.main_collection()->head.relation]);
  for (const auto& [name, edges] : graph) {
    std::set<std::string> seen;
    std::vector<std::string> todo;
    for (const auto& e : edges) todo.push_back(e.to);
    while (!todo.empty()) {
      std::string v = todo.back();
      todo.pop_back();
      if (v == name) {
        lp.recursive_defs.insert(name);
        break;
      }
      if (!seen.insert(v).second) continue;
      auto it = graph.find(v);
      if (it == graph.end()) continue;
      for (const auto& e : it->second) todo.push_back(e.to);
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// access planning

namespace {

// Variables referenced by `t` that are bindings of the quantifier scope `scope_id`.
void local_refs(const LinkedProgram& lp, const TermPtr& t, int scope_id, std::set<std::string>& out) {
  std::vector<const Term*> attrs;
  collect_attr_terms(t, attrs);
  for (const Term* a : attrs) {
    const LinkTarget& target = lp.link(*a);
    if (target.kind == LinkTarget::Kind::Binding && target.scope == scope_id) out.insert(target.binding->var);
  }
}

bool refs_head(const LinkedProgram& lp, const TermPtr& t) {
  std::vector<const Term*> attrs;
  collect_attr_terms(t, attrs);
  return std::any_of(attrs.begin(), attrs.end(),
                     [&](const Term* a) { return lp.link(*a).kind == LinkTarget::Kind::Head; });
}

// Sibling bindings read (transitively, at any depth) by a nested collection.
void sibling_refs(const LinkedProgram& lp, const CollectionExpr& c, int scope_id, std::set<std::string>& out) {
  std::function<void(const FormulaPtr&)> walk = [&](const FormulaPtr& f) {
    std::visit(
        [&](const auto& n) {
          using N = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<N, Formula::Quantified>) {
            for (const auto& b : n.bindings)
              if (auto* ne = std::get_if<Binding::Nested>(&b.source)) walk(ne->collection->body);
            if (n.grouping)
              for (const auto& k : n.grouping->keys) local_refs(lp, k, scope_id, out);
            walk(n.body);
          } else if constexpr (std::is_same_v<N, Formula::And> || std::is_same_v<N, Formula::Or>) {
            for (const auto& ch : n.children) walk(ch);
          } else if constexpr (std::is_same_v<N, Formula::Not>) {
            walk(n.child);
          } else if constexpr (std::is_same_v<N, Formula::Atom>) {
            std::vector<TermPtr> terms;
            predicate_terms(n.pred, terms);
            for (const auto& t : terms) local_refs(lp, t, scope_id, out);
          }
        },
        f->node);
  };
  walk(c.body);
}

}  // namespace

std::variant<EvaluationOrder, std::vector<Diagnostic>> plan_access(const LinkedProgram& lp) {
  EvaluationOrder order;
  std::vector<Diagnostic> diags;
  for (const auto& [qf, scope_id] : lp.quantifier_scope) {
    const auto& q = std::get<Formula::Quantified>(qf->node);
    const std::string& path = lp.scope(scope_id).path;
    bool outer = q.joins && has_outer_join(*q.joins);
    auto body = conjuncts(q.body);

    std::vector<bool> placed(q.bindings.size(), false);
    std::set<std::string> available;
    std::vector<AccessStep> steps;
    bool stuck = false;
    for (const auto& b : q.bindings) {
      if (auto* nm = std::get_if<Binding::Named>(&b.source)) {
        auto it = lp.relation_kinds.find(nm->name);
        if (it != lp.relation_kinds.end() && it->second == RelationKind::Abstract) {
          diags.push_back(error("E_ABSTRACT_UNEXPANDED", b.span,
                                "abstract relation " + nm->name + " bound by " + b.var +
                                    " cannot be evaluated; pin all of its head attributes by equalities and expand it"));
          stuck = true;
        }
      }
      if (std::holds_alternative<Binding::External>(b.source) && outer) {
        diags.push_back(error("E_UNSAFE_EXTERNAL", b.span,
                              "external relation " + std::get<Binding::External>(b.source).name + " in scope " + path +
                                  " cannot take part in an outer join annotation"));
        stuck = true;
      }
    }
    if (stuck) continue;

    for (std::size_t round = 0; round < q.bindings.size(); ++round) {
      bool progressed = false;
      for (std::size_t i = 0; i < q.bindings.size() && !progressed; ++i) {
        if (placed[i]) continue;
        const Binding& b = q.bindings[i];
        AccessStep step;
        step.binding = &b;
        bool ready = true;
        if (auto* ne = std::get_if<Binding::Nested>(&b.source)) {
          std::set<std::string> refs;
          sibling_refs(lp, *ne->collection, scope_id, refs);
          for (const auto& r : refs) ready = ready && available.count(r);
        } else if (auto* ex = std::get_if<Binding::External>(&b.source)) {
          const ExternalSpec& spec = *lp.registry.find(ex->name);
          // attribute -> term computable from already available variables
          std::map<std::size_t, TermPtr> pins;
          for (const auto& c : body) {
            const auto* atom = std::get_if<Formula::Atom>(&c->node);
            const auto* cmp = atom ? std::get_if<Predicate::Compare>(&atom->pred.node) : nullptr;
            if (!cmp || cmp->op != CompareOp::Eq) continue;
            for (int side = 0; side < 2; ++side) {
              const TermPtr& mine = side == 0 ? cmp->left : cmp->right;
              const TermPtr& other = side == 0 ? cmp->right : cmp->left;
              const AttributeRef* ref = as_attr(*mine);
              if (!ref || ref->variable != b.var) continue;
              const LinkTarget& target = lp.link(*mine);
              if (target.kind != LinkTarget::Kind::Binding || target.binding != &b) continue;
              if (contains_aggregate(*other) || refs_head(lp, other)) continue;
              std::set<std::string> needs;
              local_refs(lp, other, scope_id, needs);
              bool ok = !needs.count(b.var);
              for (const auto& v : needs) ok = ok && available.count(v);
              auto pos = std::find(spec.attributes.begin(), spec.attributes.end(), ref->attribute);
              if (!ok || pos == spec.attributes.end()) continue;
              pins.emplace(static_cast<std::size_t>(pos - spec.attributes.begin()), other);
            }
          }
          std::string best;
          std::size_t best_bound = 0;
          for (const auto& pat : spec.patterns) {
            bool admissible = true;
            std::size_t bound = 0;
            for (std::size_t k = 0; k < pat.size(); ++k) {
              if (pat[k] == 'b') {
                ++bound;
                admissible = admissible && pins.count(k);
              }
            }
            if (admissible && (best.empty() || bound > best_bound)) {
              best = pat;
              best_bound = bound;
            }
          }
          ready = !best.empty();
          if (ready) {
            step.pattern = best;
            for (std::size_t k = 0; k < best.size(); ++k)
              if (best[k] == 'b') step.pinned.emplace_back(k, pins.at(k));
          }
        }
        if (ready) {
          placed[i] = true;
          available.insert(b.var);
          steps.push_back(std::move(step));
          progressed = true;
        }
      }
      if (!progressed) break;
    }
    bool complete = true;
    for (std::size_t i = 0; i < q.bindings.size(); ++i) {
      if (placed[i]) continue;
      complete = false;
      const Binding& b = q.bindings[i];
      if (auto* ex = std::get_if<Binding::External>(&b.source)) {
        diags.push_back(error("E_UNSAFE_EXTERNAL", b.span,
                              "no admissible access pattern for external relation " + ex->name + " (" + b.var +
                                  ") in scope " + path));
      } else {
        diags.push_back(error("E_LATERAL_CYCLE", b.span,
                              "binding " + b.var + " in scope " + path + " depends on siblings that depend on it"));
      }
    }
    if (complete) order.steps[qf] = std::move(steps);
  }
  if (has_errors(diags)) return diags;
  return order;
}

BindResult analyze(const Program& p, const ExternalRegistry& registry, const Catalog* catalog) {
  BindResult r = bind(p, registry, catalog);
  if (!r.ok()) return r;
  LinkedProgram& lp = *r.linked;
  for (auto* check : {&check_heads, &check_grouping, &check_recursion}) {
    auto d = (*check)(lp);
    r.diagnostics.insert(r.diagnostics.end(), d.begin(), d.end());
  }
  if (has_errors(r.diagnostics)) {
    r.linked.reset();
  } else {
    lp.warnings = r.diagnostics;
  }
  return r;
}

}  // namespace arc
