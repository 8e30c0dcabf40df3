#include "arc/alt.hpp"

#include <algorithm>

#include "arc/alt_json.hpp"
#include "arc/error.hpp"

namespace arc {

// ---- terms ----

TermPtr make_constant(Value value, SourceSpan span) {
  return std::make_shared<const Term>(Term{Term::Constant{std::move(value)}, span});
}

TermPtr make_attr(std::string variable, std::string attribute, SourceSpan span) {
  if (variable.empty() || attribute.empty())
    throw AltError("attribute reference needs a variable and an attribute", span);
  return std::make_shared<const Term>(
      Term{Term::Attr{AttributeRef{std::move(variable), std::move(attribute)}}, span});
}

TermPtr make_arith(ArithOp op, TermPtr left, TermPtr right, SourceSpan span) {
  if (!left || !right) throw AltError("arithmetic needs two operands", span);
  return std::make_shared<const Term>(Term{Term::Arith{op, std::move(left), std::move(right)}, span});
}

namespace {

bool contains_attr(const Term& t) {
  return std::visit(
      [](const auto& n) -> bool {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Term::Attr>) return true;
        else if constexpr (std::is_same_v<N, Term::Arith>) return contains_attr(*n.left) || contains_attr(*n.right);
        else if constexpr (std::is_same_v<N, Term::Aggregate>) return contains_attr(*n.arg);
        else return false;
      },
      t.node);
}

}  // namespace

TermPtr make_aggregate(AggFn fn, TermPtr arg, SourceSpan span) {
  if (!arg) throw AltError("aggregate needs an argument", span);
  if (contains_aggregate(*arg)) throw AltError("aggregate terms may not nest", span);
  if (!contains_attr(*arg)) throw AltError("aggregate argument must reference an attribute", span);
  return std::make_shared<const Term>(Term{Term::Aggregate{fn, std::move(arg)}, span});
}

bool contains_aggregate(const Term& t) {
  return std::visit(
      [](const auto& n) -> bool {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Term::Aggregate>) return true;
        else if constexpr (std::is_same_v<N, Term::Arith>)
          return contains_aggregate(*n.left) || contains_aggregate(*n.right);
        else return false;
      },
      t.node);
}

void collect_attr_terms(const TermPtr& t, std::vector<const Term*>& out) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Term::Attr>) out.push_back(t.get());
        else if constexpr (std::is_same_v<N, Term::Arith>) {
          collect_attr_terms(n.left, out);
          collect_attr_terms(n.right, out);
        } else if constexpr (std::is_same_v<N, Term::Aggregate>) collect_attr_terms(n.arg, out);
      },
      t->node);
}

bool contains_aggregate(const Predicate& p) {
  if (auto* c = std::get_if<Predicate::Compare>(&p.node))
    return contains_aggregate(*c->left) || contains_aggregate(*c->right);
  return contains_aggregate(*std::get<Predicate::IsNull>(p.node).term);
}

// ---- join trees ----

JoinTreePtr make_leaf(std::string var, SourceSpan span) {
  if (var.empty()) throw AltError("join leaf needs a variable", span);
  return std::make_shared<const JoinTree>(JoinTree{JoinTree::Kind::Leaf, std::move(var), {}, {}, span});
}

JoinTreePtr make_literal_leaf(Value value, std::string anon_var, SourceSpan span) {
  if (anon_var.empty()) throw AltError("literal leaf needs a variable", span);
  return std::make_shared<const JoinTree>(
      JoinTree{JoinTree::Kind::Literal, std::move(anon_var), std::move(value), {}, span});
}

JoinTreePtr make_join(JoinTree::Kind kind, std::vector<JoinTreePtr> children, SourceSpan span) {
  switch (kind) {
    case JoinTree::Kind::Inner:
      if (children.size() < 2) throw AltError("inner join annotation needs at least two children", span);
      break;
    case JoinTree::Kind::Left:
    case JoinTree::Kind::Full:
      if (children.size() != 2) throw AltError("left/full join annotations are binary", span);
      break;
    default: throw AltError("make_join expects an inner, left or full node", span);
  }
  for (const auto& c : children)
    if (!c) throw AltError("null join child", span);
  return std::make_shared<const JoinTree>(JoinTree{kind, {}, {}, std::move(children), span});
}

void join_leaf_vars(const JoinTree& tree, std::vector<std::string>& out) {
  if (tree.kind == JoinTree::Kind::Leaf || tree.kind == JoinTree::Kind::Literal) {
    out.push_back(tree.var);
    return;
  }
  for (const auto& c : tree.children) join_leaf_vars(*c, out);
}

bool has_outer_join(const JoinTree& tree) {
  if (tree.kind == JoinTree::Kind::Left || tree.kind == JoinTree::Kind::Full) return true;
  return std::any_of(tree.children.begin(), tree.children.end(),
                     [](const JoinTreePtr& c) { return has_outer_join(*c); });
}

// ---- formulas ----

namespace {

void collect_literal_vars(const JoinTree& tree, std::vector<std::string>& out) {
  if (tree.kind == JoinTree::Kind::Literal) out.push_back(tree.var);
  for (const auto& c : tree.children) collect_literal_vars(*c, out);
}

}  // namespace

FormulaPtr make_quantified(Polarity polarity, std::vector<Binding> bindings,
                           std::optional<GroupingOp> grouping, JoinTreePtr joins,
                           FormulaPtr body, SourceSpan span) {
  if (bindings.empty()) throw AltError("a quantifier needs at least one binding", span);
  if (!body) throw AltError("a quantifier needs a body", span);
  for (const auto& b : bindings) {
    if (b.var.empty()) throw AltError("binding without a variable", b.span);
    if (auto* n = std::get_if<Binding::Nested>(&b.source); n && !n->collection)
      throw AltError("nested binding without a collection", b.span);
  }
  if (grouping) {
    for (const auto& k : grouping->keys)
      if (!k || !as_attr(*k)) throw AltError("grouping keys must be attribute references", span);
  }
  if (joins) {
    std::vector<std::string> leaves;
    join_leaf_vars(*joins, leaves);
    std::vector<std::string> literals;
    collect_literal_vars(*joins, literals);
    std::multiset<std::string> seen(leaves.begin(), leaves.end());
    for (const auto& b : bindings) {
      auto n = seen.count(b.var);
      if (n != 1)
        throw AltError("binding '" + b.var + "' must appear exactly once in the join annotation", joins->span);
    }
    for (const auto& lit : literals) {
      if (seen.count(lit) != 1) throw AltError("literal leaf variable '" + lit + "' is not unique", joins->span);
      for (const auto& b : bindings)
        if (b.var == lit) throw AltError("literal leaf variable '" + lit + "' shadows a binding", joins->span);
    }
    if (leaves.size() != bindings.size() + literals.size())
      throw AltError("join annotation references a variable that is not bound here", joins->span);
  }
  return std::make_shared<const Formula>(Formula{
      Formula::Quantified{polarity, std::move(bindings), std::move(grouping), std::move(joins), std::move(body)},
      span});
}

FormulaPtr make_and(std::vector<FormulaPtr> children, SourceSpan span) {
  if (children.size() < 2) throw AltError("and needs at least two operands", span);
  for (const auto& c : children)
    if (!c) throw AltError("null operand", span);
  return std::make_shared<const Formula>(Formula{Formula::And{std::move(children)}, span});
}

FormulaPtr make_or(std::vector<FormulaPtr> children, SourceSpan span) {
  if (children.size() < 2) throw AltError("or needs at least two operands", span);
  for (const auto& c : children)
    if (!c) throw AltError("null operand", span);
  return std::make_shared<const Formula>(Formula{Formula::Or{std::move(children)}, span});
}

FormulaPtr make_not(FormulaPtr child, SourceSpan span) {
  if (!child) throw AltError("not needs an operand", span);
  return std::make_shared<const Formula>(Formula{Formula::Not{std::move(child)}, span});
}

FormulaPtr make_compare(CompareOp op, TermPtr left, TermPtr right, SourceSpan span) {
  if (!left || !right) throw AltError("comparison needs two operands", span);
  if (contains_aggregate(*left) && contains_aggregate(*right))
    throw AltError("at most one side of a comparison may contain an aggregate", span);
  return std::make_shared<const Formula>(
      Formula{Formula::Atom{Predicate{Predicate::Compare{op, std::move(left), std::move(right)}}}, span});
}

FormulaPtr make_is_null(TermPtr term, bool negated, SourceSpan span) {
  if (!term) throw AltError("is null needs an operand", span);
  return std::make_shared<const Formula>(
      Formula{Formula::Atom{Predicate{Predicate::IsNull{std::move(term), negated}}}, span});
}

FormulaPtr make_true(SourceSpan span) {
  return std::make_shared<const Formula>(Formula{Formula::True{}, span});
}

FormulaPtr conjoin(std::vector<FormulaPtr> parts) {
  std::erase_if(parts, [](const FormulaPtr& f) { return std::holds_alternative<Formula::True>(f->node); });
  if (parts.empty()) return make_true();
  if (parts.size() == 1) return parts.front();
  return make_and(std::move(parts));
}

std::vector<FormulaPtr> conjuncts(const FormulaPtr& f) {
  std::vector<FormulaPtr> out;
  if (auto* a = std::get_if<Formula::And>(&f->node)) {
    for (const auto& c : a->children) {
      auto sub = conjuncts(c);
      out.insert(out.end(), sub.begin(), sub.end());
    }
  } else {
    out.push_back(f);
  }
  return out;
}

// ---- collections / programs ----

std::optional<std::size_t> HeadSpec::index_of(const std::string& attribute) const {
  for (std::size_t i = 0; i < attributes.size(); ++i)
    if (attributes[i] == attribute) return i;
  return std::nullopt;
}

CollectionPtr make_collection(HeadSpec head, FormulaPtr body, SourceSpan span) {
  if (head.relation.empty()) throw AltError("collection head needs a relation name", head.span);
  if (head.attributes.empty()) throw AltError("collection head needs at least one attribute", head.span);
  std::set<std::string> seen;
  for (const auto& a : head.attributes) {
    if (a.empty()) throw AltError("empty head attribute name", head.span);
    if (!seen.insert(a).second) throw AltError("duplicate head attribute '" + a + "'", head.span);
  }
  if (!body) throw AltError("collection needs a body", span);
  return std::make_shared<const CollectionExpr>(CollectionExpr{std::move(head), std::move(body), span});
}

const Definition* Program::find_definition(const std::string& name) const {
  for (const auto& d : definitions)
    if (d.name == name) return &d;
  return nullptr;
}

Program make_program(std::vector<Definition> definitions, std::variant<CollectionPtr, FormulaPtr> main) {
  std::set<std::string> names;
  for (const auto& d : definitions) {
    if (!d.collection) throw AltError("definition '" + d.name + "' has no collection", d.span);
    if (d.collection->head.relation != d.name)
      throw AltError("definition '" + d.name + "' must name its head '" + d.name + "'", d.span);
    if (!names.insert(d.name).second) throw AltError("duplicate definition '" + d.name + "'", d.span);
  }
  bool empty_main = std::visit([](const auto& p) { return p == nullptr; }, main);
  if (empty_main) throw AltError("program needs a main query or sentence");
  return Program{std::move(definitions), std::move(main)};
}

bool structurally_equal(const Program& a, const Program& b) { return to_json(a) == to_json(b); }

// ---- free references ----

namespace {

struct FreeRefCollector {
  std::vector<std::string> bound;
  std::set<AttributeRef> out;

  bool is_bound(const std::string& v) const {
    return std::find(bound.begin(), bound.end(), v) != bound.end();
  }

  void term(const Term& t) {
    std::visit(
        [&](const auto& n) {
          using N = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<N, Term::Attr>) {
            if (!is_bound(n.ref.variable)) out.insert(n.ref);
          } else if constexpr (std::is_same_v<N, Term::Arith>) {
            term(*n.left);
            term(*n.right);
          } else if constexpr (std::is_same_v<N, Term::Aggregate>) {
            term(*n.arg);
          }
        },
        t.node);
  }

  void collection(const CollectionExpr& c) {
    bound.push_back(c.head.relation);
    formula(*c.body);
    bound.pop_back();
  }

  void formula(const Formula& f) {
    std::visit(
        [&](const auto& n) {
          using N = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<N, Formula::Quantified>) {
            std::size_t mark = bound.size();
            for (const auto& b : n.bindings) bound.push_back(b.var);
            if (n.joins) {
              std::vector<std::string> lits;
              collect_literal_vars(*n.joins, lits);
              bound.insert(bound.end(), lits.begin(), lits.end());
            }
            for (const auto& b : n.bindings)
              if (auto* nested = std::get_if<Binding::Nested>(&b.source)) collection(*nested->collection);
            if (n.grouping)
              for (const auto& k : n.grouping->keys) term(*k);
            formula(*n.body);
            bound.resize(mark);
          } else if constexpr (std::is_same_v<N, Formula::And> || std::is_same_v<N, Formula::Or>) {
            for (const auto& c : n.children) formula(*c);
          } else if constexpr (std::is_same_v<N, Formula::Not>) {
            formula(*n.child);
          } else if constexpr (std::is_same_v<N, Formula::Atom>) {
            if (auto* c = std::get_if<Predicate::Compare>(&n.pred.node)) {
              term(*c->left);
              term(*c->right);
            } else {
              term(*std::get<Predicate::IsNull>(n.pred.node).term);
            }
          }
        },
        f.node);
  }
};

}  // namespace

std::set<AttributeRef> free_attribute_refs(const Formula& f) {
  FreeRefCollector c;
  c.formula(f);
  return c.out;
}

std::set<AttributeRef> free_attribute_refs(const CollectionExpr& coll) {
  FreeRefCollector c;
  c.collection(coll);
  return c.out;
}

}  // namespace arc
