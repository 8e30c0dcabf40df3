#include "arc/sql.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <map>
#include <set>

#include "arc/error.hpp"
#include "arc/evaluator.hpp"
#include "lexer.hpp"

namespace arc {

using detail::iequals;
using detail::Token;
using detail::TokenKind;

namespace {

[[noreturn]] void unsupported(const std::string& construct, SourceSpan span = {}) {
  throw ArcError("E_UNSUPPORTED_SQL", "unsupported SQL construct: " + construct, span);
}

constexpr std::array<std::string_view, 38> kReserved = {
    "select", "from",  "where",  "group",  "by",        "having", "order",   "limit", "offset", "join",
    "left",   "right", "full",   "outer",  "inner",     "cross",  "on",      "lateral", "as",   "and",
    "or",     "not",   "in",     "exists", "is",        "null",   "union",   "intersect", "except", "distinct",
    "true",   "false", "natural", "using", "case",      "between", "like",   "fetch"};

bool reserved(std::string_view s) {
  return std::any_of(kReserved.begin(), kReserved.end(), [&](std::string_view k) { return iequals(s, k); });
}

class SqlParser {
 public:
  explicit SqlParser(std::string_view text) : toks_(detail::tokenize(text, {true, false})) {}

  SqlSelect statement() {
    SqlSelect s = select();
    if (punct(";")) advance();
    trailing();
    if (cur().kind != TokenKind::End) fail({"end of statement"});
    return s;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;

  const Token& cur() const { return toks_[pos_]; }
  const Token& at(std::size_t ahead) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
  const Token& advance() { return toks_[pos_ == toks_.size() - 1 ? pos_ : pos_++]; }

  bool punct_at(std::size_t ahead, std::string_view p) const {
    return at(ahead).kind == TokenKind::Punct && at(ahead).text == p;
  }
  bool punct(std::string_view p) const { return punct_at(0, p); }
  bool kw_at(std::size_t ahead, std::string_view k) const {
    return at(ahead).kind == TokenKind::Name && iequals(at(ahead).text, k);
  }
  bool kw(std::string_view k) const { return kw_at(0, k); }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw ParseError(cur().span, std::move(expected), detail::describe(cur()));
  }
  void expect_punct(std::string_view p) {
    if (!punct(p)) fail({"'" + std::string(p) + "'"});
    advance();
  }
  void expect_kw(std::string_view k) {
    if (!kw(k)) fail({"'" + std::string(k) + "'"});
    advance();
  }
  bool accept_kw(std::string_view k) {
    if (!kw(k)) return false;
    advance();
    return true;
  }
  std::string identifier(const char* what) {
    if (cur().kind == TokenKind::QuotedName) return advance().text;
    if (cur().kind != TokenKind::Name || reserved(cur().text)) fail({what});
    return advance().text;
  }
  SourceSpan span_from(const SourceSpan& start) const {
    SourceSpan s = start;
    s.end = pos_ > 0 ? toks_[pos_ - 1].span.end : start.end;
    if (s.end < s.start) s.end = s.start;
    return s;
  }

  // Constructs after a complete select that the subset rejects.
  void trailing() {
    if (kw("order")) unsupported("ORDER BY", cur().span);
    if (kw("limit") || kw("offset") || kw("fetch")) unsupported(detail::lower(cur().text) == "limit" ? "LIMIT" : "OFFSET/FETCH", cur().span);
    if (kw("union") || kw("intersect") || kw("except")) unsupported("set operator " + detail::lower(cur().text), cur().span);
  }

  SqlSelect select() {
    SourceSpan start = cur().span;
    expect_kw("select");
    SqlSelect s;
    if (accept_kw("distinct")) s.distinct = true;
    else accept_kw("all");

    // select [not] exists (...) without FROM is a sentence
    std::size_t save = pos_;
    bool negated = false;
    if (kw("not") && kw_at(1, "exists")) {
      advance();
      negated = true;
    }
    if (kw("exists") && punct_at(1, "(")) {
      SourceSpan cs = cur().span;
      advance();
      expect_punct("(");
      auto sub = std::make_shared<SqlSelect>(select());
      expect_punct(")");
      if (!kw("from") && !punct(",")) {
        auto c = std::make_shared<SqlCond>();
        c->kind = SqlCond::Kind::Exists;
        c->negated = negated;
        c->subquery = sub;
        c->span = span_from(cs);
        s.sentence = c;
        s.span = span_from(start);
        return s;
      }
    }
    pos_ = save;

    s.items.push_back(select_item());
    while (punct(",")) {
      advance();
      s.items.push_back(select_item());
    }
    if (kw("into")) unsupported("SELECT INTO", cur().span);
    if (accept_kw("from")) {
      s.from.push_back(table_ref());
      while (punct(",")) {
        advance();
        s.from.push_back(table_ref());
      }
    }
    if (accept_kw("where")) s.where = cond();
    if (kw("group")) {
      advance();
      expect_kw("by");
      s.group_by.push_back(expr());
      while (punct(",")) {
        advance();
        s.group_by.push_back(expr());
      }
    }
    if (accept_kw("having")) s.having = cond();
    s.span = span_from(start);
    return s;
  }

  SqlSelectItem select_item() {
    SqlSelectItem item;
    if (punct("*")) {
      advance();
      item.star = true;
      return item;
    }
    if (cur().kind == TokenKind::Name && punct_at(1, ".") && punct_at(2, "*")) unsupported("qualified *", cur().span);
    item.expr = expr();
    if (accept_kw("as")) {
      item.alias = alias_after_as("column alias");
    } else if ((cur().kind == TokenKind::Name && !reserved(cur().text)) || cur().kind == TokenKind::QuotedName) {
      item.alias = advance().text;
    }
    return item;
  }

  // After AS any name is accepted (the paper aliases columns as `left`).
  std::string alias_after_as(const char* what) {
    if (cur().kind != TokenKind::Name && cur().kind != TokenKind::QuotedName) fail({what});
    return advance().text;
  }

  std::string optional_alias() {
    if (accept_kw("as")) return alias_after_as("alias");
    if ((cur().kind == TokenKind::Name && !reserved(cur().text)) || cur().kind == TokenKind::QuotedName)
      return advance().text;
    return "";
  }

  SqlTableRefPtr table_primary() {
    SourceSpan start = cur().span;
    auto t = std::make_shared<SqlTableRef>();
    bool lateral = accept_kw("lateral");
    if (punct("(")) {
      if (kw_at(1, "select")) {
        advance();
        t->kind = SqlTableRef::Kind::Derived;
        t->subquery = std::make_shared<SqlSelect>(select());
        expect_punct(")");
        t->lateral = lateral;
        t->alias = optional_alias();
        if (t->alias.empty()) fail({"alias for derived table"});
        t->span = span_from(start);
        return t;
      }
      if (lateral) fail({"subquery after LATERAL"});
      advance();
      SqlTableRefPtr inner = table_ref();
      expect_punct(")");
      return inner;
    }
    if (lateral) fail({"subquery after LATERAL"});
    t->kind = SqlTableRef::Kind::Table;
    t->name = identifier("table name");
    if (punct("(")) unsupported("table function " + t->name, start);
    t->alias = optional_alias();
    t->span = span_from(start);
    return t;
  }

  SqlTableRefPtr table_ref() {
    SqlTableRefPtr left = table_primary();
    for (;;) {
      SourceSpan start = cur().span;
      SqlTableRef::JoinKind kind;
      if (kw("natural")) unsupported("NATURAL JOIN", start);
      if (kw("right")) unsupported("RIGHT OUTER JOIN", start);
      if (kw("join") || (kw("inner") && kw_at(1, "join"))) {
        accept_kw("inner");
        kind = SqlTableRef::JoinKind::Inner;
      } else if (kw("left")) {
        kind = SqlTableRef::JoinKind::Left;
        advance();
        accept_kw("outer");
      } else if (kw("full")) {
        kind = SqlTableRef::JoinKind::Full;
        advance();
        accept_kw("outer");
      } else if (kw("cross")) {
        kind = SqlTableRef::JoinKind::Cross;
        advance();
      } else {
        return left;
      }
      expect_kw("join");
      auto j = std::make_shared<SqlTableRef>();
      j->kind = SqlTableRef::Kind::Join;
      j->join = kind;
      j->left = left;
      j->right = table_primary();
      if (kind != SqlTableRef::JoinKind::Cross) {
        if (kw("using")) unsupported("JOIN ... USING", cur().span);
        expect_kw("on");
        j->on = cond();
      }
      j->span = span_from(start);
      left = j;
    }
  }

  // ---- conditions ----

  SqlCondPtr cond() {
    SourceSpan start = cur().span;
    std::vector<SqlCondPtr> parts{conjunction()};
    while (accept_kw("or")) parts.push_back(conjunction());
    if (parts.size() == 1) return parts[0];
    auto c = std::make_shared<SqlCond>();
    c->kind = SqlCond::Kind::Or;
    c->children = std::move(parts);
    c->span = span_from(start);
    return c;
  }

  SqlCondPtr conjunction() {
    SourceSpan start = cur().span;
    std::vector<SqlCondPtr> parts{negation()};
    while (accept_kw("and")) parts.push_back(negation());
    if (parts.size() == 1) return parts[0];
    auto c = std::make_shared<SqlCond>();
    c->kind = SqlCond::Kind::And;
    c->children = std::move(parts);
    c->span = span_from(start);
    return c;
  }

  SqlCondPtr negation() {
    SourceSpan start = cur().span;
    if (kw("not") && !kw_at(1, "exists")) {
      advance();
      auto c = std::make_shared<SqlCond>();
      c->kind = SqlCond::Kind::Not;
      c->children.push_back(negation());
      c->span = span_from(start);
      return c;
    }
    return predicate();
  }

  SqlCondPtr predicate() {
    SourceSpan start = cur().span;
    auto c = std::make_shared<SqlCond>();
    if (kw("exists") || (kw("not") && kw_at(1, "exists"))) {
      c->negated = kw("not");
      if (c->negated) advance();
      advance();
      expect_punct("(");
      c->kind = SqlCond::Kind::Exists;
      c->subquery = std::make_shared<SqlSelect>(select());
      expect_punct(")");
      c->span = span_from(start);
      return c;
    }
    if (kw("true") && !punct_at(1, ".")) {
      advance();
      c->kind = SqlCond::Kind::True;
      c->span = span_from(start);
      return c;
    }
    if (punct("(") && !kw_at(1, "select")) {
      // either a parenthesized condition or an expression starting with '('
      std::size_t save = pos_;
      try {
        return comparison(start);
      } catch (const ParseError&) {
        pos_ = save;
      }
      advance();
      SqlCondPtr inner = cond();
      expect_punct(")");
      return inner;
    }
    return comparison(start);
  }

  SqlCondPtr comparison(const SourceSpan& start) {
    auto c = std::make_shared<SqlCond>();
    c->left = expr();
    if (kw("is")) {
      advance();
      c->kind = SqlCond::Kind::IsNull;
      c->negated = accept_kw("not");
      expect_kw("null");
    } else if (kw("in") || (kw("not") && kw_at(1, "in"))) {
      c->negated = kw("not");
      if (c->negated) advance();
      advance();
      expect_punct("(");
      if (!kw("select")) unsupported("IN (value list)", cur().span);
      c->kind = SqlCond::Kind::In;
      c->subquery = std::make_shared<SqlSelect>(select());
      expect_punct(")");
    } else if (kw("between") || (kw("not") && kw_at(1, "between"))) {
      unsupported("BETWEEN", cur().span);
    } else if (kw("like") || (kw("not") && kw_at(1, "like"))) {
      unsupported("LIKE", cur().span);
    } else {
      std::optional<CompareOp> op;
      if (cur().kind == TokenKind::Punct) op = parse_compare_op(cur().text == "!=" ? "<>" : cur().text);
      if (!op) fail({"comparison operator", "IS", "IN"});
      advance();
      if (kw("any") || kw("all") || kw("some")) unsupported("quantified comparison " + detail::lower(cur().text), cur().span);
      c->kind = SqlCond::Kind::Compare;
      c->op = *op;
      c->right = expr();
    }
    c->span = span_from(start);
    return c;
  }

  // ---- expressions ----

  SqlExprPtr binary(ArithOp op, SqlExprPtr l, SqlExprPtr r, const SourceSpan& start) {
    auto e = std::make_shared<SqlExpr>();
    e->kind = SqlExpr::Kind::Arith;
    e->op = op;
    e->left = std::move(l);
    e->right = std::move(r);
    e->span = span_from(start);
    return e;
  }

  SqlExprPtr expr() {
    SourceSpan start = cur().span;
    SqlExprPtr e = term();
    while (punct("+") || punct("-")) {
      ArithOp op = advance().text == "+" ? ArithOp::Add : ArithOp::Sub;
      e = binary(op, e, term(), start);
    }
    return e;
  }

  SqlExprPtr term() {
    SourceSpan start = cur().span;
    SqlExprPtr e = factor();
    while (punct("*") || punct("/")) {
      ArithOp op = advance().text == "*" ? ArithOp::Mul : ArithOp::Div;
      e = binary(op, e, factor(), start);
    }
    return e;
  }

  SqlExprPtr factor() {
    SourceSpan start = cur().span;
    auto e = std::make_shared<SqlExpr>();
    const Token& t = cur();
    if (punct("-")) {
      advance();
      SqlExprPtr inner = factor();
      if (inner->kind == SqlExpr::Kind::Literal && inner->literal.is_numeric()) {
        auto neg = std::make_shared<SqlExpr>(*inner);
        neg->literal = inner->literal.tag() == ValueTag::Int ? Value::integer(-inner->literal.as_int())
                                                             : Value::decimal(-inner->literal.as_dec());
        neg->span = span_from(start);
        return neg;
      }
      auto zero = std::make_shared<SqlExpr>();
      zero->literal = Value::integer(0);
      return binary(ArithOp::Sub, zero, inner, start);
    }
    if (t.kind == TokenKind::Int || t.kind == TokenKind::Dec) {
      e->literal = Value::parse_number(advance().text);
    } else if (t.kind == TokenKind::String) {
      e->literal = Value::text(advance().text);
    } else if (kw("null")) {
      advance();
      e->literal = Value::null();
    } else if ((kw("true") || kw("false")) && !punct_at(1, ".")) {
      e->literal = Value::boolean(iequals(advance().text, "true"));
    } else if (punct("(")) {
      advance();
      if (kw("select")) {
        e->kind = SqlExpr::Kind::Subquery;
        e->subquery = std::make_shared<SqlSelect>(select());
        expect_punct(")");
      } else {
        SqlExprPtr inner = expr();
        expect_punct(")");
        return inner;
      }
    } else if (kw("case")) {
      unsupported("CASE", t.span);
    } else if (t.kind == TokenKind::QuotedName && punct_at(1, "(")) {
      unsupported("relation predicate " + t.text + "(...)", t.span);
    } else if (t.kind == TokenKind::Name && punct_at(1, "(")) {
      auto fn = parse_agg_fn(detail::lower(t.text));
      if (!fn) unsupported("function " + t.text, t.span);
      advance();
      advance();
      e->kind = SqlExpr::Kind::Aggregate;
      e->fn = *fn;
      if (punct("*")) {
        if (*fn != AggFn::Count) fail({"expression"});
        advance();
      } else {
        if (accept_kw("distinct")) {
          if (*fn != AggFn::Count) unsupported(std::string(to_string(*fn)) + "(DISTINCT ...)", t.span);
          e->fn = AggFn::CountDistinct;
        }
        e->arg = expr();
      }
      expect_punct(")");
      if (kw("over")) unsupported("window function", cur().span);
    } else if (t.kind == TokenKind::Name || t.kind == TokenKind::QuotedName) {
      if (t.kind == TokenKind::Name && reserved(t.text)) fail({"expression"});
      e->kind = SqlExpr::Kind::Column;
      std::string first = advance().text;
      if (punct(".")) {
        advance();
        e->qualifier = first;
        if (cur().kind != TokenKind::Name && cur().kind != TokenKind::QuotedName) fail({"column name"});
        e->name = advance().text;
      } else {
        e->name = first;
      }
    } else {
      fail({"expression"});
    }
    e->span = span_from(start);
    return e;
  }
};

// ---------------------------------------------------------------------------
// translation

struct Source {
  std::string qualifier;
  std::string var;
  std::optional<std::vector<std::string>> columns;
};

struct FromResult {
  std::vector<Binding> bindings;
  JoinTreePtr joins;  // null unless an outer join is present
  std::vector<FormulaPtr> conds;
};

std::string abbreviation(AggFn fn) {
  switch (fn) {
    case AggFn::Sum: return "sm";
    case AggFn::Avg: return "av";
    case AggFn::Count: return "ct";
    case AggFn::CountDistinct: return "cd";
    case AggFn::Min: return "mn";
    case AggFn::Max: return "mx";
  }
  return "agg";
}

std::string capitalized(const std::string& s) {
  std::string out = s;
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

void collect_leaf_vars(const JoinTreePtr& t, std::set<std::string>& out) {
  std::vector<std::string> leaves;
  join_leaf_vars(*t, leaves);
  out.insert(leaves.begin(), leaves.end());
}

std::set<std::string> formula_vars(const FormulaPtr& f) {
  std::set<std::string> out;
  for (const auto& ref : free_attribute_refs(*f)) out.insert(ref.variable);
  return out;
}

bool contains_aggregate(const FormulaPtr& f) {
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
            found = found || arc::contains_aggregate(n.pred);
          }
        },
        g->node);
  };
  walk(f);
  return found;
}

void subqueries_in(const SqlExprPtr& e, std::vector<const SqlExpr*>& out) {
  if (!e) return;
  if (e->kind == SqlExpr::Kind::Subquery) {
    out.push_back(e.get());
    return;
  }
  subqueries_in(e->left, out);
  subqueries_in(e->right, out);
  subqueries_in(e->arg, out);
}

bool has_aggregate(const SqlExprPtr& e) {
  if (!e) return false;
  if (e->kind == SqlExpr::Kind::Aggregate) return true;
  return has_aggregate(e->left) || has_aggregate(e->right);
}

const char* const kPlaceholder = "\x01sub";

TermPtr replace_placeholder(const TermPtr& t, const TermPtr& with) {
  return std::visit(
      [&](const auto& n) -> TermPtr {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Term::Attr>) {
          return n.ref.variable == kPlaceholder ? with : t;
        } else if constexpr (std::is_same_v<N, Term::Arith>) {
          return make_arith(n.op, replace_placeholder(n.left, with), replace_placeholder(n.right, with), t->span);
        } else if constexpr (std::is_same_v<N, Term::Aggregate>) {
          return make_aggregate(n.fn, replace_placeholder(n.arg, with), t->span);
        } else {
          return t;
        }
      },
      t->node);
}

class Translator {
 public:
  explicit Translator(const SqlTranslateOptions& options) : options_(options) {}

  Program program(const SqlSelect& s) {
    if (s.sentence) return make_program({}, formula(*s.sentence));
    return make_program({}, collection(s, "Q"));
  }

 private:
  const SqlTranslateOptions& options_;
  std::vector<std::vector<Source>> scopes_;
  std::set<std::string> used_;
  std::map<const SqlExpr*, TermPtr> subst_;

  std::string fresh(const std::string& base) {
    std::string b = base.empty() ? "t" : base;
    if (used_.insert(b).second) return b;
    for (int k = 2;; ++k) {
      std::string n = b + std::to_string(k);
      if (used_.insert(n).second) return n;
    }
  }

  std::optional<std::vector<std::string>> catalog_columns(const std::string& table) const {
    if (!options_.catalog) return std::nullopt;
    auto it = options_.catalog->find(table);
    if (it == options_.catalog->end()) return std::nullopt;
    return it->second;
  }

  void warn(const std::string& code, const std::string& message, SourceSpan span) {
    if (options_.warnings) options_.warnings->push_back(Diagnostic{Severity::Warning, code, span, message});
  }

  // ---- names ----

  static std::string column_spelling(const Source& s, const std::string& name) {
    if (!s.columns) return name;
    for (const auto& c : *s.columns)
      if (iequals(c, name)) return c;
    return name;
  }

  static bool has_column(const Source& s, const std::string& name) {
    return s.columns && std::any_of(s.columns->begin(), s.columns->end(), [&](const auto& c) { return iequals(c, name); });
  }

  TermPtr column(const SqlExpr& e) {
    for (auto scope = scopes_.rbegin(); scope != scopes_.rend(); ++scope) {
      if (!e.qualifier.empty()) {
        for (auto s = scope->rbegin(); s != scope->rend(); ++s)
          if (iequals(s->qualifier, e.qualifier)) {
            if (s->columns && !has_column(*s, e.name))
              throw ArcError("E_UNKNOWN_ATTRIBUTE", e.qualifier + " has no column " + e.name, e.span);
            return make_attr(s->var, column_spelling(*s, e.name), e.span);
          }
        continue;
      }
      std::vector<const Source*> known, unknown;
      for (const auto& s : *scope) {
        if (has_column(s, e.name)) known.push_back(&s);
        else if (!s.columns) unknown.push_back(&s);
      }
      if (known.size() > 1 || (known.empty() && unknown.size() > 1))
        unsupported("ambiguous unqualified column " + e.name, e.span);
      const Source* s = known.empty() ? (unknown.empty() ? nullptr : unknown[0]) : known[0];
      if (s) return make_attr(s->var, column_spelling(*s, e.name), e.span);
    }
    if (!e.qualifier.empty()) throw ArcError("E_UNBOUND_VAR", "unknown table " + e.qualifier, e.span);
    throw ArcError("E_UNKNOWN_ATTRIBUTE", "no table in scope has column " + e.name, e.span);
  }

  TermPtr first_attribute_of_scope(const SourceSpan& span) {
    if (scopes_.empty() || scopes_.back().empty()) unsupported("COUNT(*) without FROM", span);
    const Source& s = scopes_.back().front();
    if (!s.columns || s.columns->empty()) unsupported("COUNT(*) over a relation with unknown schema", span);
    return make_attr(s.var, s.columns->front(), span);
  }

  TermPtr term(const SqlExprPtr& e) {
    auto it = subst_.find(e.get());
    if (it != subst_.end()) return it->second;
    switch (e->kind) {
      case SqlExpr::Kind::Literal: return make_constant(e->literal, e->span);
      case SqlExpr::Kind::Column: return column(*e);
      case SqlExpr::Kind::Arith: return make_arith(e->op, term(e->left), term(e->right), e->span);
      case SqlExpr::Kind::Aggregate:
        return make_aggregate(e->fn, e->arg ? term(e->arg) : first_attribute_of_scope(e->span), e->span);
      case SqlExpr::Kind::Subquery: unsupported("scalar subquery in this position", e->span);
    }
    return nullptr;
  }

  std::string item_name(const SqlSelectItem& item, std::size_t index) {
    if (!item.alias.empty()) return item.alias;
    const SqlExpr& e = *item.expr;
    if (e.kind == SqlExpr::Kind::Column) return e.name;
    if (e.kind == SqlExpr::Kind::Aggregate) return abbreviation(e.fn);
    if (e.kind == SqlExpr::Kind::Subquery && e.subquery->items.size() == 1 && e.subquery->items[0].expr)
      return item_name(e.subquery->items[0], index);
    return "col" + std::to_string(index + 1);
  }

  static std::string unique_in(std::vector<std::string>& names, std::string name) {
    std::string base = name;
    for (int k = 2; std::find(names.begin(), names.end(), name) != names.end(); ++k) name = base + std::to_string(k);
    names.push_back(name);
    return name;
  }

  // Select list with `*` expanded against the current scope.
  std::vector<std::pair<std::string, SqlExprPtr>> items(const SqlSelect& s) {
    std::vector<std::pair<std::string, SqlExprPtr>> out;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      const auto& item = s.items[i];
      if (!item.star) {
        out.emplace_back(unique_in(names, item_name(item, i)), item.expr);
        continue;
      }
      for (const auto& src : scopes_.back()) {
        if (!src.columns) unsupported("SELECT * over a relation with unknown schema", s.span);
        for (const auto& c : *src.columns) {
          auto e = std::make_shared<SqlExpr>();
          e->kind = SqlExpr::Kind::Column;
          e->qualifier = src.qualifier;
          e->name = c;
          out.emplace_back(unique_in(names, c), e);
        }
      }
    }
    return out;
  }

  // ---- FROM ----

  JoinTreePtr table_ref(const SqlTableRefPtr& ref, FromResult& out, bool& outer) {
    switch (ref->kind) {
      case SqlTableRef::Kind::Table: {
        std::string qualifier = ref->alias.empty() ? ref->name : ref->alias;
        std::string var = fresh(detail::lower(qualifier));
        out.bindings.push_back(Binding{var, Binding::Named{ref->name}, ref->span});
        scopes_.back().push_back(Source{qualifier, var, catalog_columns(ref->name)});
        return make_leaf(var, ref->span);
      }
      case SqlTableRef::Kind::Derived: {
        // non-lateral derived tables cannot see their FROM siblings
        std::vector<Source> siblings;
        if (!ref->lateral) std::swap(siblings, scopes_.back());
        CollectionPtr c = collection(*ref->subquery, fresh(capitalized(ref->alias)));
        if (!ref->lateral) std::swap(siblings, scopes_.back());
        std::string var = fresh(detail::lower(ref->alias));
        out.bindings.push_back(Binding{var, Binding::Nested{c}, ref->span});
        scopes_.back().push_back(Source{ref->alias, var, c->head.attributes});
        return make_leaf(var, ref->span);
      }
      case SqlTableRef::Kind::Join: break;
    }
    JoinTreePtr left = table_ref(ref->left, out, outer);
    JoinTreePtr right = table_ref(ref->right, out, outer);
    std::vector<FormulaPtr> on;
    if (ref->on) on = conjuncts(formula(*ref->on));
    if (ref->join == SqlTableRef::JoinKind::Inner || ref->join == SqlTableRef::JoinKind::Cross) {
      for (auto& f : on)
        if (!std::holds_alternative<Formula::True>(f->node)) out.conds.push_back(f);
      return make_join(JoinTree::Kind::Inner, {left, right}, ref->span);
    }
    outer = true;
    bool full = ref->join == SqlTableRef::JoinKind::Full;
    std::set<std::string> left_vars, right_vars;
    collect_leaf_vars(left, left_vars);
    collect_leaf_vars(right, right_vars);
    for (auto& f : on) {
      if (std::holds_alternative<Formula::True>(f->node)) continue;
      std::set<std::string> vars = formula_vars(f);
      bool l = std::any_of(vars.begin(), vars.end(), [&](const auto& v) { return left_vars.count(v) > 0; });
      bool r = std::any_of(vars.begin(), vars.end(), [&](const auto& v) { return right_vars.count(v) > 0; });
      if (l && r) {
        out.conds.push_back(f);
        continue;
      }
      // single-side condition: lift its constant into a literal leaf
      auto* atom = std::get_if<Formula::Atom>(&f->node);
      auto* cmp = atom ? std::get_if<Predicate::Compare>(&atom->pred.node) : nullptr;
      bool left_const = cmp && std::holds_alternative<Term::Constant>(cmp->left->node);
      bool right_const = cmp && std::holds_alternative<Term::Constant>(cmp->right->node);
      if (!(l || r) || !(left_const != right_const))
        unsupported("single-side ON condition without a constant", f->span);
      const Value& value = std::get<Term::Constant>((left_const ? cmp->left : cmp->right)->node).value;
      std::string v = fresh("v");
      TermPtr lit = make_attr(v, "val", f->span);
      out.conds.push_back(left_const ? make_compare(cmp->op, lit, cmp->right, f->span)
                                     : make_compare(cmp->op, cmp->left, lit, f->span));
      JoinTreePtr leaf = make_literal_leaf(value, v, f->span);
      bool with_right = !full || l;
      JoinTreePtr& side = with_right ? right : left;
      if (side->kind == JoinTree::Kind::Inner) {
        std::vector<JoinTreePtr> children{leaf};
        children.insert(children.end(), side->children.begin(), side->children.end());
        side = make_join(JoinTree::Kind::Inner, std::move(children), side->span);
      } else {
        side = make_join(JoinTree::Kind::Inner, {leaf, side}, side->span);
      }
    }
    return make_join(full ? JoinTree::Kind::Full : JoinTree::Kind::Left, {left, right}, ref->span);
  }

  // Pushes the FROM sources of `s` onto the current (already pushed) scope.
  FromResult from(const SqlSelect& s) {
    FromResult out;
    bool outer = false;
    std::vector<JoinTreePtr> roots;
    for (const auto& ref : s.from) roots.push_back(table_ref(ref, out, outer));
    if (outer) out.joins = roots.size() == 1 ? roots[0] : make_join(JoinTree::Kind::Inner, roots);
    return out;
  }

  std::vector<FormulaPtr> where(const SqlSelect& s, const FromResult& fr) {
    if (!s.where) return {};
    std::vector<FormulaPtr> out;
    std::set<std::string> leaves;
    if (fr.joins) collect_leaf_vars(fr.joins, leaves);
    for (auto& f : conjuncts(formula(*s.where))) {
      if (std::holds_alternative<Formula::True>(f->node)) continue;
      if (fr.joins && std::holds_alternative<Formula::Atom>(f->node)) {
        std::set<std::string> vars = formula_vars(f);
        auto n = std::count_if(vars.begin(), vars.end(), [&](const auto& v) { return leaves.count(v) > 0; });
        if (n > 1) unsupported("WHERE predicate spanning an outer join", f->span);
      }
      out.push_back(f);
    }
    return out;
  }

  // ---- conditions ----

  using Extra = std::function<std::vector<FormulaPtr>(const std::vector<TermPtr>& items)>;

  FormulaPtr subquery_formula(const SqlSelect& sub, Polarity polarity, const Extra& extra, SourceSpan span,
                              bool needs_items = true) {
    if (sub.sentence) unsupported("nested select without FROM", span);
    bool lateral_items = false;
    for (const auto& item : sub.items) {
      std::vector<const SqlExpr*> subs;
      subqueries_in(item.expr, subs);
      lateral_items = lateral_items || !subs.empty();
    }
    if (!sub.group_by.empty() || sub.having || lateral_items || sub.from.empty()) {
      CollectionPtr c = collection(sub, fresh("X"));
      std::string var = fresh("x");
      std::vector<TermPtr> attrs;
      for (const auto& a : c->head.attributes) attrs.push_back(make_attr(var, a, span));
      auto parts = extra(attrs);
      return make_quantified(polarity, {Binding{var, Binding::Nested{c}, span}}, std::nullopt, nullptr,
                             conjoin(std::move(parts)), span);
    }
    scopes_.emplace_back();
    FromResult fr = from(sub);
    std::vector<FormulaPtr> body = fr.conds;
    auto w = where(sub, fr);
    body.insert(body.end(), w.begin(), w.end());
    std::vector<TermPtr> terms;
    if (needs_items)
      for (const auto& entry : items(sub)) terms.push_back(term(entry.second));
    auto parts = extra(terms);
    bool grouped = std::any_of(parts.begin(), parts.end(), [](const FormulaPtr& f) { return contains_aggregate(f); });
    body.insert(body.end(), parts.begin(), parts.end());
    scopes_.pop_back();
    std::optional<GroupingOp> grouping;
    if (grouped) grouping = GroupingOp{};
    return make_quantified(polarity, std::move(fr.bindings), std::move(grouping), fr.joins, conjoin(std::move(body)),
                           span);
  }

  // Outer-scope translation of `e` with the scalar subquery `sub` as a placeholder.
  TermPtr with_placeholder(const SqlExprPtr& e, const SqlExpr* sub) {
    if (sub) subst_[sub] = make_attr(kPlaceholder, "v");
    TermPtr t = term(e);
    if (sub) subst_.erase(sub);
    return t;
  }

  FormulaPtr formula(const SqlCond& c) {
    switch (c.kind) {
      case SqlCond::Kind::True: return make_true(c.span);
      case SqlCond::Kind::And:
      case SqlCond::Kind::Or: {
        std::vector<FormulaPtr> parts;
        for (const auto& ch : c.children) parts.push_back(formula(*ch));
        return c.kind == SqlCond::Kind::And ? make_and(std::move(parts), c.span) : make_or(std::move(parts), c.span);
      }
      case SqlCond::Kind::Not: return make_not(formula(*c.children[0]), c.span);
      case SqlCond::Kind::IsNull: return make_is_null(term(c.left), c.negated, c.span);
      case SqlCond::Kind::Exists:
        return subquery_formula(*c.subquery, c.negated ? Polarity::NotExists : Polarity::Exists,
                                [](const std::vector<TermPtr>&) { return std::vector<FormulaPtr>{}; }, c.span,
                                false);
      case SqlCond::Kind::In: {
        std::vector<const SqlExpr*> nested;
        subqueries_in(c.left, nested);
        if (!nested.empty()) unsupported("scalar subquery on the left of IN", c.span);
        TermPtr x = term(c.left);
        SourceSpan span = c.span;
        if (c.negated) {
          // x NOT IN (select a ...) holds iff no a equals x and neither side is null
          return subquery_formula(*c.subquery, Polarity::NotExists, [&](const std::vector<TermPtr>& items) {
            if (items.size() != 1) unsupported("NOT IN over a multi-column subquery", span);
            return std::vector<FormulaPtr>{make_or({make_compare(CompareOp::Eq, items[0], x, span),
                                                    make_is_null(items[0], false, span), make_is_null(x, false, span)},
                                                   span)};
          }, span);
        }
        return subquery_formula(*c.subquery, Polarity::Exists, [&](const std::vector<TermPtr>& items) {
          if (items.size() != 1) unsupported("IN over a multi-column subquery", span);
          return std::vector<FormulaPtr>{make_compare(CompareOp::Eq, x, items[0], span)};
        }, span);
      }
      case SqlCond::Kind::Compare: {
        std::vector<const SqlExpr*> subs;
        subqueries_in(c.left, subs);
        subqueries_in(c.right, subs);
        if (subs.empty()) return make_compare(c.op, term(c.left), term(c.right), c.span);
        if (subs.size() > 1) unsupported("comparison between scalar subqueries", c.span);
        // scalar subquery as a comparison operand: one inline scope, grouped when it aggregates
        const SqlExpr* sub = subs[0];
        TermPtr l = with_placeholder(c.left, sub);
        TermPtr r = with_placeholder(c.right, sub);
        CompareOp op = c.op;
        SourceSpan span = c.span;
        return subquery_formula(*sub->subquery, Polarity::Exists, [&](const std::vector<TermPtr>& items) {
          if (items.size() != 1) unsupported("scalar subquery with several columns", span);
          return std::vector<FormulaPtr>{
              make_compare(op, replace_placeholder(l, items[0]), replace_placeholder(r, items[0]), span)};
        }, span);
      }
    }
    return make_true(c.span);
  }

  // ---- collections ----

  CollectionPtr collection(const SqlSelect& s, const std::string& head) {
    if (s.sentence) unsupported("select [not] exists (...) as a subquery", s.span);
    if (s.from.empty()) unsupported("SELECT without FROM", s.span);
    if (s.having) return having_collection(s, head);

    scopes_.emplace_back();
    FromResult fr = from(s);
    auto list = items(s);
    auto laterals = lateral_items(list, fr);
    std::vector<std::string> names;
    std::vector<FormulaPtr> body;
    std::vector<TermPtr> assigned;
    bool aggregates = false;
    for (const auto& [name, e] : list) {
      names.push_back(name);
      TermPtr t = term(e);
      aggregates = aggregates || has_aggregate(e);
      assigned.push_back(t);
      body.push_back(make_compare(CompareOp::Eq, make_attr(head, name, e->span), t, e->span));
    }
    for (auto& w : fr.conds) body.push_back(w);
    for (auto& w : where(s, fr)) body.push_back(w);

    std::optional<GroupingOp> grouping;
    if (!s.group_by.empty()) {
      grouping.emplace();
      for (const auto& k : s.group_by) {
        TermPtr t = term(k);
        if (!as_attr(*t)) unsupported("GROUP BY on a computed expression", k->span);
        grouping->keys.push_back(t);
      }
    } else if (aggregates) {
      grouping.emplace();
    } else if (s.distinct) {
      grouping.emplace();
      for (const auto& t : assigned) {
        if (!as_attr(*t)) unsupported("DISTINCT over a computed expression", s.span);
        grouping->keys.push_back(t);
      }
    }
    if (grouping && fr.joins && has_outer_join(*fr.joins) && !grouping->keys.empty())
      warn("W_LEFT_JOIN_GROUP_BY",
           "outer join followed by grouping counts the null-extended row once per key; the result assumes the "
           "grouping key is a key of the preserved side",
           s.span);
    scopes_.pop_back();
    for (auto& b : laterals) fr.bindings.push_back(std::move(b));
    JoinTreePtr joins = fr.joins;
    if (joins && !laterals.empty()) {
      std::vector<JoinTreePtr> children{joins};
      for (std::size_t i = fr.bindings.size() - laterals.size(); i < fr.bindings.size(); ++i)
        children.push_back(make_leaf(fr.bindings[i].var));
      joins = make_join(JoinTree::Kind::Inner, std::move(children));
    }
    FormulaPtr q = make_quantified(Polarity::Exists, std::move(fr.bindings), std::move(grouping), joins,
                                   conjoin(std::move(body)), s.span);
    return make_collection(HeadSpec{head, names, s.span}, q, s.span);
  }

  // Scalar subqueries in the select list become lateral nested collections.
  std::vector<Binding> lateral_items(const std::vector<std::pair<std::string, SqlExprPtr>>& list, FromResult& fr) {
    (void)fr;
    std::vector<Binding> out;
    for (const auto& entry : list) {
      std::vector<const SqlExpr*> subs;
      subqueries_in(entry.second, subs);
      for (const SqlExpr* sub : subs) {
        CollectionPtr c = collection(*sub->subquery, fresh("X"));
        if (c->head.attributes.size() != 1) unsupported("scalar subquery with several columns", sub->span);
        std::string var = fresh("x");
        out.push_back(Binding{var, Binding::Nested{c}, sub->span});
        subst_[sub] = make_attr(var, c->head.attributes[0], sub->span);
      }
    }
    return out;
  }

  CollectionPtr having_collection(const SqlSelect& s, const std::string& head) {
    std::string inner_head = fresh("X");
    std::string var = fresh("x");

    scopes_.emplace_back();
    FromResult fr = from(s);
    auto list = items(s);
    auto laterals = lateral_items(list, fr);
    std::vector<std::string> inner_names;
    std::vector<FormulaPtr> body;
    for (const auto& [name, e] : list) {
      inner_names.push_back(name);
      body.push_back(make_compare(CompareOp::Eq, make_attr(inner_head, name, e->span), term(e), e->span));
    }
    // HAVING operands become extra attributes of the grouped collection
    std::map<const SqlExpr*, TermPtr> outer_subst;
    std::function<void(const SqlExprPtr&)> hidden = [&](const SqlExprPtr& e) {
      if (!e) return;
      if (e->kind == SqlExpr::Kind::Subquery) unsupported("scalar subquery in HAVING", e->span);
      if (e->kind == SqlExpr::Kind::Aggregate || e->kind == SqlExpr::Kind::Column) {
        std::string name;
        for (const auto& [n, item] : list)
          if (item->kind == SqlExpr::Kind::Column && e->kind == SqlExpr::Kind::Column &&
              iequals(item->name, e->name) && iequals(item->qualifier, e->qualifier))
            name = n;
        if (name.empty()) {
          name = unique_in(inner_names, e->kind == SqlExpr::Kind::Aggregate ? abbreviation(e->fn) : e->name);
          body.push_back(make_compare(CompareOp::Eq, make_attr(inner_head, name, e->span), term(e), e->span));
        }
        outer_subst[e.get()] = make_attr(var, name, e->span);
        return;
      }
      hidden(e->left);
      hidden(e->right);
    };
    std::function<void(const SqlCond&)> walk = [&](const SqlCond& c) {
      if (c.kind == SqlCond::Kind::In || c.kind == SqlCond::Kind::Exists) unsupported("subquery in HAVING", c.span);
      hidden(c.left);
      hidden(c.right);
      for (const auto& ch : c.children) walk(*ch);
    };
    walk(*s.having);
    for (auto& w : fr.conds) body.push_back(w);
    for (auto& w : where(s, fr)) body.push_back(w);
    GroupingOp grouping;
    for (const auto& k : s.group_by) {
      TermPtr t = term(k);
      if (!as_attr(*t)) unsupported("GROUP BY on a computed expression", k->span);
      grouping.keys.push_back(t);
    }
    scopes_.pop_back();
    for (auto& b : laterals) fr.bindings.push_back(std::move(b));
    if (fr.joins && !laterals.empty()) unsupported("scalar subquery in the select list of an outer join with HAVING", s.span);
    CollectionPtr inner = make_collection(
        HeadSpec{inner_head, inner_names, s.span},
        make_quantified(Polarity::Exists, std::move(fr.bindings), grouping, fr.joins, conjoin(std::move(body)), s.span),
        s.span);

    std::vector<std::string> names;
    std::vector<FormulaPtr> outer_body;
    std::optional<GroupingOp> distinct;
    if (s.distinct) distinct.emplace();
    for (const auto& [name, e] : list) {
      names.push_back(name);
      TermPtr t = make_attr(var, name, e->span);
      outer_body.push_back(make_compare(CompareOp::Eq, make_attr(head, name, e->span), t, e->span));
      if (distinct) distinct->keys.push_back(t);
    }
    for (auto& [e, t] : outer_subst) subst_[e] = t;
    outer_body.push_back(formula(*s.having));
    for (auto& [e, t] : outer_subst) subst_.erase(e);
    FormulaPtr q = make_quantified(Polarity::Exists, {Binding{var, Binding::Nested{inner}, s.span}}, distinct, nullptr,
                                   conjoin(std::move(outer_body)), s.span);
    return make_collection(HeadSpec{head, names, s.span}, q, s.span);
  }
};

}  // namespace

SqlSelect parse_sql(std::string_view text) { return SqlParser(text).statement(); }

Program translate_sql(const SqlSelect& ast, const SqlTranslateOptions& options) {
  try {
    return Translator(options).program(ast);
  } catch (const AltError& e) {
    throw ArcError("E_UNSUPPORTED_SQL", std::string("translation produced an invalid ALT: ") + e.what(), e.span());
  }
}

Relation sql_roundtrip_eval(std::string_view text, const Database& db, const Conventions& conv) {
  Catalog catalog = db.catalog();
  SqlTranslateOptions options;
  options.catalog = &catalog;
  Program p = translate_sql(parse_sql(text), options);
  return evaluate_program(p, db, conv);
}

}  // namespace arc
