#include "arc/syntax.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "arc/error.hpp"
#include "lexer.hpp"

namespace arc {

using detail::Token;
using detail::TokenKind;
using detail::iequals;

namespace {

constexpr std::array<std::string_view, 23> kKeywords = {
    "def",  "abstract", "exists", "not", "and",  "or",    "in",  "ext",   "group",
    "inner", "left",    "full",   "lit", "as",   "is",    "null", "true", "false",
    "sum",  "count",    "avg",    "min", "max"};

bool is_keyword(std::string_view s) {
  if (iequals(s, "countdistinct")) return true;
  return std::any_of(kKeywords.begin(), kKeywords.end(), [&](std::string_view k) { return iequals(s, k); });
}

bool plain_identifier(const std::string& s) {
  if (s.empty()) return false;
  auto c0 = static_cast<unsigned char>(s[0]);
  if (!(std::isalpha(c0) || c0 == '_' || c0 == '$' || (c0 & 0x80))) return false;
  for (unsigned char c : s)
    if (!(std::isalnum(c) || c == '_' || c == '$' || (c & 0x80))) return false;
  return true;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(detail::tokenize(text)) {}

  Program program() {
    std::vector<Definition> defs;
    while (kw("def") || (kw("abstract") && kw_at(1, "def"))) defs.push_back(definition());
    std::variant<CollectionPtr, FormulaPtr> main;
    if (punct("{")) {
      main = collection();
    } else {
      main = formula();
    }
    if (cur().kind != TokenKind::End) fail({"end of input"});
    return guard(cur().span, [&] { return make_program(std::move(defs), std::move(main)); });
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;

  const Token& cur() const { return toks_[pos_]; }
  const Token& at(std::size_t ahead) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }

  bool punct_at(std::size_t ahead, std::string_view p) const {
    const Token& t = at(ahead);
    return t.kind == TokenKind::Punct && t.text == p;
  }
  bool punct(std::string_view p) const { return punct_at(0, p); }
  bool kw_at(std::size_t ahead, std::string_view k) const {
    const Token& t = at(ahead);
    return t.kind == TokenKind::Name && iequals(t.text, k);
  }
  // A keyword only when it is not the variable of an attribute reference.
  bool kw(std::string_view k) const { return kw_at(0, k) && !punct_at(1, "."); }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    throw ParseError(cur().span, std::move(expected), detail::describe(cur()));
  }

  const Token& advance() { return toks_[pos_ == toks_.size() - 1 ? pos_ : pos_++]; }

  const Token& expect_punct(std::string_view p) {
    if (!punct(p)) fail({"'" + std::string(p) + "'"});
    return advance();
  }
  const Token& expect_kw(std::string_view k) {
    if (!kw_at(0, k)) fail({"'" + std::string(k) + "'"});
    return advance();
  }

  std::string name(const char* what) {
    if (cur().kind != TokenKind::Name && cur().kind != TokenKind::QuotedName) fail({what});
    return advance().text;
  }

  SourceSpan span_from(const SourceSpan& start) const {
    SourceSpan s = start;
    s.end = pos_ > 0 ? toks_[pos_ - 1].span.end : start.end;
    if (s.end < s.start) s.end = s.start;
    return s;
  }

  // Converts construction-time invariant violations into parse errors at `span`.
  template <class F>
  auto guard(const SourceSpan& span, F&& f) -> decltype(f()) {
    try {
      return f();
    } catch (const AltError& e) {
      throw ParseError(span, {}, e.what());
    }
  }

  Definition definition() {
    SourceSpan start = cur().span;
    bool abstract = false;
    if (kw("abstract")) {
      advance();
      abstract = true;
    }
    expect_kw("def");
    std::string n = name("definition name");
    expect_punct(":=");
    CollectionPtr c = collection();
    return Definition{std::move(n), std::move(c), abstract, span_from(start)};
  }

  CollectionPtr collection() {
    SourceSpan start = expect_punct("{").span;
    SourceSpan head_start = cur().span;
    HeadSpec head;
    head.relation = name("head relation name");
    expect_punct("(");
    head.attributes.push_back(name("attribute name"));
    while (punct(",")) {
      advance();
      head.attributes.push_back(name("attribute name"));
    }
    expect_punct(")");
    head.span = span_from(head_start);
    expect_punct("|");
    FormulaPtr body = formula();
    expect_punct("}");
    SourceSpan sp = span_from(start);
    return guard(sp, [&] { return make_collection(std::move(head), std::move(body), sp); });
  }

  FormulaPtr formula() { return disjunction(); }

  FormulaPtr disjunction() {
    SourceSpan start = cur().span;
    std::vector<FormulaPtr> parts{conjunction()};
    while (kw("or")) {
      advance();
      parts.push_back(conjunction());
    }
    if (parts.size() == 1) return parts[0];
    SourceSpan sp = span_from(start);
    return make_or(std::move(parts), sp);
  }

  FormulaPtr conjunction() {
    SourceSpan start = cur().span;
    std::vector<FormulaPtr> parts{unary()};
    while (kw("and")) {
      advance();
      parts.push_back(unary());
    }
    if (parts.size() == 1) return parts[0];
    SourceSpan sp = span_from(start);
    return make_and(std::move(parts), sp);
  }

  FormulaPtr unary() {
    SourceSpan start = cur().span;
    if (kw("not")) {
      if (kw_at(1, "exists") && !punct_at(2, ".")) {
        advance();
        return quantified(Polarity::NotExists, start);
      }
      advance();
      FormulaPtr child = unary();
      return make_not(std::move(child), span_from(start));
    }
    return primary();
  }

  bool comparison_or_arith_ahead(std::size_t ahead) const {
    const Token& t = at(ahead);
    if (t.kind == TokenKind::Name) return iequals(t.text, "is");
    if (t.kind != TokenKind::Punct) return false;
    static constexpr std::string_view ops[] = {"=", "<>", "!=", "<", "<=", ">", ">=", "+", "-", "*", "/"};
    return std::find(std::begin(ops), std::end(ops), t.text) != std::end(ops);
  }

  FormulaPtr primary() {
    SourceSpan start = cur().span;
    if (kw("exists")) return quantified(Polarity::Exists, start);
    if (kw("true") && !comparison_or_arith_ahead(1)) {
      advance();
      return make_true(span_from(start));
    }
    if (punct("(")) {
      std::size_t save = pos_;
      try {
        return predicate();
      } catch (const ParseError& first) {
        std::size_t first_at = first.span().start;
        pos_ = save;
        advance();
        try {
          FormulaPtr f = formula();
          expect_punct(")");
          return f;
        } catch (const ParseError& second) {
          if (first_at > second.span().start) throw first;
          throw;
        }
      }
    }
    return predicate();
  }

  FormulaPtr quantified(Polarity polarity, const SourceSpan& start) {
    expect_kw("exists");
    std::vector<Binding> bindings{binding()};
    std::optional<GroupingOp> grouping;
    JoinTreePtr joins;
    while (punct(",")) {
      if (kw_at(1, "group") && punct_at(2, "(")) {
        if (grouping || joins) fail({"'['"});
        advance();
        grouping = group();
      } else if ((kw_at(1, "inner") || kw_at(1, "left") || kw_at(1, "full")) && punct_at(2, "(")) {
        if (joins) fail({"'['"});
        advance();
        joins = join_tree();
      } else {
        if (grouping || joins) fail({"'group'", "join annotation", "'['"});
        advance();
        bindings.push_back(binding());
      }
    }
    expect_punct("[");
    FormulaPtr body = formula();
    expect_punct("]");
    SourceSpan sp = span_from(start);
    return guard(sp, [&] {
      return make_quantified(polarity, std::move(bindings), std::move(grouping), std::move(joins), std::move(body), sp);
    });
  }

  Binding binding() {
    SourceSpan start = cur().span;
    Binding b;
    b.var = name("binding variable");
    expect_kw("in");
    if (punct("{")) {
      b.source = Binding::Nested{collection()};
    } else if (kw_at(0, "ext") && (at(1).kind == TokenKind::Name || at(1).kind == TokenKind::QuotedName)) {
      advance();
      b.source = Binding::External{name("external relation name")};
    } else {
      b.source = Binding::Named{name("relation name")};
    }
    b.span = span_from(start);
    return b;
  }

  GroupingOp group() {
    expect_kw("group");
    expect_punct("(");
    GroupingOp g;
    if (!punct(")")) {
      g.keys.push_back(attr_term());
      while (punct(",")) {
        advance();
        g.keys.push_back(attr_term());
      }
    }
    expect_punct(")");
    return g;
  }

  JoinTreePtr join_tree() {
    SourceSpan start = cur().span;
    JoinTree::Kind kind;
    if (kw_at(0, "inner")) {
      kind = JoinTree::Kind::Inner;
    } else if (kw_at(0, "left")) {
      kind = JoinTree::Kind::Left;
    } else if (kw_at(0, "full")) {
      kind = JoinTree::Kind::Full;
    } else {
      fail({"'inner'", "'left'", "'full'"});
    }
    advance();
    expect_punct("(");
    std::vector<JoinTreePtr> children{join_leaf()};
    while (punct(",")) {
      advance();
      children.push_back(join_leaf());
    }
    expect_punct(")");
    SourceSpan sp = span_from(start);
    return guard(sp, [&] { return make_join(kind, std::move(children), sp); });
  }

  JoinTreePtr join_leaf() {
    SourceSpan start = cur().span;
    if ((kw_at(0, "inner") || kw_at(0, "left") || kw_at(0, "full")) && punct_at(1, "(")) return join_tree();
    if (kw_at(0, "lit") && !punct_at(1, ",") && !punct_at(1, ")")) {
      advance();
      Value v = literal_value();
      expect_kw("as");
      std::string var = name("literal variable");
      SourceSpan sp = span_from(start);
      return guard(sp, [&] { return make_literal_leaf(std::move(v), std::move(var), sp); });
    }
    std::string var = name("join leaf");
    return make_leaf(std::move(var), span_from(start));
  }

  Value literal_value() {
    bool negative = false;
    if (punct("-") && (at(1).kind == TokenKind::Int || at(1).kind == TokenKind::Dec)) {
      advance();
      negative = true;
    }
    const Token& t = cur();
    switch (t.kind) {
      case TokenKind::Int:
      case TokenKind::Dec: {
        advance();
        return Value::parse_number((negative ? "-" : "") + t.text);
      }
      case TokenKind::String:
        if (negative) break;
        advance();
        return Value::text(t.text);
      case TokenKind::Name:
        if (negative) break;
        if (iequals(t.text, "true")) {
          advance();
          return Value::boolean(true);
        }
        if (iequals(t.text, "false")) {
          advance();
          return Value::boolean(false);
        }
        if (iequals(t.text, "null")) {
          advance();
          return Value::null();
        }
        break;
      default:
        break;
    }
    fail({"literal value"});
  }

  FormulaPtr predicate() {
    SourceSpan start = cur().span;
    TermPtr left = term();
    if (kw_at(0, "is")) {
      advance();
      bool negated = false;
      if (kw_at(0, "not")) {
        advance();
        negated = true;
      }
      expect_kw("null");
      SourceSpan sp = span_from(start);
      return make_is_null(std::move(left), negated, sp);
    }
    std::optional<CompareOp> op;
    if (cur().kind == TokenKind::Punct) op = parse_compare_op(cur().text);
    if (!op) fail({"comparison operator", "'is'"});
    advance();
    TermPtr right = term();
    SourceSpan sp = span_from(start);
    return guard(sp, [&] { return make_compare(*op, std::move(left), std::move(right), sp); });
  }

  TermPtr term() {
    SourceSpan start = cur().span;
    TermPtr left = product();
    while (punct("+") || punct("-")) {
      ArithOp op = advance().text == "+" ? ArithOp::Add : ArithOp::Sub;
      TermPtr right = product();
      left = make_arith(op, std::move(left), std::move(right), span_from(start));
    }
    return left;
  }

  TermPtr product() {
    SourceSpan start = cur().span;
    TermPtr left = term_primary();
    while (punct("*") || punct("/")) {
      ArithOp op = advance().text == "*" ? ArithOp::Mul : ArithOp::Div;
      TermPtr right = term_primary();
      left = make_arith(op, std::move(left), std::move(right), span_from(start));
    }
    return left;
  }

  TermPtr attr_term() {
    SourceSpan start = cur().span;
    std::string var = name("range variable");
    expect_punct(".");
    std::string attr = name("attribute name");
    return make_attr(std::move(var), std::move(attr), span_from(start));
  }

  TermPtr term_primary() {
    SourceSpan start = cur().span;
    const Token& t = cur();
    if ((t.kind == TokenKind::Name || t.kind == TokenKind::QuotedName) && punct_at(1, ".")) return attr_term();
    if (t.kind == TokenKind::Name && punct_at(1, "(")) {
      if (auto fn = parse_agg_fn(detail::lower(t.text))) {
        advance();
        advance();
        TermPtr arg = term();
        expect_punct(")");
        SourceSpan sp = span_from(start);
        return guard(sp, [&] { return make_aggregate(*fn, std::move(arg), sp); });
      }
    }
    if (punct("(")) {
      advance();
      TermPtr inner = term();
      expect_punct(")");
      return inner;
    }
    if (t.kind == TokenKind::Int || t.kind == TokenKind::Dec || t.kind == TokenKind::String ||
        (punct("-") && (at(1).kind == TokenKind::Int || at(1).kind == TokenKind::Dec)) ||
        (t.kind == TokenKind::Name &&
         (iequals(t.text, "true") || iequals(t.text, "false") || iequals(t.text, "null")))) {
      Value v = literal_value();
      return make_constant(std::move(v), span_from(start));
    }
    fail({"term"});
  }
};

// ---------------------------------------------------------------------------
// printing

int precedence(const Term& t) {
  if (auto* a = std::get_if<Term::Arith>(&t.node))
    return a->op == ArithOp::Add || a->op == ArithOp::Sub ? 1 : 2;
  return 3;
}

void print_term_to(const Term& t, std::string& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Term::Constant>) {
          out += n.value.to_literal();
        } else if constexpr (std::is_same_v<T, Term::Attr>) {
          out += quote_name(n.ref.variable) + "." + quote_name(n.ref.attribute);
        } else if constexpr (std::is_same_v<T, Term::Arith>) {
          int p = precedence(t);
          bool lp = precedence(*n.left) < p;
          bool rp = precedence(*n.right) <= p;
          if (lp) out += "(";
          print_term_to(*n.left, out);
          if (lp) out += ")";
          out += " ";
          out += to_string(n.op);
          out += " ";
          if (rp) out += "(";
          print_term_to(*n.right, out);
          if (rp) out += ")";
        } else {
          out += to_string(n.fn);
          out += "(";
          print_term_to(*n.arg, out);
          out += ")";
        }
      },
      t.node);
}

void print_collection_to(const CollectionExpr& c, std::string& out);

void print_join_to(const JoinTree& j, std::string& out) {
  switch (j.kind) {
    case JoinTree::Kind::Leaf:
      out += quote_name(j.var);
      return;
    case JoinTree::Kind::Literal:
      out += "lit " + j.literal.to_literal() + " as " + quote_name(j.var);
      return;
    case JoinTree::Kind::Inner: out += "inner("; break;
    case JoinTree::Kind::Left: out += "left("; break;
    case JoinTree::Kind::Full: out += "full("; break;
  }
  for (std::size_t i = 0; i < j.children.size(); ++i) {
    if (i) out += ", ";
    print_join_to(*j.children[i], out);
  }
  out += ")";
}

void print_formula_to(const Formula& f, std::string& out);

void print_child(const Formula& f, std::string& out) {
  bool paren = std::holds_alternative<Formula::And>(f.node) || std::holds_alternative<Formula::Or>(f.node);
  if (paren) out += "(";
  print_formula_to(f, out);
  if (paren) out += ")";
}

void print_formula_to(const Formula& f, std::string& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Formula::Quantified>) {
          out += n.polarity == Polarity::NotExists ? "not exists " : "exists ";
          for (std::size_t i = 0; i < n.bindings.size(); ++i) {
            const Binding& b = n.bindings[i];
            if (i) out += ", ";
            out += quote_name(b.var) + " in ";
            std::visit(
                [&](const auto& s) {
                  using S = std::decay_t<decltype(s)>;
                  if constexpr (std::is_same_v<S, Binding::Named>) {
                    out += quote_name(s.name);
                  } else if constexpr (std::is_same_v<S, Binding::External>) {
                    out += "ext " + quote_name(s.name);
                  } else {
                    print_collection_to(*s.collection, out);
                  }
                },
                b.source);
          }
          if (n.grouping) {
            out += ", group(";
            for (std::size_t i = 0; i < n.grouping->keys.size(); ++i) {
              if (i) out += ", ";
              print_term_to(*n.grouping->keys[i], out);
            }
            out += ")";
          }
          if (n.joins) {
            out += ", ";
            print_join_to(*n.joins, out);
          }
          out += " [ ";
          print_formula_to(*n.body, out);
          out += " ]";
        } else if constexpr (std::is_same_v<T, Formula::And> || std::is_same_v<T, Formula::Or>) {
          const char* sep = std::is_same_v<T, Formula::And> ? " and " : " or ";
          for (std::size_t i = 0; i < n.children.size(); ++i) {
            if (i) out += sep;
            print_child(*n.children[i], out);
          }
        } else if constexpr (std::is_same_v<T, Formula::Not>) {
          out += "not (";
          print_formula_to(*n.child, out);
          out += ")";
        } else if constexpr (std::is_same_v<T, Formula::Atom>) {
          out += print_predicate(n.pred);
        } else {
          out += "true";
        }
      },
      f.node);
}

void print_collection_to(const CollectionExpr& c, std::string& out) {
  out += "{ " + quote_name(c.head.relation) + "(";
  for (std::size_t i = 0; i < c.head.attributes.size(); ++i) {
    if (i) out += ", ";
    out += quote_name(c.head.attributes[i]);
  }
  out += ") | ";
  print_formula_to(*c.body, out);
  out += " }";
}

}  // namespace

Program parse_arc(std::string_view text) { return Parser(text).program(); }

std::string quote_name(const std::string& name) {
  if (plain_identifier(name) && !is_keyword(name)) return name;
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string print_term(const Term& t) {
  std::string out;
  print_term_to(t, out);
  return out;
}

std::string print_predicate(const Predicate& p) {
  if (auto* c = std::get_if<Predicate::Compare>(&p.node))
    return print_term(*c->left) + " " + std::string(to_string(c->op)) + " " + print_term(*c->right);
  const auto& n = std::get<Predicate::IsNull>(p.node);
  return print_term(*n.term) + (n.negated ? " is not null" : " is null");
}

std::string print_join_tree(const JoinTree& j) {
  std::string out;
  print_join_to(j, out);
  return out;
}

std::string print_formula(const Formula& f) {
  std::string out;
  print_formula_to(f, out);
  return out;
}

std::string print_collection(const CollectionExpr& c) {
  std::string out;
  print_collection_to(c, out);
  return out;
}

std::string print_arc(const Program& p) {
  std::string out;
  for (const auto& d : p.definitions) {
    if (d.abstract) out += "abstract ";
    out += "def " + quote_name(d.name) + " := ";
    print_collection_to(*d.collection, out);
    out += "\n";
  }
  if (p.is_sentence()) {
    print_formula_to(*p.main_formula(), out);
  } else {
    print_collection_to(*p.main_collection(), out);
  }
  return out + "\n";
}

}  // namespace arc
