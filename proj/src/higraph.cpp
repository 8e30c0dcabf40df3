#include "arc/higraph.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "arc/syntax.hpp"

namespace arc {

namespace {

using json = nlohmann::json;

class Builder {
 public:
  explicit Builder(const LinkedProgram& lp) : lp_(lp) {}

  HigraphDoc build() {
    const Program& p = *lp_.program;
    doc_.regions.push_back(HigraphRegion{"canvas", HigraphRegion::Kind::Canvas, "", "", "", false, false, {}});
    for (const auto& d : p.definitions) collection(*d.collection, "canvas", "def " + d.name);
    if (p.is_sentence()) {
      formula(p.main_formula(), "canvas", {});
    } else {
      collection(*p.main_collection(), "canvas", "");
    }
    return std::move(doc_);
  }

 private:
  struct Context {
    bool negated = false;
    bool in_disjunction = false;
  };

  std::string fresh(const std::string& base) {
    std::string id = base;
    for (int k = 2; used_.count(id); ++k) id = base + "_" + std::to_string(k);
    used_.insert(id);
    return id;
  }

  std::string region_for_scope(int scope, const std::string& parent, HigraphRegion::Kind kind, std::string label) {
    const Scope& s = lp_.scope(scope);
    HigraphRegion r;
    r.id = "r" + std::to_string(doc_.regions.size());
    r.kind = kind;
    r.parent = parent;
    r.path = s.path;
    r.label = std::move(label);
    doc_.regions.push_back(r);
    return r.id;
  }

  HigraphRegion& region(const std::string& id) {
    return *std::find_if(doc_.regions.begin(), doc_.regions.end(), [&](const HigraphRegion& r) { return r.id == id; });
  }

  HigraphNode& node(const std::string& id) { return doc_.nodes[node_index_.at(id)]; }

  std::string add_node(HigraphNode n, const std::string& id_base) {
    n.id = fresh(id_base);
    node_index_[n.id] = doc_.nodes.size();
    doc_.nodes.push_back(n);
    return doc_.nodes.back().id;
  }

  static void add_port(HigraphNode& n, const std::string& name, bool constant = false) {
    for (const auto& p : n.ports)
      if (p.name == name && p.constant == constant) return;
    n.ports.push_back(HigraphPort{name, false, constant});
  }

  void collection(const CollectionExpr& c, const std::string& parent, const std::string& prefix,
                  const Binding* via = nullptr) {
    int scope = lp_.collection_scope.at(&c);
    std::string label = prefix;
    std::string rid = region_for_scope(scope, parent, HigraphRegion::Kind::Collection, label);
    HigraphNode head;
    head.kind = HigraphNode::Kind::Head;
    head.region = rid;
    head.label = c.head.relation;
    head.relation = c.head.relation;
    for (const auto& a : c.head.attributes) head.ports.push_back(HigraphPort{a, false, false});
    std::string hid = add_node(head, c.head.relation);
    head_node_[&c] = hid;
    if (via) binding_node_[via] = hid;
    formula(c.body, rid, {});
  }

  HigraphNode::Kind kind_of(const std::string& relation) const {
    auto it = lp_.relation_kinds.find(relation);
    if (it == lp_.relation_kinds.end()) return HigraphNode::Kind::Base;
    switch (it->second) {
      case RelationKind::Base: return HigraphNode::Kind::Base;
      case RelationKind::Intensional: return HigraphNode::Kind::Intensional;
      case RelationKind::External: return HigraphNode::Kind::External;
      case RelationKind::Abstract: return HigraphNode::Kind::Abstract;
    }
    return HigraphNode::Kind::Base;
  }

  void quantifier(const Formula& f, const Formula::Quantified& q, const std::string& parent, Context ctx) {
    int scope = lp_.quantifier_scope.at(&f);
    std::string label = q.polarity == Polarity::Exists ? "∃" : "¬∃";
    if (q.grouping) {
      label += " γ(";
      for (std::size_t i = 0; i < q.grouping->keys.size(); ++i)
        label += (i ? ", " : "") + print_term(*q.grouping->keys[i]);
      label += ")";
    }
    std::string rid = region_for_scope(scope, parent, HigraphRegion::Kind::Quantifier, label);
    region(rid).negated = q.polarity == Polarity::NotExists || ctx.negated;
    region(rid).grouping = q.grouping.has_value();

    std::set<std::string> optional;
    if (q.joins) {
      region(rid).notes.push_back(print_join_tree(*q.joins));
      optional_leaves(*q.joins, false, optional);
      cross_notes(*q.joins, rid);
    }
    // plain tables first: a lateral collection may read any sibling
    for (const auto& b : q.bindings) {
      if (std::holds_alternative<Binding::Nested>(b.source)) continue;
      HigraphNode n;
      n.region = rid;
      n.optional = optional.count(b.var) > 0;
      if (auto* nm = std::get_if<Binding::Named>(&b.source)) {
        n.kind = kind_of(nm->name);
        n.relation = nm->name;
      } else {
        n.kind = HigraphNode::Kind::External;
        n.relation = std::get<Binding::External>(b.source).name;
      }
      n.label = n.relation + " " + b.var;
      binding_node_[&b] = add_node(n, b.var);
    }
    if (q.joins) literal_nodes(*q.joins, rid, optional);
    for (const auto& b : q.bindings) {
      if (auto* ne = std::get_if<Binding::Nested>(&b.source)) {
        collection(*ne->collection, rid, "", &b);
        node(binding_node_.at(&b)).optional = optional.count(b.var) > 0;
      }
    }
    if (q.grouping) {
      for (const auto& k : q.grouping->keys) {
        std::vector<const Term*> attrs;
        collect_attr_terms(k, attrs);
        for (const Term* t : attrs) {
          auto [nid, port] = endpoint(*t);
          HigraphNode& n = node(nid);
          add_port(n, port);
          for (auto& p : n.ports)
            if (p.name == port && !p.constant) p.shaded = true;
        }
      }
    }
    formula(q.body, rid, Context{false, ctx.in_disjunction});
  }

  void optional_leaves(const JoinTree& j, bool optional, std::set<std::string>& out) {
    if (j.kind == JoinTree::Kind::Leaf || j.kind == JoinTree::Kind::Literal) {
      if (optional) out.insert(j.var);
      return;
    }
    for (std::size_t i = 0; i < j.children.size(); ++i) {
      bool opt = optional || j.kind == JoinTree::Kind::Full || (j.kind == JoinTree::Kind::Left && i > 0);
      optional_leaves(*j.children[i], opt, out);
    }
  }

  void cross_notes(const JoinTree& j, const std::string& rid) {
    if (j.kind == JoinTree::Kind::Left || j.kind == JoinTree::Kind::Full) {
      bool conditioned = false;
      for (const auto& [atom, target] : lp_.join_condition_assignment) conditioned = conditioned || target == &j;
      if (!conditioned) region(rid).notes.push_back("×");
    }
    for (const auto& c : j.children) cross_notes(*c, rid);
  }

  void literal_nodes(const JoinTree& j, const std::string& rid, const std::set<std::string>& optional) {
    if (j.kind == JoinTree::Kind::Literal) {
      HigraphNode n;
      n.kind = HigraphNode::Kind::Literal;
      n.region = rid;
      n.label = j.literal.to_literal();
      n.optional = optional.count(j.var) > 0;
      n.ports.push_back(HigraphPort{"val", false, false});
      literal_node_[&j] = add_node(n, j.var);
    }
    for (const auto& c : j.children) literal_nodes(*c, rid, optional);
  }

  std::pair<std::string, std::string> endpoint(const Term& attr_term) const {
    const auto& ref = std::get<Term::Attr>(attr_term.node).ref;
    const LinkTarget& t = lp_.link(attr_term);
    switch (t.kind) {
      case LinkTarget::Kind::Binding: return {binding_node_.at(t.binding), ref.attribute};
      case LinkTarget::Kind::Literal: return {literal_node_.at(t.literal), ref.attribute};
      case LinkTarget::Kind::Head: return {head_node_.at(t.head), ref.attribute};
    }
    return {};
  }

  // First attribute of a term, if any.
  static const Term* anchor(const TermPtr& t) {
    std::vector<const Term*> attrs;
    collect_attr_terms(t, attrs);
    return attrs.empty() ? nullptr : attrs.front();
  }

  static bool bare_attr(const TermPtr& t) { return std::holds_alternative<Term::Attr>(t->node); }

  void atom(const Formula& f, const Formula::Atom& a, const std::string& rid, Context ctx) {
    HigraphEdge e;
    e.negated = ctx.negated;
    e.in_disjunction = ctx.in_disjunction;
    if (auto* n = std::get_if<Predicate::IsNull>(&a.pred.node)) {
      const Term* t = anchor(n->term);
      std::string test = n->negated ? "is not null" : "is null";
      if (!t) {
        region(rid).notes.push_back(print_predicate(a.pred));
        return;
      }
      auto [nid, port] = endpoint(*t);
      add_port(node(nid), port);
      add_port(node(nid), test, true);
      e.from = nid;
      e.from_port = port;
      e.to = nid;
      e.to_port = test;
      if (!bare_attr(n->term)) e.label = print_predicate(a.pred);
      doc_.edges.push_back(e);
      return;
    }
    const auto& c = std::get<Predicate::Compare>(a.pred.node);
    const Term* l = anchor(c.left);
    const Term* r = anchor(c.right);
    if (!l && !r) {
      region(rid).notes.push_back(print_predicate(a.pred));
      return;
    }
    auto side = [&](const Term* t, const TermPtr& whole, const std::string& other_node) {
      if (t) {
        auto ep = endpoint(*t);
        add_port(node(ep.first), ep.second);
        return ep;
      }
      std::string constant = print_term(*whole);
      add_port(node(other_node), constant, true);
      return std::pair<std::string, std::string>{other_node, constant};
    };
    std::pair<std::string, std::string> le, re;
    if (l) {
      le = side(l, c.left, "");
      re = side(r, c.right, le.first);
    } else {
      re = side(r, c.right, "");
      le = side(l, c.left, re.first);
    }
    auto cls = lp_.classify(f);
    bool assignment = cls == PredicateClass::Assignment || cls == PredicateClass::AggregationAssignment;
    bool simple = (!l || bare_attr(c.left)) && (!r || bare_attr(c.right));
    if (assignment) {
      bool left_is_head = l && bare_attr(c.left) && lp_.link(*l).kind == LinkTarget::Kind::Head;
      e.kind = HigraphEdge::Kind::Assignment;
      if (left_is_head) std::swap(le, re);
      const TermPtr& source = left_is_head ? c.right : c.left;
      if (!bare_attr(source)) e.label = print_term(*source);
    } else if (!simple) {
      e.label = print_predicate(a.pred);
    } else if (c.op != CompareOp::Eq) {
      e.label = std::string(to_string(c.op));
    }
    e.from = le.first;
    e.from_port = le.second;
    e.to = re.first;
    e.to_port = re.second;
    doc_.edges.push_back(e);
  }

  void formula(const FormulaPtr& f, const std::string& rid, Context ctx) {
    std::visit(
        [&](const auto& n) {
          using N = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<N, Formula::Quantified>) {
            quantifier(*f, n, rid, ctx);
          } else if constexpr (std::is_same_v<N, Formula::And>) {
            for (const auto& c : n.children) formula(c, rid, ctx);
          } else if constexpr (std::is_same_v<N, Formula::Or>) {
            for (const auto& c : n.children) formula(c, rid, Context{ctx.negated, true});
          } else if constexpr (std::is_same_v<N, Formula::Not>) {
            formula(n.child, rid, Context{!ctx.negated, ctx.in_disjunction});
          } else if constexpr (std::is_same_v<N, Formula::Atom>) {
            atom(*f, n, rid, ctx);
          }
        },
        f->node);
  }

  const LinkedProgram& lp_;
  HigraphDoc doc_;
  std::set<std::string> used_;
  std::map<std::string, std::size_t> node_index_;
  std::map<const Binding*, std::string> binding_node_;
  std::map<const JoinTree*, std::string> literal_node_;
  std::map<const CollectionExpr*, std::string> head_node_;
};

bool same_port(const HigraphPort& a, const HigraphPort& b) {
  return a.name == b.name && a.shaded == b.shaded && a.constant == b.constant;
}

bool same_region(const HigraphRegion& a, const HigraphRegion& b) {
  return a.id == b.id && a.kind == b.kind && a.parent == b.parent && a.path == b.path && a.label == b.label &&
         a.grouping == b.grouping && a.negated == b.negated && a.notes == b.notes;
}

bool same_node(const HigraphNode& a, const HigraphNode& b) {
  return a.id == b.id && a.kind == b.kind && a.region == b.region && a.label == b.label && a.relation == b.relation &&
         a.optional == b.optional &&
         std::equal(a.ports.begin(), a.ports.end(), b.ports.begin(), b.ports.end(), same_port);
}

bool same_edge(const HigraphEdge& a, const HigraphEdge& b) {
  return a.kind == b.kind && a.from == b.from && a.from_port == b.from_port && a.to == b.to &&
         a.to_port == b.to_port && a.label == b.label && a.negated == b.negated &&
         a.in_disjunction == b.in_disjunction;
}

std::string_view kind_name(HigraphNode::Kind k) {
  switch (k) {
    case HigraphNode::Kind::Base: return "base";
    case HigraphNode::Kind::Intensional: return "intensional";
    case HigraphNode::Kind::External: return "external";
    case HigraphNode::Kind::Abstract: return "abstract";
    case HigraphNode::Kind::Head: return "head";
    case HigraphNode::Kind::Literal: return "literal";
    case HigraphNode::Kind::Module: return "module";
  }
  return "";
}

std::string_view kind_name(HigraphRegion::Kind k) {
  switch (k) {
    case HigraphRegion::Kind::Canvas: return "canvas";
    case HigraphRegion::Kind::Collection: return "collection";
    case HigraphRegion::Kind::Quantifier: return "quantifier";
  }
  return "";
}

std::string html(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string dot_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string dot_id(const std::string& s) {
  bool plain = !s.empty() && !std::isdigit(static_cast<unsigned char>(s[0]));
  for (char c : s) plain = plain && (std::isalnum(static_cast<unsigned char>(c)) || c == '_');
  return plain ? s : dot_quote(s);
}

}  // namespace

bool HigraphDoc::operator==(const HigraphDoc& o) const {
  return std::equal(regions.begin(), regions.end(), o.regions.begin(), o.regions.end(), same_region) &&
         std::equal(nodes.begin(), nodes.end(), o.nodes.begin(), o.nodes.end(), same_node) &&
         std::equal(edges.begin(), edges.end(), o.edges.begin(), o.edges.end(), same_edge) &&
         collapsed.size() == o.collapsed.size();
}

HigraphDoc to_higraph(const LinkedProgram& lp, const HigraphOptions& options) {
  HigraphDoc doc = Builder(lp).build();
  for (const auto& name : options.collapse) doc = collapse(doc, name);
  return doc;
}

HigraphDoc collapse(const HigraphDoc& doc, const std::string& name) {
  HigraphDoc out = doc;
  if (out.collapsed.count(name)) return out;
  auto root = std::find_if(doc.regions.begin(), doc.regions.end(),
                           [&](const HigraphRegion& r) { return r.path == "def:" + name; });
  HigraphDoc::Hidden hidden;
  std::set<std::string> regions;
  if (root != doc.regions.end()) {
    regions.insert(root->id);
    // regions are in preorder, so one pass collects the subtree
    for (const auto& r : doc.regions)
      if (regions.count(r.parent)) regions.insert(r.id);
  }
  std::set<std::string> nodes;
  for (const auto& n : doc.nodes)
    if (regions.count(n.region)) nodes.insert(n.id);

  out.regions.clear();
  for (std::size_t i = 0; i < doc.regions.size(); ++i) {
    if (regions.count(doc.regions[i].id)) hidden.regions.emplace_back(i, doc.regions[i]);
    else out.regions.push_back(doc.regions[i]);
  }
  out.nodes.clear();
  for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
    if (nodes.count(doc.nodes[i].id)) {
      hidden.nodes.emplace_back(i, doc.nodes[i]);
      continue;
    }
    HigraphNode n = doc.nodes[i];
    if (n.relation == name && n.kind != HigraphNode::Kind::Head) {
      hidden.modules.emplace_back(n.id, n.kind);
      n.kind = HigraphNode::Kind::Module;
    }
    out.nodes.push_back(std::move(n));
  }
  out.edges.clear();
  for (std::size_t i = 0; i < doc.edges.size(); ++i) {
    const auto& e = doc.edges[i];
    if (nodes.count(e.from) || nodes.count(e.to)) hidden.edges.emplace_back(i, e);
    else out.edges.push_back(e);
  }
  out.collapsed[name] = std::move(hidden);
  return out;
}

HigraphDoc expand(const HigraphDoc& doc, const std::string& name) {
  auto it = doc.collapsed.find(name);
  if (it == doc.collapsed.end()) return doc;
  HigraphDoc out = doc;
  const auto& h = it->second;
  for (const auto& [i, r] : h.regions) out.regions.insert(out.regions.begin() + static_cast<std::ptrdiff_t>(i), r);
  for (const auto& [i, n] : h.nodes) out.nodes.insert(out.nodes.begin() + static_cast<std::ptrdiff_t>(i), n);
  for (const auto& [i, e] : h.edges) out.edges.insert(out.edges.begin() + static_cast<std::ptrdiff_t>(i), e);
  for (const auto& [id, kind] : h.modules)
    for (auto& n : out.nodes)
      if (n.id == id) n.kind = kind;
  out.collapsed.erase(name);
  return out;
}

std::string to_dot(const HigraphDoc& doc) {
  std::ostringstream os;
  os << "graph higraph {\n  compound=true;\n  node [shape=plaintext, fontname=\"Helvetica\"];\n"
     << "  edge [fontname=\"Helvetica\"];\n";
  std::map<std::string, bool> optional;
  for (const auto& n : doc.nodes) optional[n.id] = n.optional;

  std::function<void(const HigraphRegion&, int)> emit = [&](const HigraphRegion& r, int depth) {
    std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    os << pad << "subgraph cluster_" << r.id << " {\n";
    std::string label = r.label;
    for (const auto& note : r.notes) label += (label.empty() ? "" : " ") + note;
    os << pad << "  label=" << dot_quote(label) << ";\n";
    std::vector<std::string> style;
    if (r.kind == HigraphRegion::Kind::Canvas) style.push_back("dotted");
    if (r.grouping) os << pad << "  peripheries=2;\n";
    if (r.kind == HigraphRegion::Kind::Collection) style.push_back("rounded");
    if (!style.empty()) {
      std::string s;
      for (const auto& x : style) s += (s.empty() ? "" : ",") + x;
      os << pad << "  style=" << dot_quote(s) << ";\n";
    }
    for (const auto& n : doc.nodes) {
      if (n.region != r.id) continue;
      std::string border = n.kind == HigraphNode::Kind::Module ? "3" : "1";
      os << pad << "  " << dot_id(n.id) << " [label=<<table border=\"" << border
         << "\" cellborder=\"1\" cellspacing=\"0\">";
      std::string title = n.label;
      if (n.kind == HigraphNode::Kind::External) title = "ext " + title;
      if (n.kind == HigraphNode::Kind::Module) title = "module " + title;
      os << "<tr><td><b>" << html(title) << "</b></td></tr>";
      for (const auto& p : n.ports) {
        os << "<tr><td port=\"" << html(p.name) << "\"";
        if (p.shaded) os << " bgcolor=\"gray80\"";
        os << ">" << (p.constant ? "<i>" + html(p.name) + "</i>" : html(p.name)) << "</td></tr>";
      }
      os << "</table>>";
      if (n.kind == HigraphNode::Kind::Head) os << ", color=\"gray40\"";
      if (n.kind == HigraphNode::Kind::Abstract || n.kind == HigraphNode::Kind::External) os << ", style=\"dashed\"";
      os << "];\n";
    }
    for (const auto& c : doc.regions)
      if (c.parent == r.id) emit(c, depth + 1);
    os << pad << "}\n";
  };
  if (!doc.regions.empty()) emit(doc.regions.front(), 1);

  for (const auto& e : doc.edges) {
    os << "  " << dot_id(e.from) << ":" << dot_id(e.from_port) << " -- " << dot_id(e.to) << ":" << dot_id(e.to_port);
    std::vector<std::string> attrs;
    std::string label = e.label;
    if (e.negated) label = "¬ " + label;
    if (!label.empty()) attrs.push_back("label=" + dot_quote(label));
    std::string tail = optional[e.from] ? "odot" : "none";
    std::string head = e.kind == HigraphEdge::Kind::Assignment ? "normal" : (optional[e.to] ? "odot" : "none");
    if (tail != "none" || head != "none") {
      attrs.push_back("dir=both");
      attrs.push_back("arrowtail=" + tail);
      attrs.push_back("arrowhead=" + head);
    }
    if (e.in_disjunction) attrs.push_back("style=dashed");
    if (!attrs.empty()) {
      os << " [";
      for (std::size_t i = 0; i < attrs.size(); ++i) os << (i ? ", " : "") << attrs[i];
      os << "]";
    }
    os << ";\n";
  }
  os << "}\n";
  return os.str();
}

json to_json(const HigraphDoc& doc) {
  json regions = json::array(), nodes = json::array(), edges = json::array();
  for (const auto& r : doc.regions) {
    regions.push_back({{"id", r.id},
                       {"kind", kind_name(r.kind)},
                       {"parent", r.parent.empty() ? json(nullptr) : json(r.parent)},
                       {"path", r.path},
                       {"label", r.label},
                       {"grouping", r.grouping},
                       {"negated", r.negated},
                       {"notes", r.notes}});
  }
  for (const auto& n : doc.nodes) {
    json ports = json::array();
    for (const auto& p : n.ports) ports.push_back({{"name", p.name}, {"shaded", p.shaded}, {"constant", p.constant}});
    nodes.push_back({{"id", n.id},
                     {"kind", kind_name(n.kind)},
                     {"region", n.region},
                     {"label", n.label},
                     {"relation", n.relation},
                     {"optional", n.optional},
                     {"ports", ports}});
  }
  for (const auto& e : doc.edges) {
    edges.push_back({{"kind", e.kind == HigraphEdge::Kind::Assignment ? "assignment" : "comparison"},
                     {"from", {{"node", e.from}, {"port", e.from_port}}},
                     {"to", {{"node", e.to}, {"port", e.to_port}}},
                     {"label", e.label},
                     {"negated", e.negated},
                     {"in_disjunction", e.in_disjunction}});
  }
  json collapsed = json::array();
  for (const auto& [name, h] : doc.collapsed) collapsed.push_back(name);
  return {{"regions", regions}, {"nodes", nodes}, {"edges", edges}, {"collapsed", collapsed}};
}

}  // namespace arc
