#pragma once

// Diagrammatic (higraph) modality: regions mirror the scope tree, tables are
// bindings and heads, edges are predicates. to_dot emits Graphviz text.

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "arc/binder.hpp"

namespace arc {

struct HigraphPort {
  std::string name;
  bool shaded = false;    // grouping key
  bool constant = false;  // selection constant or null test, drawn as an extra row
};

struct HigraphRegion {
  enum class Kind { Canvas, Collection, Quantifier };

  std::string id;
  Kind kind = Kind::Canvas;
  std::string parent;  // empty for the canvas
  std::string path;    // scope path
  std::string label;
  bool grouping = false;  // double border
  bool negated = false;
  std::vector<std::string> notes;  // textual annotations: join trees, "×" for condition-free outer joins
};

struct HigraphNode {
  enum class Kind { Base, Intensional, External, Abstract, Head, Literal, Module };

  std::string id;
  Kind kind = Kind::Base;
  std::string region;
  std::string label;  // relation name, head name or literal
  std::string relation;
  std::vector<HigraphPort> ports;
  bool optional = false;  // optional side of an outer join
};

struct HigraphEdge {
  enum class Kind { Comparison, Assignment };

  Kind kind = Kind::Comparison;
  std::string from, from_port, to, to_port;  // assignments point into the head
  std::string label;
  bool negated = false;         // under a negation that is not a quantifier
  bool in_disjunction = false;  // under an or
};

struct HigraphDoc {
  std::vector<HigraphRegion> regions;  // preorder; regions[0] is the canvas
  std::vector<HigraphNode> nodes;
  std::vector<HigraphEdge> edges;

  /// Material hidden by collapse(), restored by expand().
  struct Hidden {
    std::vector<std::pair<std::size_t, HigraphRegion>> regions;
    std::vector<std::pair<std::size_t, HigraphNode>> nodes;
    std::vector<std::pair<std::size_t, HigraphEdge>> edges;
    std::vector<std::pair<std::string, HigraphNode::Kind>> modules;  // node id -> kind before collapsing
  };
  std::map<std::string, Hidden> collapsed;

  bool operator==(const HigraphDoc& other) const;
};

struct HigraphOptions {
  std::set<std::string> collapse;  // abstract relations shown as module boxes
};

HigraphDoc to_higraph(const LinkedProgram& lp, const HigraphOptions& options = {});

/// Replaces the definition of abstract relation `name` by module boxes at its uses.
HigraphDoc collapse(const HigraphDoc& doc, const std::string& name);
HigraphDoc expand(const HigraphDoc& doc, const std::string& name);

std::string to_dot(const HigraphDoc& doc);
nlohmann::json to_json(const HigraphDoc& doc);

}  // namespace arc
