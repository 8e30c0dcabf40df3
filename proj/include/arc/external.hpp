#pragma once

// External relations: relations defined outside the language and reachable
// only through declared access patterns (strings over {b,f}, one letter per
// attribute: b = must be bound on access, f = produced by the relation).

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "arc/value.hpp"

namespace arc {

struct ExternalSpec {
  std::string name;
  std::vector<std::string> attributes;
  std::vector<std::string> patterns;
  std::string semantics;  // minus, add, mul, cmp_gt, cmp_lt, like
};

class ExternalRegistry {
 public:
  /// Minus, Add, "*", Bigger, Smaller, Like.
  static ExternalRegistry builtin();
  /// JSON: [{"name", "attributes", "patterns", "semantics"}, ...] or {"externals": [...]}.
  static ExternalRegistry from_json(std::string_view text);
  /// builtin(), extended/overridden by the file named in ARC_EXTERNAL_REGISTRY when set.
  static ExternalRegistry from_environment();

  void add(ExternalSpec spec);
  const ExternalSpec* find(const std::string& name) const;
  const std::map<std::string, ExternalSpec>& specs() const { return specs_; }

 private:
  std::map<std::string, ExternalSpec> specs_;
};

/// All tuples of the external relation agreeing with the bound positions of
/// `inputs` (nullopt = free). Positions marked 'b' in an admissible pattern
/// must be bound. A null input yields no tuples. Throws EvalError(E_TYPE) for
/// operands of the wrong type.
std::vector<Tuple> invoke_external(const ExternalSpec& spec, const std::vector<std::optional<Value>>& inputs);

/// SQL LIKE matching with % and _.
bool like_match(std::string_view text, std::string_view pattern);

}  // namespace arc
