#pragma once

// Inlining of abstract relations into the scopes that use them.

#include "arc/alt.hpp"

namespace arc {

/// Replaces every binding to an abstract definition whose head attributes are
/// all pinned by equality conjuncts of the binding's scope with the
/// definition's body (parameters substituted, bound variables renamed).
/// Bindings that cannot be inlined are left in place; abstract definitions
/// that are no longer referenced are dropped.
Program expand_abstract(const Program& p);

}  // namespace arc
