#pragma once

#include <cstddef>
#include <string>

namespace arc {

/// Location in source text. Offsets, lines and columns are 0-based counts of
/// UTF-8 code points.
struct SourceSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t line = 0;
  std::size_t column = 0;

  bool operator==(const SourceSpan&) const = default;

  std::string to_string() const {
    return std::to_string(line + 1) + ":" + std::to_string(column + 1);
  }
};

}  // namespace arc
