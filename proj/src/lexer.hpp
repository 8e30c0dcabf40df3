#pragma once

// Shared tokenizer for the ARC and SQL front ends.

#include <string>
#include <string_view>
#include <vector>

#include "arc/span.hpp"

namespace arc::detail {

enum class TokenKind { Name, QuotedName, Int, Dec, String, Punct, End };

struct Token {
  TokenKind kind;
  std::string text;  // unescaped content for strings / quoted names
  SourceSpan span;
};

struct LexOptions {
  // `--` comments (both languages use them)
  bool dash_comments = true;
  // allow '$' inside identifiers (ARC external attribute names such as $1)
  bool dollar_names = true;
};

/// Splits `text` into tokens; the last token has kind End. Throws ParseError
/// on an unterminated string or an unexpected character.
std::vector<Token> tokenize(std::string_view text, const LexOptions& options = {});

bool iequals(std::string_view a, std::string_view b);
std::string lower(std::string_view s);
std::string describe(const Token& t);

}  // namespace arc::detail
