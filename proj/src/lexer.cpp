#include "lexer.hpp"

#include <cctype>

#include "arc/error.hpp"

namespace arc {

namespace {

std::string make_parse_message(const SourceSpan& span, const std::vector<std::string>& expected,
                               const std::string& found) {
  std::string msg = "parse error at " + span.to_string() + ": ";
  if (expected.empty()) return msg + found;
  msg += "expected ";
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (i) msg += i + 1 == expected.size() ? " or " : ", ";
    msg += expected[i];
  }
  return msg + ", found " + found;
}

}  // namespace

ParseError::ParseError(SourceSpan span, std::vector<std::string> expected, const std::string& found)
    : ArcError("E_PARSE", make_parse_message(span, expected, found), span), expected_(std::move(expected)) {}

namespace detail {

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
  return true;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string describe(const Token& t) {
  switch (t.kind) {
    case TokenKind::End: return "end of input";
    case TokenKind::String: return "string '" + t.text + "'";
    case TokenKind::QuotedName: return "\"" + t.text + "\"";
    default: return "'" + t.text + "'";
  }
}

namespace {

class Lexer {
 public:
  Lexer(std::string_view text, const LexOptions& options) : text_(text), options_(options) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) {
        out.push_back(Token{TokenKind::End, "", here_span()});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  std::string_view text_;
  LexOptions options_;
  std::size_t pos_ = 0;  // byte offset
  std::size_t cp_ = 0;   // code point offset
  std::size_t line_ = 0;
  std::size_t col_ = 0;

  SourceSpan here_span() const { return SourceSpan{cp_, cp_, line_, col_}; }

  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }

  void advance() {
    unsigned char c = static_cast<unsigned char>(text_[pos_]);
    ++pos_;
    // continuation bytes belong to the previous code point
    while (pos_ < text_.size() && (static_cast<unsigned char>(text_[pos_]) & 0xC0) == 0x80) ++pos_;
    ++cp_;
    if (c == '\n') {
      ++line_;
      col_ = 0;
    } else {
      ++col_;
    }
  }

  void skip_space() {
    for (;;) {
      while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(peek()))) advance();
      if (options_.dash_comments && peek() == '-' && peek(1) == '-') {
        while (pos_ < text_.size() && peek() != '\n') advance();
        continue;
      }
      return;
    }
  }

  bool name_start(char c) const {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || (options_.dollar_names && c == '$') ||
           (static_cast<unsigned char>(c) & 0x80);
  }
  bool name_char(char c) const { return name_start(c) || std::isdigit(static_cast<unsigned char>(c)); }

  Token finish(TokenKind kind, std::string text, SourceSpan start) {
    start.end = cp_;
    return Token{kind, std::move(text), start};
  }

  Token quoted(char quote, TokenKind kind, SourceSpan start) {
    advance();
    std::string out;
    for (;;) {
      if (pos_ >= text_.size()) throw ParseError(start, {std::string(1, quote)}, "end of input");
      char c = peek();
      if (c == quote) {
        if (peek(1) == quote) {
          out += quote;
          advance();
          advance();
          continue;
        }
        advance();
        return finish(kind, out, start);
      }
      std::size_t before = pos_;
      advance();
      out.append(text_.substr(before, pos_ - before));
    }
  }

  Token next() {
    SourceSpan start = here_span();
    char c = peek();
    if (name_start(c)) {
      std::size_t begin = pos_;
      while (pos_ < text_.size() && name_char(peek())) advance();
      return finish(TokenKind::Name, std::string(text_.substr(begin, pos_ - begin)), start);
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t begin = pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      bool dec = false;
      if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        dec = true;
        advance();
        while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      }
      return finish(dec ? TokenKind::Dec : TokenKind::Int, std::string(text_.substr(begin, pos_ - begin)), start);
    }
    if (c == '\'') return quoted('\'', TokenKind::String, start);
    if (c == '"') return quoted('"', TokenKind::QuotedName, start);

    static constexpr std::string_view two[] = {":=", "<>", "!=", "<=", ">="};
    for (auto op : two) {
      if (peek() == op[0] && peek(1) == op[1]) {
        advance();
        advance();
        return finish(TokenKind::Punct, std::string(op), start);
      }
    }
    static constexpr std::string_view one = "{}()[]|,.+-*/=<>;";
    if (one.find(c) != std::string_view::npos) {
      advance();
      return finish(TokenKind::Punct, std::string(1, c), start);
    }
    throw ParseError(start, {}, std::string("unexpected character '") + c + "'");
  }
};

}  // namespace

std::vector<Token> tokenize(std::string_view text, const LexOptions& options) {
  return Lexer(text, options).run();
}

}  // namespace detail
}  // namespace arc
