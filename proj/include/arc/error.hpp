#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "arc/span.hpp"

namespace arc {

/// Base class for every error raised by the toolkit. `code()` is a stable
/// identifier such as "E_TYPE" that tests and the CLI match on.
class ArcError : public std::runtime_error {
 public:
  ArcError(std::string code, const std::string& message, SourceSpan span = {})
      : std::runtime_error(message), code_(std::move(code)), span_(span) {}

  const std::string& code() const noexcept { return code_; }
  const SourceSpan& span() const noexcept { return span_; }

 private:
  std::string code_;
  SourceSpan span_;
};

/// A type invariant was violated while constructing an ALT node.
class AltError : public ArcError {
 public:
  explicit AltError(const std::string& message, SourceSpan span = {})
      : ArcError("E_ALT_INVARIANT", message, span) {}
};

class SchemaError : public ArcError {
 public:
  SchemaError(std::string path, const std::string& reason)
      : ArcError("E_SCHEMA", path + ": " + reason), path_(std::move(path)), reason_(reason) {}

  const std::string& path() const noexcept { return path_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string path_;
  std::string reason_;
};

class ParseError : public ArcError {
 public:
  ParseError(SourceSpan span, std::vector<std::string> expected, const std::string& found);

  const std::vector<std::string>& expected() const noexcept { return expected_; }

 private:
  std::vector<std::string> expected_;
};

/// Runtime failure inside the evaluator (E_TYPE, E_DIV_ZERO, E_FIXPOINT_CAP, ...).
class EvalError : public ArcError {
 public:
  using ArcError::ArcError;
};

}  // namespace arc
