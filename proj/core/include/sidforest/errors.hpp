#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sidforest {

/// Base class for every error thrown by the library. `kind()` is a stable
/// machine-readable tag used by the command line tool's JSON diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class InvalidSplitError : public Error {
 public:
  explicit InvalidSplitError(const std::string& message) : Error("invalid-split", message) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& message) : Error("dimension", message) {}
};

/// Bad user-supplied value. `field` names the offending config key or data row.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error("validation", message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("parse", message), line_(line) {}

  /// 1-based line number, 0 when the error is not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class VersionError : public Error {
 public:
  explicit VersionError(const std::string& message) : Error("version", message) {}
};

class GuardError : public Error {
 public:
  explicit GuardError(const std::string& message) : Error("guard", message) {}
};

class OracleUnavailableError : public Error {
 public:
  explicit OracleUnavailableError(const std::string& message)
      : Error("oracle-unavailable", message) {}
};

}  // namespace sidforest
