#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cefe {

enum class ErrorCode {
  EmptyInput,
  Parse,
  Schema,
  Io,
  Domain,
  InjectionInfeasible,
  EmptyPool,
  Translation,
  EmptyAggregation,
  MissingClass,
  Shape,
  Config,
  Alignment,
  Usage,
};

const char* to_string(ErrorCode code);

class CefeError : public std::runtime_error {
 public:
  CefeError(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Malformed input line; line numbers are 1-based.
class ParseError : public CefeError {
 public:
  ParseError(std::size_t line, const std::string& message)
      : CefeError(ErrorCode::Parse, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// CLI exit codes: Usage -> 2, Config/Domain -> 3, anything else -> 1.
int exit_code_for(ErrorCode code);

}  // namespace cefe
