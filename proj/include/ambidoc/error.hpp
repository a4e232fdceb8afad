#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ambidoc {

enum class ErrorCode {
  kFileNotFound,
  kNotADatabase,
  kUnknownTable,
  kUnknownColumn,
  kParseError,
  kUnknownKind,
  kMissingDisambiguation,
  kLlmUnavailable,
  kReplayMiss,
  kRateLimited,
  kNoSqlFound,
  kSyntaxError,
  kUnsupportedConstruct,
  kExecutionError,
  kConfigError,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// Base error for the toolkit. Callers dispatch on code(); a few subclasses
// carry extra location data.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// SQL text that does not parse. offset is a byte offset into the input.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, const std::string& message)
      : Error(ErrorCode::kSyntaxError,
              message + " at offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Documentation file problems. line is 1-based when known, 0 otherwise;
// field is a JSON path such as "entries[2].kind".
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& message)
      : Error(ErrorCode::kParseError, format(line, field, message)),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(std::size_t line, const std::string& field,
                            const std::string& message) {
    std::string out = message;
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    if (!field.empty()) out += " (field " + field + ")";
    return out;
  }

  std::size_t line_;
  std::string field_;
};

enum class StatementSide { kPredicted, kGold };

class ExecutionError : public Error {
 public:
  ExecutionError(StatementSide side, const std::string& message)
      : Error(ErrorCode::kExecutionError,
              std::string(side == StatementSide::kPredicted ? "predicted"
                                                            : "gold") +
                  " statement failed: " + message),
        side_(side) {}

  StatementSide side() const noexcept { return side_; }

 private:
  StatementSide side_;
};

}  // namespace ambidoc
