#include "ambidoc/error.hpp"

namespace ambidoc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kNotADatabase: return "NotADatabase";
    case ErrorCode::kUnknownTable: return "UnknownTable";
    case ErrorCode::kUnknownColumn: return "UnknownColumn";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kUnknownKind: return "UnknownKind";
    case ErrorCode::kMissingDisambiguation: return "MissingDisambiguation";
    case ErrorCode::kLlmUnavailable: return "LlmUnavailable";
    case ErrorCode::kReplayMiss: return "ReplayMiss";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kNoSqlFound: return "NoSqlFound";
    case ErrorCode::kSyntaxError: return "SyntaxError";
    case ErrorCode::kUnsupportedConstruct: return "UnsupportedConstruct";
    case ErrorCode::kExecutionError: return "ExecutionError";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace ambidoc
