#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kgprompt {

enum class ErrorCode {
  InvalidArgument,
  UnknownNode,
  SamePairNode,
  DuplicateEdge,
  ParseError,
  SchemaError,
  IoError,
  NetworkError,
  RateLimited,
  MalformedResponse,
  UnknownEntity,
  CacheMiss,
  KindMismatch,
  MissingLabel,
  EmptyPair,
  UnknownArchitecture,
  UnknownLabel,
  UnknownLabelWord,
  BudgetTooSmall,
  MaskCollision,
  SpanError,
  LabelError,
  TooFewInstances,
  ClassExhausted,
  ProtocolError,
  UnmappableOutput,
  MissingGold,
  DuplicatePrediction,
  EmptyInput,
  OverrideConflict,
  ValidationError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and the CLI's exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

/// Raised for HTTP 429 responses; retry_after_seconds mirrors the header.
class RateLimitedError : public Error {
 public:
  RateLimitedError(const std::string& message, double retry_after_seconds)
      : Error(ErrorCode::RateLimited, message),
        retry_after_seconds_(retry_after_seconds) {}

  double retry_after_seconds() const noexcept { return retry_after_seconds_; }

 private:
  double retry_after_seconds_;
};

}  // namespace kgprompt
