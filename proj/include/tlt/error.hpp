#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tlt {

enum class ErrorCode {
  EntropyUnavailable,
  InvalidKey,
  NonCanonicalField,
  MalformedDocument,
  ConstraintViolation,
  ChainInvalid,
  ImageMismatch,
  NotOperational,
  StaleSequence,
  DuplicateUuid,
  UnknownIssuer,
  NotFound,
  CorruptLog,
  ParseError,
  PayloadTooLarge,
  MissingFragment,
  InconsistentSet,
  NoSuchSession,
  UsageError,
  ScenarioError,
  IoError,
};

std::string_view error_code_name(ErrorCode code);
std::optional<ErrorCode> error_code_from_name(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// CorruptLog carries the sequence number of the record that failed replay.
class CorruptLogError : public Error {
 public:
  CorruptLogError(std::uint64_t sequence, const std::string& detail)
      : Error(ErrorCode::CorruptLog, "record " + std::to_string(sequence) + ": " + detail),
        sequence_(sequence) {}

  std::uint64_t sequence() const noexcept { return sequence_; }

 private:
  std::uint64_t sequence_;
};

}  // namespace tlt
