#include "tlt/bytes.hpp"

#include "tlt/error.hpp"

namespace tlt {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

std::string to_hex(ByteView data) {
  std::string out;
  out.reserve(data.size() * 2);
  for (std::uint8_t b : data) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0x0f]);
  }
  return out;
}

bool from_hex(std::string_view text, Bytes& out) {
  if (text.size() % 2 != 0) return false;
  Bytes result;
  result.reserve(text.size() / 2);
  for (std::size_t i = 0; i < text.size(); i += 2) {
    int hi = hex_value(text[i]);
    int lo = hex_value(text[i + 1]);
    if (hi < 0 || lo < 0) return false;
    result.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  out = std::move(result);
  return true;
}

Bytes from_hex_or_throw(std::string_view text) {
  Bytes out;
  if (!from_hex(text, out)) throw Error(ErrorCode::ParseError, "invalid hex string");
  return out;
}

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EntropyUnavailable: return "EntropyUnavailable";
    case ErrorCode::InvalidKey: return "InvalidKey";
    case ErrorCode::NonCanonicalField: return "NonCanonicalField";
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::ConstraintViolation: return "ConstraintViolation";
    case ErrorCode::ChainInvalid: return "ChainInvalid";
    case ErrorCode::ImageMismatch: return "ImageMismatch";
    case ErrorCode::NotOperational: return "NotOperational";
    case ErrorCode::StaleSequence: return "StaleSequence";
    case ErrorCode::DuplicateUuid: return "DuplicateUuid";
    case ErrorCode::UnknownIssuer: return "UnknownIssuer";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::CorruptLog: return "CorruptLog";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::PayloadTooLarge: return "PayloadTooLarge";
    case ErrorCode::MissingFragment: return "MissingFragment";
    case ErrorCode::InconsistentSet: return "InconsistentSet";
    case ErrorCode::NoSuchSession: return "NoSuchSession";
    case ErrorCode::UsageError: return "UsageError";
    case ErrorCode::ScenarioError: return "ScenarioError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

std::optional<ErrorCode> error_code_from_name(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::IoError); ++i) {
    auto code = static_cast<ErrorCode>(i);
    if (error_code_name(code) == name) return code;
  }
  return std::nullopt;
}

}  // namespace tlt
