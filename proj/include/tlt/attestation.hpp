#pragma once

#include "tlt/bytes.hpp"
#include "tlt/crypto.hpp"

namespace tlt {

// state_digest(32) | challenge(16) | device_nonce(16) | signature(64).
// The signature covers the first 64 bytes.
struct AttestationResponse {
  static constexpr std::size_t kSignedSize = kDigestSize + 2 * kNonceSize;
  static constexpr std::size_t kSize = kSignedSize + kSignatureSize;

  Digest state_digest;
  Nonce challenge;
  Nonce device_nonce;
  Signature signature;

  Bytes signed_portion() const;
  Bytes encode() const;
  // ParseError unless exactly kSize bytes.
  static AttestationResponse decode(ByteView payload);
};

}  // namespace tlt
