#include "tlt/attestation.hpp"

#include "tlt/error.hpp"

namespace tlt {

Bytes AttestationResponse::signed_portion() const {
  Bytes out;
  out.reserve(kSignedSize);
  append(out, state_digest.bytes);
  append(out, challenge.bytes);
  append(out, device_nonce.bytes);
  return out;
}

Bytes AttestationResponse::encode() const {
  Bytes out = signed_portion();
  append(out, signature.bytes);
  return out;
}

AttestationResponse AttestationResponse::decode(ByteView payload) {
  if (payload.size() != kSize) {
    throw Error(ErrorCode::ParseError, "response must be " + std::to_string(kSize) + " bytes");
  }
  AttestationResponse r;
  r.state_digest = Digest::from(payload.subspan(0, kDigestSize));
  r.challenge = Nonce::from(payload.subspan(kDigestSize, kNonceSize));
  r.device_nonce = Nonce::from(payload.subspan(kDigestSize + kNonceSize, kNonceSize));
  r.signature = Signature::from(payload.subspan(kSignedSize, kSignatureSize));
  return r;
}

}  // namespace tlt
