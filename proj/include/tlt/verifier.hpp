#pragma once

// User-side verification: scan, identity lookup, challenge, response check,
// and the interaction gate.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tlt/attestation.hpp"
#include "tlt/store.hpp"

namespace tlt {

enum class StateCheck : std::uint8_t {
  VerifiedCurrent,
  VerifiedStale,
  UnknownState,
  BadSignature,
  ReplayDetected,
  UnknownDevice,
};

std::string_view state_check_name(StateCheck check);
std::optional<StateCheck> state_check_from_name(std::string_view name);

struct TrustVerdict {
  Uuid uuid;
  std::optional<DeviceView> identity;
  StateCheck state_check = StateCheck::UnknownDevice;
  // Interaction permitted. True only for VerifiedCurrent.
  bool gate = false;
  std::string reason;
};

// "VERDICT uuid=<hex> state=<enum> gate=<0|1> reason=<text>"
std::string format_verdict(const TrustVerdict& verdict);
// Inverse of format_verdict (identity is not carried). ParseError on bad input.
TrustVerdict parse_verdict(std::string_view line);

struct ChallengeSession {
  Uuid uuid;
  Nonce challenge;
  std::uint64_t issued_at = 0;
};

struct IssuedChallenge {
  ChallengeSession session;
  std::vector<Bytes> frames;  // encoded data frames, msg_type 0x01
};

class Verifier {
 public:
  Verifier(const StoreQuery& store, RootCertificate trusted_root, RandomSource& rng = system_random());

  // ParseError on a malformed advertisement.
  Uuid scan(ByteView advertisement) const;

  // Replaces any outstanding challenge for `uuid`.
  IssuedChallenge issue_challenge(const Uuid& uuid);

  // Consumes the outstanding challenge for `uuid` whatever the outcome.
  // NoSuchSession if there is none. Checks run in order: identity,
  // signature, challenge echo, state lookup, currency.
  TrustVerdict verify_response(const Uuid& uuid, ByteView response_payload);

  std::optional<ChallengeSession> outstanding(const Uuid& uuid) const;
  std::size_t outstanding_count() const { return sessions_.size(); }

 private:
  const StoreQuery& store_;
  RootCertificate root_;
  RandomSource& rng_;
  std::map<Uuid, ChallengeSession> sessions_;
  std::uint64_t clock_ = 0;
};

// With auto_accept the gate decides. Otherwise `prompt` is asked and its
// answer is AND-ed with the gate; a missing prompt counts as "no".
bool trust_decision(const TrustVerdict& verdict, bool auto_accept,
                    const std::function<bool(const TrustVerdict&)>& prompt = {});

}  // namespace tlt
