#include "tlt/verifier.hpp"

#include "tlt/transport.hpp"

namespace tlt {

namespace {

constexpr StateCheck kAllChecks[] = {StateCheck::VerifiedCurrent, StateCheck::VerifiedStale,
                                     StateCheck::UnknownState,    StateCheck::BadSignature,
                                     StateCheck::ReplayDetected,  StateCheck::UnknownDevice};

TrustVerdict make_verdict(const Uuid& uuid, std::optional<DeviceView> identity, StateCheck check,
                          std::string reason) {
  return TrustVerdict{uuid, std::move(identity), check, check == StateCheck::VerifiedCurrent, std::move(reason)};
}

}  // namespace

std::string_view state_check_name(StateCheck check) {
  switch (check) {
    case StateCheck::VerifiedCurrent: return "verified_current";
    case StateCheck::VerifiedStale: return "verified_stale";
    case StateCheck::UnknownState: return "unknown_state";
    case StateCheck::BadSignature: return "bad_signature";
    case StateCheck::ReplayDetected: return "replay_detected";
    case StateCheck::UnknownDevice: return "unknown_device";
  }
  return "unknown";
}

std::optional<StateCheck> state_check_from_name(std::string_view name) {
  for (StateCheck c : kAllChecks) {
    if (state_check_name(c) == name) return c;
  }
  return std::nullopt;
}

std::string format_verdict(const TrustVerdict& verdict) {
  return "VERDICT uuid=" + to_hex(verdict.uuid) + " state=" + std::string(state_check_name(verdict.state_check)) +
         " gate=" + (verdict.gate ? "1" : "0") + " reason=" + verdict.reason;
}

TrustVerdict parse_verdict(std::string_view line) {
  auto bad = [](const char* why) { return Error(ErrorCode::ParseError, std::string("verdict: ") + why); };
  auto take = [&](std::string_view key) -> std::string_view {
    if (line.substr(0, key.size()) != key) throw bad("unexpected field order");
    line.remove_prefix(key.size());
    if (key == " reason=") return line;
    std::size_t sp = line.find(' ');
    std::string_view value = line.substr(0, sp);
    line.remove_prefix(sp == std::string_view::npos ? line.size() : sp);
    return value;
  };
  if (line.substr(0, 7) != "VERDICT") throw bad("missing VERDICT tag");
  line.remove_prefix(7);
  std::string_view uuid_hex = take(" uuid=");
  std::string_view state = take(" state=");
  std::string_view gate = take(" gate=");
  std::string_view reason = take(" reason=");

  Bytes raw;
  if (!from_hex(uuid_hex, raw) || raw.size() != kUuidSize) throw bad("bad uuid");
  auto check = state_check_from_name(state);
  if (!check) throw bad("unknown state");
  if (gate != "0" && gate != "1") throw bad("gate must be 0 or 1");
  TrustVerdict v{Uuid::from(raw), std::nullopt, *check, gate == "1", std::string(reason)};
  if (v.gate && v.state_check != StateCheck::VerifiedCurrent) throw bad("open gate on unverified state");
  return v;
}

Verifier::Verifier(const StoreQuery& store, RootCertificate trusted_root, RandomSource& rng)
    : store_(store), root_(std::move(trusted_root)), rng_(rng) {}

Uuid Verifier::scan(ByteView advertisement) const { return transport::parse_advertisement(advertisement); }

IssuedChallenge Verifier::issue_challenge(const Uuid& uuid) {
  ChallengeSession session{uuid, generate_nonce(rng_), ++clock_};
  sessions_[uuid] = session;
  IssuedChallenge out{session, {}};
  for (const auto& f : transport::fragment(transport::MsgType::Challenge, session.challenge.bytes)) {
    out.frames.push_back(f.encode());
  }
  return out;
}

std::optional<ChallengeSession> Verifier::outstanding(const Uuid& uuid) const {
  auto it = sessions_.find(uuid);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

TrustVerdict Verifier::verify_response(const Uuid& uuid, ByteView response_payload) {
  auto it = sessions_.find(uuid);
  if (it == sessions_.end()) throw Error(ErrorCode::NoSuchSession, "no outstanding challenge for " + to_hex(uuid));
  const ChallengeSession session = it->second;
  sessions_.erase(it);

  std::optional<DeviceView> identity;
  try {
    identity = store_.lookup_device(uuid);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotFound) throw;
    return make_verdict(uuid, std::nullopt, StateCheck::UnknownDevice, "uuid is not registered in the trust store");
  }
  const Document chain[] = {identity->certificate.document(), identity->manufacturer.document()};
  if (auto r = verify_chain(chain, root_); !r || identity->certificate.uuid() != uuid) {
    return make_verdict(uuid, std::nullopt, StateCheck::UnknownDevice,
                        "store certificate does not chain to the trusted root");
  }

  if (response_payload.size() != AttestationResponse::kSize) {
    return make_verdict(uuid, identity, StateCheck::BadSignature, "response has the wrong length");
  }
  AttestationResponse resp = AttestationResponse::decode(response_payload);
  if (!verify(identity->certificate.device_key(), resp.signed_portion(), resp.signature)) {
    return make_verdict(uuid, identity, StateCheck::BadSignature,
                        "response signature does not verify under the certified device key");
  }
  if (resp.challenge != session.challenge) {
    return make_verdict(uuid, identity, StateCheck::ReplayDetected, "response does not echo the issued challenge");
  }

  std::optional<StateView> state;
  try {
    state = store_.lookup_state(uuid, resp.state_digest);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NotFound) throw;
  }
  if (!state) {
    return make_verdict(uuid, identity, StateCheck::UnknownState,
                        "attested state digest has no record in the trust store");
  }
  if (!state->expected_current) {
    return make_verdict(uuid, identity, StateCheck::VerifiedStale,
                        "attested state is registered but superseded (firmware " + state->firmware.meta() + ")");
  }
  return make_verdict(uuid, identity, StateCheck::VerifiedCurrent,
                      "firmware " + state->firmware.meta() + ", configuration seq " +
                          std::to_string(state->config_seq));
}

bool trust_decision(const TrustVerdict& verdict, bool auto_accept,
                    const std::function<bool(const TrustVerdict&)>& prompt) {
  if (auto_accept) return verdict.gate;
  bool answer = prompt ? prompt(verdict) : false;
  return answer && verdict.gate;
}

}  // namespace tlt
