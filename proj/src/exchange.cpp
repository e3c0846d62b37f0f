#include "tlt/exchange.hpp"

namespace tlt {

TrustVerdict run_attestation(const Device& device, Verifier& verifier, transport::Channel& channel,
                             RandomSource& device_rng) {
  using transport::MsgType;

  channel.advertising.send(device.advertise());
  auto advert = channel.advertising.receive();
  if (!advert) throw Error(ErrorCode::ParseError, "no advertisement received");
  Uuid uuid = verifier.scan(*advert);

  IssuedChallenge issued = verifier.issue_challenge(uuid);
  for (auto& frame : issued.frames) channel.to_device.send(frame);

  transport::Message challenge = transport::receive_message(channel.to_device);
  if (challenge.msg_type != MsgType::Challenge || challenge.payload.size() != kNonceSize) {
    throw Error(ErrorCode::ParseError, "device received a malformed challenge");
  }
  AttestationResponse resp = device.handle_challenge(Nonce::from(challenge.payload), device_rng);
  transport::send_message(channel.to_verifier, MsgType::Response, resp.encode());

  transport::Message reply = transport::receive_message(channel.to_verifier);
  if (reply.msg_type != MsgType::Response) throw Error(ErrorCode::ParseError, "expected a response message");
  return verifier.verify_response(uuid, reply.payload);
}

}  // namespace tlt
