#include "support.hpp"

namespace tlt {
namespace {

using test::World;

AttestationResponse respond(Device& dev, const IssuedChallenge& ic, RandomSource& rng) {
  std::vector<transport::DataFrame> frames;
  for (const auto& f : ic.frames) frames.push_back(transport::DataFrame::decode(f));
  transport::Message m = transport::reassemble(frames);
  return dev.handle_challenge(Nonce::from(m.payload), rng);
}

TEST(Scan, AdvertisementToIdentity) {
  World w;
  Device dev = w.born_device("porch light");
  Verifier v(w.store, w.root, w.rng);
  Uuid u = v.scan(dev.advertise());
  EXPECT_EQ(u, dev.uuid());
  EXPECT_EQ(w.store.lookup_device(u).model(), "porch light");
  EXPECT_EQ(test::code_of([&] { v.scan(Bytes(19, 0)); }), ErrorCode::ParseError);
}

TEST(Challenge, FreshSingleFrameNonces) {
  World w;
  Verifier v(w.store, w.root, w.rng);
  Uuid u = generate_uuid(w.rng);
  IssuedChallenge a = v.issue_challenge(u);
  IssuedChallenge b = v.issue_challenge(u);
  EXPECT_NE(a.session.challenge, b.session.challenge);
  ASSERT_EQ(b.frames.size(), 1u);
  auto f = transport::DataFrame::decode(b.frames[0]);
  EXPECT_EQ(f.payload.size(), 16u);
  EXPECT_EQ(f.msg_type, transport::MsgType::Challenge);
  EXPECT_EQ(b.frames[0].size(), 21u);
  EXPECT_EQ(v.outstanding_count(), 1u);
  EXPECT_EQ(v.outstanding(u)->challenge, b.session.challenge);
}

TEST(Verify, HonestDeviceCurrent) {
  World w;
  Device dev = w.configured_device();
  Verifier v(w.store, w.root, w.rng);
  transport::Channel ch;
  TrustVerdict verdict = run_attestation(dev, v, ch, w.rng);
  EXPECT_EQ(verdict.state_check, StateCheck::VerifiedCurrent);
  EXPECT_TRUE(verdict.gate);
  ASSERT_TRUE(verdict.identity.has_value());
  EXPECT_EQ(verdict.identity->model(), "front door lock");
  EXPECT_EQ(v.outstanding_count(), 0u);
  EXPECT_EQ(ch.to_verifier.frames_sent(), 1u);
}

TEST(Verify, UnregisteredFirmwareIsUnknownState) {
  World w;
  Device dev = w.configured_device();
  Bytes image = random_bytes(100, w.rng);
  FirmwareDocument fw = sign_firmware(image, "lock 1.1", w.mfr_keys.secret_key, w.mcrt);
  auto chain = w.mfr_chain();
  dev.install_firmware(fw, image, chain, "slot=1");  // never registered
  Verifier v(w.store, w.root, w.rng);
  transport::Channel ch;
  TrustVerdict verdict = run_attestation(dev, v, ch, w.rng);
  EXPECT_EQ(verdict.state_check, StateCheck::UnknownState);
  EXPECT_FALSE(verdict.gate);
}

TEST(Verify, SupersededStateIsStale) {
  World w;
  Device dev = w.configured_device();
  test::TempDir dir;
  dev.save(dir / "old.tltdev", dir / "old.tltkey");
  ConfigurationDocument c2 = dev.apply_configuration(as_bytes("v2"), 2);
  w.store.register_document(RecordKind::Configuration, c2.document());
  Device old = Device::load(dir / "old.tltdev");
  Verifier v(w.store, w.root, w.rng);
  transport::Channel ch;
  TrustVerdict verdict = run_attestation(old, v, ch, w.rng);
  EXPECT_EQ(verdict.state_check, StateCheck::VerifiedStale);
  EXPECT_FALSE(verdict.gate);
}

TEST(Verify, UnknownDeviceAndBadSignature) {
  World w;
  Device dev = w.configured_device();
  Verifier v(w.store, w.root, w.rng);
  Uuid stranger = generate_uuid(w.rng);
  v.issue_challenge(stranger);
  EXPECT_EQ(v.verify_response(stranger, Bytes(128, 0)).state_check, StateCheck::UnknownDevice);

  IssuedChallenge ic = v.issue_challenge(dev.uuid());
  Bytes resp = respond(dev, ic, w.rng).encode();
  resp[100] ^= 1;
  EXPECT_EQ(v.verify_response(dev.uuid(), resp).state_check, StateCheck::BadSignature);

  v.issue_challenge(dev.uuid());
  EXPECT_EQ(v.verify_response(dev.uuid(), Bytes(127, 0)).state_check, StateCheck::BadSignature);

  EXPECT_EQ(test::code_of([&] { v.verify_response(dev.uuid(), resp); }), ErrorCode::NoSuchSession);
}

TEST(Verify, StoreCertificateNotChainingToVerifierRootIsUnknown) {
  World w, other(99);
  Device dev = w.configured_device();
  Verifier v(w.store, other.root, w.rng);
  transport::Channel ch;
  TrustVerdict verdict = run_attestation(dev, v, ch, w.rng);
  EXPECT_EQ(verdict.state_check, StateCheck::UnknownDevice);
  EXPECT_FALSE(verdict.gate);
}

TEST(Verify, ReplayDetected) {
  World w;
  Device dev = w.configured_device();
  Verifier v(w.store, w.root, w.rng);
  IssuedChallenge first = v.issue_challenge(dev.uuid());
  Bytes captured = respond(dev, first, w.rng).encode();
  EXPECT_EQ(v.verify_response(dev.uuid(), captured).state_check, StateCheck::VerifiedCurrent);
  // Double submission: the session was consumed.
  EXPECT_EQ(test::code_of([&] { v.verify_response(dev.uuid(), captured); }), ErrorCode::NoSuchSession);
  for (int i = 0; i < 100; ++i) {
    v.issue_challenge(dev.uuid());
    TrustVerdict r = v.verify_response(dev.uuid(), captured);
    EXPECT_EQ(r.state_check, StateCheck::ReplayDetected);
    EXPECT_FALSE(r.gate);
  }
}

TEST(Verify, SupersededChallengeIsReplay) {
  World w;
  Device dev = w.configured_device();
  Verifier v(w.store, w.root, w.rng);
  IssuedChallenge a = v.issue_challenge(dev.uuid());
  v.issue_challenge(dev.uuid());
  Bytes resp = respond(dev, a, w.rng).encode();
  EXPECT_EQ(v.verify_response(dev.uuid(), resp).state_check, StateCheck::ReplayDetected);
}

TEST(Verify, DeterministicUnderSeed) {
  auto run = [] {
    World w(1234);
    Device dev = w.configured_device();
    Verifier v(w.store, w.root, w.rng);
    transport::Channel ch;
    return format_verdict(run_attestation(dev, v, ch, w.rng));
  };
  EXPECT_EQ(run(), run());
}

TEST(Exchange, TransportFaultsSurface) {
  World w;
  Device dev = w.configured_device();
  Verifier v(w.store, w.root, w.rng);
  transport::Channel drop;
  drop.to_verifier.set_drop([](std::size_t) { return true; });
  EXPECT_EQ(test::code_of([&] { run_attestation(dev, v, drop, w.rng); }), ErrorCode::MissingFragment);

  transport::Channel flip;
  flip.to_verifier.set_corrupt([](std::size_t, Bytes& f) { f[40] ^= 1; });
  TrustVerdict r = run_attestation(dev, v, flip, w.rng);
  EXPECT_EQ(r.state_check, StateCheck::BadSignature);
  EXPECT_FALSE(r.gate);
}

TEST(VerdictLine, FormatParse) {
  TrustVerdict v{generate_uuid(), std::nullopt, StateCheck::VerifiedCurrent, true, "all good here"};
  std::string line = format_verdict(v);
  EXPECT_EQ(line.rfind("VERDICT uuid=" + to_hex(v.uuid) + " state=verified_current gate=1 reason=", 0), 0u);
  TrustVerdict back = parse_verdict(line);
  EXPECT_EQ(back.uuid, v.uuid);
  EXPECT_EQ(back.state_check, v.state_check);
  EXPECT_EQ(back.gate, v.gate);
  EXPECT_EQ(back.reason, v.reason);
  EXPECT_EQ(test::code_of([&] { parse_verdict("VERDICT uuid=00 state=x gate=1 reason="); }), ErrorCode::ParseError);
  EXPECT_EQ(test::code_of([&] {
              parse_verdict("VERDICT uuid=" + to_hex(v.uuid) + " state=unknown_state gate=1 reason=");
            }),
            ErrorCode::ParseError);
  for (auto c : {StateCheck::VerifiedCurrent, StateCheck::VerifiedStale, StateCheck::UnknownState,
                 StateCheck::BadSignature, StateCheck::ReplayDetected, StateCheck::UnknownDevice}) {
    EXPECT_EQ(state_check_from_name(state_check_name(c)), c);
  }
}

TEST(TrustDecision, GateDominates) {
  TrustVerdict open{generate_uuid(), std::nullopt, StateCheck::VerifiedCurrent, true, ""};
  TrustVerdict shut{generate_uuid(), std::nullopt, StateCheck::UnknownDevice, false, ""};
  auto yes = [](const TrustVerdict&) { return true; };
  auto no = [](const TrustVerdict&) { return false; };
  EXPECT_TRUE(trust_decision(open, true));
  EXPECT_FALSE(trust_decision(shut, true));
  EXPECT_FALSE(trust_decision(shut, false, yes));
  EXPECT_TRUE(trust_decision(open, false, yes));
  EXPECT_FALSE(trust_decision(open, false, no));
  EXPECT_FALSE(trust_decision(open, false));
  int asked = 0;
  trust_decision(open, true, [&](const TrustVerdict&) { return ++asked > 0; });
  EXPECT_EQ(asked, 0);
}

}  // namespace
}  // namespace tlt
