#include "tlt/threats.hpp"

#include <memory>

#include "tlt/exchange.hpp"

namespace tlt::threats {

namespace {

struct Ecosystem {
  RandomSource& rng;
  KeyPair authority;
  RootCertificate root;
  Store store;
  KeyPair mfr_keys;
  ManufacturerCertificate mcrt;
  Bytes fw_image;
  FirmwareDocument fw;

  std::vector<Document> mfr_chain() const { return {mcrt.document()}; }
};

std::unique_ptr<Ecosystem> build_ecosystem(RandomSource& rng) {
  KeyPair authority = generate_keypair(rng);
  RootCertificate root = RootCertificate::create("TLT Demo Authority", authority);
  Store store(root);
  KeyPair mfr_keys = generate_keypair(rng);
  ManufacturerCertificate mcrt =
      make_manufacturer_certificate("Acme Smart Locks", mfr_keys.public_key, authority.secret_key, rng);
  store.register_document(RecordKind::Manufacturer, mcrt.document());
  Bytes image = random_bytes(4096, rng);
  FirmwareDocument fw = sign_firmware(image, "acme-lock 1.0.0", mfr_keys.secret_key, mcrt);
  store.register_document(RecordKind::Firmware, fw.document());
  return std::make_unique<Ecosystem>(Ecosystem{rng, std::move(authority), std::move(root), std::move(store),
                                               std::move(mfr_keys), std::move(mcrt), std::move(image),
                                               std::move(fw)});
}

// Born, programmed, configured, and every proof registered.
Device honest_device(Ecosystem& eco) {
  auto [dev, dcrt] = Device::birth(eco.mcrt, eco.mfr_keys.secret_key, eco.root, "smart lock, fingerprint reader",
                                   eco.rng);
  eco.store.register_document(RecordKind::Device, dcrt.document(), eco.mfr_chain());
  auto chain = eco.mfr_chain();
  InstallationDocument inst = dev.install_firmware(eco.fw, eco.fw_image, chain, "slot=0");
  eco.store.register_document(RecordKind::Installation, inst.document());
  ConfigurationDocument cfg = dev.apply_configuration(as_bytes("mode=normal"), 1);
  eco.store.register_document(RecordKind::Configuration, cfg.document());
  return dev;
}

// Firmware signed by a key that never registered with the authority.
FirmwareDocument rogue_firmware(Ecosystem& eco, std::string_view meta) {
  KeyPair rogue_authority = generate_keypair(eco.rng);
  KeyPair rogue_keys = generate_keypair(eco.rng);
  ManufacturerCertificate rogue_mcrt =
      make_manufacturer_certificate("Acme Smart Locks", rogue_keys.public_key, rogue_authority.secret_key, eco.rng);
  return sign_firmware(random_bytes(4096, eco.rng), meta, rogue_keys.secret_key, rogue_mcrt);
}

// A device that was never certified: self-made key and uuid, "certified" by
// a manufacturer the authority never signed.
Device impostor_device(Ecosystem& eco) {
  KeyPair fake_authority = generate_keypair(eco.rng);
  RootCertificate fake_root = RootCertificate::create("TLT Demo Authority", fake_authority);
  KeyPair fake_mfr_keys = generate_keypair(eco.rng);
  ManufacturerCertificate fake_mcrt = make_manufacturer_certificate("Acme Smart Locks", fake_mfr_keys.public_key,
                                                                    fake_authority.secret_key, eco.rng);
  auto [dev, dcrt] =
      Device::birth(fake_mcrt, fake_mfr_keys.secret_key, fake_root, "smart lock, fingerprint reader", eco.rng);
  Bytes image = random_bytes(4096, eco.rng);
  FirmwareDocument fw = sign_firmware(image, "acme-lock 1.0.0", fake_mfr_keys.secret_key, fake_mcrt);
  const Document chain[] = {fake_mcrt.document()};
  dev.install_firmware(fw, image, chain, "slot=0");
  return dev;
}

// The user's app only proceeds when the trust decision says yes. The user
// is eager and answers yes to every prompt.
bool user_would_interact(const TrustVerdict& verdict) {
  return trust_decision(verdict, /*auto_accept=*/false, [](const TrustVerdict&) { return true; });
}

std::string observed_of(const TrustVerdict& v) { return std::string(state_check_name(v.state_check)); }

void record_verdict(ScenarioReport& r, const TrustVerdict& v, const std::string& label) {
  r.notes.push_back(label + ": " + format_verdict(v));
}

ScenarioReport run_honest(Ecosystem& eco) {
  ScenarioReport r;
  r.expected = "verified_current gate=1";
  Device dev = honest_device(eco);
  Verifier verifier(eco.store, eco.root, eco.rng);
  transport::Channel channel;
  TrustVerdict v = run_attestation(dev, verifier, channel, eco.rng);
  record_verdict(r, v, "attestation");
  r.device_uuid = dev.uuid();
  r.observed = observed_of(v);
  r.gate = v.gate;
  r.passed = v.state_check == StateCheck::VerifiedCurrent && v.gate && user_would_interact(v);
  return r;
}

// TA01 and TA02 share a shape: a rogue device, an asset the user would hand
// over on interaction, and a gate that must stay shut.
ScenarioReport run_ta01(Ecosystem& eco) {
  ScenarioReport r;
  r.expected = "gate=0 before physical interaction (biometric sensor untouched)";
  Device dev = honest_device(eco);
  // The lock is swapped for one running harvesting firmware.
  dev.tamper_reflash(rogue_firmware(eco, "droplock harvest 6.6.6"), "slot=0");
  Verifier verifier(eco.store, eco.root, eco.rng);
  transport::Channel channel;
  TrustVerdict v = run_attestation(dev, verifier, channel, eco.rng);
  record_verdict(r, v, "attestation");
  bool touched = user_would_interact(v);
  r.notes.push_back(std::string("fingerprint presented to sensor: ") + (touched ? "yes" : "no"));
  r.device_uuid = dev.uuid();
  r.observed = observed_of(v);
  r.gate = v.gate;
  if (!v.gate) r.controls_fired.insert(Control::C06);
  r.passed = !v.gate && !touched;
  return r;
}

ScenarioReport run_ta02(Ecosystem& eco) {
  ScenarioReport r;
  r.expected = "gate=0 before app communication (credentials withheld)";
  Device dev = impostor_device(eco);
  Verifier verifier(eco.store, eco.root, eco.rng);
  transport::Channel channel;
  TrustVerdict v = run_attestation(dev, verifier, channel, eco.rng);
  record_verdict(r, v, "attestation");
  bool sent = user_would_interact(v);
  r.notes.push_back(std::string("credentials sent to device: ") + (sent ? "yes" : "no"));
  r.device_uuid = dev.uuid();
  r.observed = observed_of(v);
  r.gate = v.gate;
  if (!v.gate) r.controls_fired.insert(Control::C06);
  r.passed = !v.gate && !sent;
  return r;
}

ScenarioReport run_ta03(Ecosystem& eco) {
  ScenarioReport r;
  r.expected = "gate=0; hostile response rejected before the app acts on it";
  Device dev = honest_device(eco);  // legitimate identity, compromised radio stack
  Verifier verifier(eco.store, eco.root, eco.rng);
  transport::Channel channel;

  channel.advertising.send(dev.advertise());
  Uuid uuid = verifier.scan(*channel.advertising.receive());
  for (auto& f : verifier.issue_challenge(uuid).frames) channel.to_device.send(f);
  (void)transport::receive_message(channel.to_device);
  // Oversized crafted payload instead of a 128-byte response.
  Bytes exploit(600, 0x41);
  transport::send_message(channel.to_verifier, transport::MsgType::Response, exploit);
  transport::Message reply = transport::receive_message(channel.to_verifier);
  TrustVerdict v = verifier.verify_response(uuid, reply.payload);
  record_verdict(r, v, "attestation");
  bool continued = user_would_interact(v);
  r.notes.push_back(std::string("app continued session: ") + (continued ? "yes" : "no"));
  r.device_uuid = dev.uuid();
  r.observed = observed_of(v);
  r.gate = v.gate;
  if (!v.gate) r.controls_fired.insert(Control::C06);
  r.passed = !v.gate && !continued && v.state_check == StateCheck::BadSignature;
  return r;
}

ScenarioReport run_ta04(Ecosystem& eco) {
  ScenarioReport r;
  r.expected = "unknown_state gate=0";
  Device dev = honest_device(eco);
  FirmwareDocument rogue = rogue_firmware(eco, "acme-lock 1.0.0-patched");

  // Secure boot bypassed: the device still answers, with the rogue state.
  Device bypassed = dev;
  bypassed.tamper_reflash(rogue, "slot=0");
  Verifier verifier(eco.store, eco.root, eco.rng);
  transport::Channel channel;
  TrustVerdict v = run_attestation(bypassed, verifier, channel, eco.rng);
  record_verdict(r, v, "secure boot bypassed");
  bool detected = v.state_check == StateCheck::UnknownState && !v.gate;
  if (detected) {
    r.controls_fired.insert(Control::C02);
    r.controls_fired.insert(Control::C06);
  }

  // Secure boot intact: the reflashed image fails revalidation at boot.
  Device guarded = dev;
  guarded.tamper_reflash(rogue, "slot=0");
  BootStatus status = guarded.boot();
  r.notes.push_back("secure boot intact: boot status " + std::string(boot_status_name(status)));
  bool refused = false;
  try {
    transport::Channel second;
    (void)run_attestation(guarded, verifier, second, eco.rng);
  } catch (const Error& e) {
    refused = e.code() == ErrorCode::NotOperational;
    r.notes.push_back(std::string("secure boot intact: device refused attestation (") + e.what() + ")");
  }
  if (status == BootStatus::IntegrityFailed && refused) r.controls_fired.insert(Control::C04);

  r.device_uuid = dev.uuid();
  r.observed = observed_of(v);
  r.gate = v.gate;
  r.passed = detected && status == BootStatus::IntegrityFailed && refused;
  return r;
}

ScenarioReport run_ta05(Ecosystem& eco) {
  ScenarioReport r;
  r.expected = "unknown_device or bad_signature, gate=0";
  Verifier verifier(eco.store, eco.root, eco.rng);

  // Fresh identity nobody registered.
  Device impostor = impostor_device(eco);
  transport::Channel channel;
  TrustVerdict fresh = run_attestation(impostor, verifier, channel, eco.rng);
  record_verdict(r, fresh, "self-made identity");

  // Replays a genuine device's UUID but lacks its key.
  Device genuine = honest_device(eco);
  transport::Channel clone_channel;
  clone_channel.advertising.send(genuine.advertise());
  Uuid claimed = verifier.scan(*clone_channel.advertising.receive());
  IssuedChallenge issued = verifier.issue_challenge(claimed);
  for (auto& f : issued.frames) clone_channel.to_device.send(f);
  transport::Message ch = transport::receive_message(clone_channel.to_device);
  AttestationResponse forged = impostor.handle_challenge(Nonce::from(ch.payload), eco.rng);
  transport::send_message(clone_channel.to_verifier, transport::MsgType::Response, forged.encode());
  TrustVerdict cloned = verifier.verify_response(claimed, transport::receive_message(clone_channel.to_verifier).payload);
  record_verdict(r, cloned, "cloned uuid");

  bool ok_fresh = fresh.state_check == StateCheck::UnknownDevice && !fresh.gate;
  bool ok_clone = cloned.state_check == StateCheck::BadSignature && !cloned.gate;
  if (ok_fresh || ok_clone) r.controls_fired.insert(Control::C06);
  r.device_uuid = impostor.uuid();
  r.observed = observed_of(fresh);
  r.gate = fresh.gate || cloned.gate;
  r.passed = ok_fresh && ok_clone;
  return r;
}

ScenarioReport run_ta06(Ecosystem& eco) {
  ScenarioReport r;
  r.expected = "unknown_state gate=0";
  Device dev = honest_device(eco);
  // Reconfigured in the field; the proof is device-signed but never registered.
  dev.apply_configuration(as_bytes("mode=unlock-all"), 2);
  Verifier verifier(eco.store, eco.root, eco.rng);
  transport::Channel channel;
  TrustVerdict v = run_attestation(dev, verifier, channel, eco.rng);
  record_verdict(r, v, "attestation");
  r.device_uuid = dev.uuid();
  r.observed = observed_of(v);
  r.gate = v.gate;
  if (v.state_check == StateCheck::UnknownState && !v.gate) {
    r.controls_fired.insert(Control::C05);
    r.controls_fired.insert(Control::C06);
  }
  r.passed = v.state_check == StateCheck::UnknownState && !v.gate;
  return r;
}

std::uint64_t scenario_seed(std::uint64_t seed, ThreatId id) {
  return seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(id) + 1;
}

}  // namespace

std::string_view threat_name(ThreatId id) {
  switch (id) {
    case ThreatId::HonestControl: return "CONTROL";
    case ThreatId::TA01: return "TA01";
    case ThreatId::TA02: return "TA02";
    case ThreatId::TA03: return "TA03";
    case ThreatId::TA04: return "TA04";
    case ThreatId::TA05: return "TA05";
    case ThreatId::TA06: return "TA06";
  }
  return "?";
}

std::string_view threat_description(ThreatId id) {
  switch (id) {
    case ThreatId::HonestControl: return "honest registered device";
    case ThreatId::TA01: return "biometric harvesting";
    case ThreatId::TA02: return "credential collection";
    case ThreatId::TA03: return "reverse exploit of app";
    case ThreatId::TA04: return "reprogrammed device";
    case ThreatId::TA05: return "impostor device";
    case ThreatId::TA06: return "re-/mis-configured device";
  }
  return "?";
}

std::optional<ThreatId> threat_from_name(std::string_view name) {
  for (ThreatId id : all_scenarios()) {
    if (threat_name(id) == name) return id;
  }
  return std::nullopt;
}

std::string_view control_name(Control c) {
  switch (c) {
    case Control::C01: return "C01";
    case Control::C02: return "C02";
    case Control::C03: return "C03";
    case Control::C04: return "C04";
    case Control::C05: return "C05";
    case Control::C06: return "C06";
  }
  return "?";
}

const std::vector<ThreatId>& all_scenarios() {
  static const std::vector<ThreatId> ids{ThreatId::HonestControl, ThreatId::TA01, ThreatId::TA02, ThreatId::TA03,
                                         ThreatId::TA04,          ThreatId::TA05, ThreatId::TA06};
  return ids;
}

std::set<Control> mapped_controls(ThreatId id) {
  switch (id) {
    case ThreatId::HonestControl: return {};
    case ThreatId::TA01:
    case ThreatId::TA02:
    case ThreatId::TA03:
    case ThreatId::TA05: return {Control::C06};
    case ThreatId::TA04: return {Control::C02, Control::C04, Control::C06};
    case ThreatId::TA06: return {Control::C05, Control::C06};
  }
  return {};
}

ScenarioReport run_scenario(ThreatId id, std::optional<std::uint64_t> seed) {
  std::unique_ptr<SeededRandom> seeded;
  if (seed) seeded = std::make_unique<SeededRandom>(scenario_seed(*seed, id));
  RandomSource& rng = seeded ? static_cast<RandomSource&>(*seeded) : system_random();

  std::unique_ptr<Ecosystem> eco;
  try {
    eco = build_ecosystem(rng);
  } catch (const Error& e) {
    throw Error(ErrorCode::ScenarioError, std::string("ecosystem setup failed: ") + e.what());
  }

  ScenarioReport report;
  try {
    switch (id) {
      case ThreatId::HonestControl: report = run_honest(*eco); break;
      case ThreatId::TA01: report = run_ta01(*eco); break;
      case ThreatId::TA02: report = run_ta02(*eco); break;
      case ThreatId::TA03: report = run_ta03(*eco); break;
      case ThreatId::TA04: report = run_ta04(*eco); break;
      case ThreatId::TA05: report = run_ta05(*eco); break;
      case ThreatId::TA06: report = run_ta06(*eco); break;
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::ScenarioError, std::string(threat_name(id)) + ": " + e.what());
  }
  report.id = id;
  auto allowed = mapped_controls(id);
  for (Control c : report.controls_fired) {
    if (!allowed.contains(c)) {
      report.passed = false;
      report.notes.push_back("control " + std::string(control_name(c)) + " is outside the threat's mapping");
    }
  }
  return report;
}

std::vector<ScenarioReport> run_all(std::optional<std::uint64_t> seed) {
  std::vector<ScenarioReport> out;
  for (ThreatId id : all_scenarios()) out.push_back(run_scenario(id, seed));
  return out;
}

std::string format_report(const ScenarioReport& report) {
  std::string controls;
  for (Control c : report.controls_fired) {
    if (!controls.empty()) controls += ",";
    controls += control_name(c);
  }
  if (controls.empty()) controls = "-";
  std::string out = "SCENARIO " + std::string(threat_name(report.id)) +
                    " result=" + (report.passed ? "PASS" : "FAIL") + " expected=\"" + report.expected +
                    "\" observed=" + report.observed + " gate=" + (report.gate ? "1" : "0") +
                    " controls=" + controls + " uuid=" + (report.device_uuid ? to_hex(*report.device_uuid) : "-") +
                    "\n";
  out += "  threat: " + std::string(threat_description(report.id)) + "\n";
  for (const auto& n : report.notes) out += "  " + n + "\n";
  return out;
}

}  // namespace tlt::threats
