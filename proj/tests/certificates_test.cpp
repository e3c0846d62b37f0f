#include "support.hpp"

namespace tlt {
namespace {

using test::World;

void flip_bit(Bytes& b, std::size_t bit) { b[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8)); }

// Decodes a mutated encoding; a mutation that is no longer a well-formed
// typed document is just as rejected as one that fails verification.
bool mutated_chain_verifies(const Bytes& leaf, const std::vector<Document>& rest, const RootCertificate& root) {
  std::vector<Document> chain;
  try {
    chain.push_back(decode(leaf));
  } catch (const Error&) {
    return false;
  }
  chain.insert(chain.end(), rest.begin(), rest.end());
  return static_cast<bool>(verify_chain(chain, root));
}

TEST(Root, SelfSigned) {
  World w;
  EXPECT_EQ(w.root.document().type, DocType::Root);
  EXPECT_TRUE(w.root.self_verifies());
  const Document only[] = {w.root.document()};
  EXPECT_TRUE(verify_chain(only, w.root));
  EXPECT_EQ(w.root.authority_key(), w.authority.public_key);
}

TEST(Root, InfoMutationBreaksSelfVerification) {
  World w;
  Document d = w.root.document();
  d.fields[0].value[0] ^= 1;
  EXPECT_FALSE(RootCertificate(d).self_verifies());
}

TEST(Root, OtherRootInChainRejected) {
  World a(1), b(2);
  const Document chain[] = {a.mcrt.document(), a.root.document()};
  EXPECT_TRUE(verify_chain(chain, a.root));
  EXPECT_FALSE(verify_chain(chain, b.root));
  const Document short_chain[] = {a.mcrt.document()};
  EXPECT_FALSE(verify_chain(short_chain, b.root));
}

TEST(Manufacturer, ChainsToRoot) {
  World w;
  EXPECT_EQ(w.mcrt.mfr_id().bytes.size(), 16u);
  const Document chain[] = {w.mcrt.document()};
  EXPECT_TRUE(verify_chain(chain, w.root));
}

TEST(Manufacturer, IdsAreRandom) {
  World w;
  ManufacturerCertificate other =
      make_manufacturer_certificate("Acme", w.mfr_keys.public_key, w.authority.secret_key, w.rng);
  EXPECT_NE(other.mfr_id(), w.mcrt.mfr_id());
}

TEST(DeviceCert, ThreeLinkChain) {
  World w;
  KeyPair dk = generate_keypair(w.rng);
  Uuid u = generate_uuid(w.rng);
  DeviceCertificate dcrt = make_device_certificate("lamp", dk.public_key, u, w.mcrt, w.mfr_keys.secret_key);
  const Document chain[] = {dcrt.document(), w.mcrt.document(), w.root.document()};
  EXPECT_TRUE(verify_chain(chain, w.root));
  DeviceCertificate back(decode(encode_canonical(dcrt.document())));
  EXPECT_EQ(back.uuid(), u);
  EXPECT_EQ(back.mfr_id(), w.mcrt.mfr_id());
}

TEST(DeviceCert, WrongManufacturerKeyIsInvalidKey) {
  World w;
  KeyPair dk = generate_keypair(w.rng);
  EXPECT_EQ(test::code_of([&] {
              make_device_certificate("lamp", dk.public_key, generate_uuid(w.rng), w.mcrt, dk.secret_key);
            }),
            ErrorCode::InvalidKey);
}

TEST(DeviceCert, ClaimingAnotherManufacturersIdRefusedAtCreation) {
  World w;
  KeyPair bk = generate_keypair(w.rng);
  ManufacturerCertificate b = make_manufacturer_certificate("B", bk.public_key, w.authority.secret_key, w.rng);
  KeyPair dk = generate_keypair(w.rng);
  EXPECT_EQ(test::code_of([&] {
              make_device_certificate("x", dk.public_key, generate_uuid(w.rng), w.mcrt.mfr_id(), b, bk.secret_key);
            }),
            ErrorCode::ConstraintViolation);
}

TEST(DeviceCert, CrossSignedCertificateFailsNameConstraint) {
  World w;
  KeyPair bk = generate_keypair(w.rng);
  ManufacturerCertificate b = make_manufacturer_certificate("B", bk.public_key, w.authority.secret_key, w.rng);
  KeyPair dk = generate_keypair(w.rng);
  Uuid u = generate_uuid(w.rng);
  // Hand-built: signed by B, but naming A as issuer.
  Document d;
  d.type = DocType::Device;
  d.fields = {{field_tag::device::kInfo, test::bytes("forged")},
              {field_tag::device::kKey, dk.public_key.serialize()},
              {field_tag::device::kUuid, Bytes(u.bytes.begin(), u.bytes.end())},
              {field_tag::device::kMfrId, Bytes(w.mcrt.mfr_id().bytes.begin(), w.mcrt.mfr_id().bytes.end())}};
  append_signature(d, bk.secret_key);
  const Document chain[] = {d, b.document()};
  ChainResult r = verify_chain(chain, w.root);
  EXPECT_FALSE(r);
  EXPECT_EQ(r.code, ErrorCode::ConstraintViolation);
  EXPECT_EQ(r.failed_index, 0u);
}

TEST(Chain, RejectsIllegalIssuerOrder) {
  World w;
  Device dev = w.born_device();
  DeviceView v = w.store.lookup_device(dev.uuid());
  // Device certificate presented as issuer of a manufacturer certificate.
  const Document bad[] = {w.mcrt.document(), v.certificate.document()};
  EXPECT_FALSE(verify_chain(bad, w.root));
  // Firmware directly under root.
  const Document skip[] = {w.fw.document(), w.root.document()};
  EXPECT_FALSE(verify_chain(skip, w.root));
  const Document empty[] = {w.root.document(), w.root.document()};
  EXPECT_FALSE(verify_chain(std::span<const Document>{}, w.root));
  EXPECT_FALSE(verify_chain(empty, w.root));
}

TEST(Chain, ExtraSignatureRejected) {
  World w;
  Document d = w.mcrt.document();
  append_signature(d, w.authority.secret_key);
  const Document chain[] = {d};
  EXPECT_FALSE(verify_chain(chain, w.root));
}

TEST(Firmware, ChainAndImageDigest) {
  World w;
  const Document chain[] = {w.fw.document(), w.mcrt.document(), w.root.document()};
  EXPECT_TRUE(verify_chain(chain, w.root));
  EXPECT_EQ(test::to_bytes(w.fw.image_digest()), test::oracle::sha256(w.fw_image));
  Bytes changed = w.fw_image;
  changed[100] ^= 0x01;
  EXPECT_NE(sign_firmware(changed, "lock 1.0", w.mfr_keys.secret_key, w.mcrt).image_digest(), w.fw.image_digest());
  EXPECT_EQ(w.fw.mfr_id(), w.mcrt.mfr_id());
}

TEST(Firmware, EveryLeafBitFlipRejected) {
  World w;
  Bytes leaf = encode_canonical(w.fw.document());
  std::vector<Document> rest = {w.mcrt.document(), w.root.document()};
  ASSERT_TRUE(mutated_chain_verifies(leaf, rest, w.root));
  for (std::size_t bit = 0; bit < leaf.size() * 8; ++bit) {
    Bytes m = leaf;
    flip_bit(m, bit);
    EXPECT_FALSE(mutated_chain_verifies(m, rest, w.root)) << bit;
  }
}

TEST(Installation, ProofFromDeviceVerifies) {
  World w;
  Device dev = w.installed_device();
  DeviceView v = w.store.lookup_device(dev.uuid());
  const InstallationDocument& inst = dev.firmware()->installation;
  EXPECT_TRUE(verify_installation(inst, v.certificate, w.fw));
  const Document chain[] = {inst.document(), v.certificate.document(), w.mcrt.document()};
  EXPECT_TRUE(verify_chain(chain, w.root));
}

TEST(Installation, MismatchedUuidOrFirmwareRejected) {
  World w;
  Device a = w.installed_device();
  Device b = w.installed_device();
  DeviceView vb = w.store.lookup_device(b.uuid());
  EXPECT_FALSE(verify_installation(a.firmware()->installation, vb.certificate, w.fw));

  FirmwareDocument fw2 = w.new_firmware("lock 2.0");
  DeviceView va = w.store.lookup_device(a.uuid());
  EXPECT_FALSE(verify_installation(a.firmware()->installation, va.certificate, fw2));

  // Signed by a, naming b's uuid: fails the name constraint in the chain.
  const Document chain[] = {a.firmware()->installation.document(), vb.certificate.document(), w.mcrt.document()};
  EXPECT_FALSE(verify_chain(chain, w.root));
}

TEST(Configuration, VerifiesUnderDeviceCertificate) {
  World w;
  Device dev = w.configured_device();
  DeviceView v = w.store.lookup_device(dev.uuid());
  EXPECT_TRUE(verify_configuration(*dev.configuration(), v.certificate));
  EXPECT_EQ(dev.configuration()->seq(), 1u);
  EXPECT_EQ(test::to_bytes(dev.configuration()->cfg_digest()), test::oracle::sha256(as_bytes("mode=auto")));
  Device other = w.configured_device();
  EXPECT_FALSE(verify_configuration(*dev.configuration(), w.store.lookup_device(other.uuid()).certificate));
}

TEST(Configuration, EmptyPlaceholder) {
  Uuid u = generate_uuid();
  ConfigurationDocument e = empty_configuration(u);
  EXPECT_EQ(e.seq(), 0u);
  EXPECT_EQ(e.uuid(), u);
  EXPECT_EQ(e.cfg_digest(), hash({}));
  EXPECT_TRUE(e.document().signatures.empty());
}

TEST(StateDigest, MatchesIndependentOracle) {
  World w;
  Device dev = w.installed_device();
  const InstallationDocument& inst = dev.firmware()->installation;
  EXPECT_EQ(test::to_bytes(compute_state_digest(inst, nullptr)), test::oracle::state_digest(inst, nullptr));
  ConfigurationDocument cfg = dev.apply_configuration(as_bytes("a=b"), 3);
  EXPECT_EQ(test::to_bytes(compute_state_digest(inst, &cfg)), test::oracle::state_digest(inst, &cfg));
}

TEST(TypedViews, RejectWrongShape) {
  World w;
  EXPECT_EQ(test::code_of([&] { ManufacturerCertificate m(w.root.document()); }), ErrorCode::MalformedDocument);
  Document d = w.mcrt.document();
  d.fields.pop_back();
  EXPECT_EQ(test::code_of([&] { ManufacturerCertificate m(d); }), ErrorCode::MalformedDocument);
  d = w.fw.document();
  d.fields[1].value.pop_back();
  EXPECT_EQ(test::code_of([&] { FirmwareDocument f(d); }), ErrorCode::MalformedDocument);
}

}  // namespace
}  // namespace tlt
