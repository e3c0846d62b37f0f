#include "tlt/certificates.hpp"


namespace tlt {

namespace {

Error malformed(DocType type, const std::string& why) {
  return Error(ErrorCode::MalformedDocument, std::string(doc_type_name(type)) + ": " + why);
}

void expect_shape(const Document& doc, DocType type, std::initializer_list<std::uint8_t> tags) {
  if (doc.type != type) {
    throw malformed(type, std::string("unexpected document type ") + std::string(doc_type_name(doc.type)));
  }
  if (doc.fields.size() != tags.size()) throw malformed(type, "unexpected field count");
  std::size_t i = 0;
  for (std::uint8_t tag : tags) {
    if (doc.fields[i++].tag != tag) throw malformed(type, "unexpected field tag");
  }
}

template <typename Fixed>
Fixed fixed_field(const Document& doc, std::uint8_t tag) {
  const Bytes& v = doc.field(tag);
  if (v.size() != Fixed::kSize) throw malformed(doc.type, "field " + std::to_string(tag) + " has wrong width");
  return Fixed::from(v);
}

std::string text_field(const Document& doc, std::uint8_t tag) { return to_string(doc.field(tag)); }

PublicKey key_field(const Document& doc, std::uint8_t tag) {
  try {
    return PublicKey::parse(doc.field(tag));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidKey) throw malformed(doc.type, "bad public key field");
    throw;
  }
}

Uuid uuid_field(const Document& doc, std::uint8_t tag) {
  Uuid u = fixed_field<Uuid>(doc, tag);
  if (!is_v4_uuid(u)) throw malformed(doc.type, "uuid is not RFC 4122 version 4");
  return u;
}

Bytes text_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }
Bytes view_bytes(ByteView v) { return Bytes(v.begin(), v.end()); }

void require_key_match(const SecretKey& sk, const PublicKey& expected, const char* what) {
  if (public_key_of(sk) != expected) {
    throw Error(ErrorCode::InvalidKey, std::string("secret key does not match ") + what);
  }
}

std::optional<DocType> issuer_type(DocType type) {
  switch (type) {
    case DocType::Manufacturer: return DocType::Root;
    case DocType::Device:
    case DocType::Firmware: return DocType::Manufacturer;
    case DocType::Installation:
    case DocType::Configuration: return DocType::Device;
    case DocType::Root: return std::nullopt;
  }
  return std::nullopt;
}

PublicKey issuer_key(const Document& issuer) {
  switch (issuer.type) {
    case DocType::Root: return RootCertificate(issuer).authority_key();
    case DocType::Manufacturer: return ManufacturerCertificate(issuer).manufacturer_key();
    case DocType::Device: return DeviceCertificate(issuer).device_key();
    default: break;
  }
  throw malformed(issuer.type, "document cannot act as an issuer");
}

// Name-constraint analogue: subordinate documents must name their issuer.
std::optional<std::string> constraint_failure(const Document& doc, const Document& issuer) {
  switch (doc.type) {
    case DocType::Device:
      if (DeviceCertificate(doc).mfr_id() != ManufacturerCertificate(issuer).mfr_id()) {
        return "device certificate names a different manufacturer than its signer";
      }
      break;
    case DocType::Firmware:
      if (FirmwareDocument(doc).mfr_id() != ManufacturerCertificate(issuer).mfr_id()) {
        return "firmware document names a different manufacturer than its signer";
      }
      break;
    case DocType::Installation:
      if (InstallationDocument(doc).uuid() != DeviceCertificate(issuer).uuid()) {
        return "installation proof names a different device than its signer";
      }
      break;
    case DocType::Configuration:
      if (ConfigurationDocument(doc).uuid() != DeviceCertificate(issuer).uuid()) {
        return "configuration proof names a different device than its signer";
      }
      break;
    default: break;
  }
  return std::nullopt;
}

// Validates the typed shape of any document kind.
void check_shape(const Document& doc) {
  switch (doc.type) {
    case DocType::Root: (void)RootCertificate(doc); break;
    case DocType::Manufacturer: (void)ManufacturerCertificate(doc); break;
    case DocType::Device: (void)DeviceCertificate(doc); break;
    case DocType::Firmware: (void)FirmwareDocument(doc); break;
    case DocType::Installation: (void)InstallationDocument(doc); break;
    case DocType::Configuration: (void)ConfigurationDocument(doc); break;
  }
}

ChainResult fail(std::size_t index, ErrorCode code, std::string reason) {
  return ChainResult{false, code, std::move(reason), index};
}

}  // namespace

RootCertificate::RootCertificate(Document doc) : doc_(std::move(doc)) {
  expect_shape(doc_, DocType::Root, {field_tag::root::kInfo, field_tag::root::kAuthorityKey});
  info_ = text_field(doc_, field_tag::root::kInfo);
  key_ = key_field(doc_, field_tag::root::kAuthorityKey);
}

RootCertificate RootCertificate::create(std::string_view info, const KeyPair& authority) {
  require_key_match(authority.secret_key, authority.public_key, "authority public key");
  Document doc;
  doc.type = DocType::Root;
  doc.fields = {{field_tag::root::kInfo, text_bytes(info)},
                {field_tag::root::kAuthorityKey, authority.public_key.serialize()}};
  append_signature(doc, authority.secret_key);
  return RootCertificate(std::move(doc));
}

bool RootCertificate::self_verifies() const {
  return doc_.signatures.size() == 1 && verify_signature(doc_, 0, key_);
}

ManufacturerCertificate::ManufacturerCertificate(Document doc) : doc_(std::move(doc)) {
  using namespace field_tag::manufacturer;
  expect_shape(doc_, DocType::Manufacturer, {kInfo, kMfrId, kKey});
  info_ = text_field(doc_, kInfo);
  id_ = fixed_field<MfrId>(doc_, kMfrId);
  key_ = key_field(doc_, kKey);
}

DeviceCertificate::DeviceCertificate(Document doc) : doc_(std::move(doc)) {
  using namespace field_tag::device;
  expect_shape(doc_, DocType::Device, {kInfo, kKey, kUuid, kMfrId});
  info_ = text_field(doc_, kInfo);
  key_ = key_field(doc_, kKey);
  uuid_ = uuid_field(doc_, kUuid);
  mfr_id_ = fixed_field<MfrId>(doc_, kMfrId);
}

FirmwareDocument::FirmwareDocument(Document doc) : doc_(std::move(doc)) {
  using namespace field_tag::firmware;
  expect_shape(doc_, DocType::Firmware, {kMeta, kImageDigest, kMfrId});
  meta_ = text_field(doc_, kMeta);
  image_digest_ = fixed_field<Digest>(doc_, kImageDigest);
  mfr_id_ = fixed_field<MfrId>(doc_, kMfrId);
}

InstallationDocument::InstallationDocument(Document doc) : doc_(std::move(doc)) {
  using namespace field_tag::installation;
  expect_shape(doc_, DocType::Installation, {kFwDocDigest, kUuid, kInfo});
  fw_doc_digest_ = fixed_field<Digest>(doc_, kFwDocDigest);
  uuid_ = uuid_field(doc_, kUuid);
  info_ = text_field(doc_, kInfo);
}

ConfigurationDocument::ConfigurationDocument(Document doc) : doc_(std::move(doc)) {
  using namespace field_tag::configuration;
  expect_shape(doc_, DocType::Configuration, {kCfgDigest, kUuid, kSeq});
  cfg_digest_ = fixed_field<Digest>(doc_, kCfgDigest);
  uuid_ = uuid_field(doc_, kUuid);
  const Bytes& seq = doc_.field(kSeq);
  if (seq.size() != 8) throw malformed(doc_.type, "sequence must be 8 bytes");
  seq_ = get_u64(seq.data());
}

ManufacturerCertificate make_manufacturer_certificate(std::string_view mfr_info, const PublicKey& mfr_pk,
                                                      const SecretKey& authority_sk, RandomSource& rng) {
  using namespace field_tag::manufacturer;
  (void)public_key_of(authority_sk);  // rejects unsupported suites
  Document doc;
  doc.type = DocType::Manufacturer;
  doc.fields = {{kInfo, text_bytes(mfr_info)}, {kMfrId, random_bytes(16, rng)}, {kKey, mfr_pk.serialize()}};
  append_signature(doc, authority_sk);
  return ManufacturerCertificate(std::move(doc));
}

DeviceCertificate make_device_certificate(std::string_view dinf, const PublicKey& device_pk, const Uuid& uuid,
                                          const ManufacturerCertificate& mfr, const SecretKey& mfr_sk) {
  return make_device_certificate(dinf, device_pk, uuid, mfr.mfr_id(), mfr, mfr_sk);
}

DeviceCertificate make_device_certificate(std::string_view dinf, const PublicKey& device_pk, const Uuid& uuid,
                                          const MfrId& claimed_mfr_id, const ManufacturerCertificate& mfr,
                                          const SecretKey& mfr_sk) {
  using namespace field_tag::device;
  require_key_match(mfr_sk, mfr.manufacturer_key(), "manufacturer certificate");
  if (claimed_mfr_id != mfr.mfr_id()) {
    throw Error(ErrorCode::ConstraintViolation, "manufacturer may only certify its own devices");
  }
  if (!is_v4_uuid(uuid)) throw Error(ErrorCode::MalformedDocument, "device uuid is not version 4");
  Document doc;
  doc.type = DocType::Device;
  doc.fields = {{kInfo, text_bytes(dinf)},
                {kKey, device_pk.serialize()},
                {kUuid, view_bytes(uuid.view())},
                {kMfrId, view_bytes(claimed_mfr_id.view())}};
  append_signature(doc, mfr_sk);
  return DeviceCertificate(std::move(doc));
}

FirmwareDocument sign_firmware(ByteView fw_image, std::string_view fw_meta, const SecretKey& mfr_sk,
                               const ManufacturerCertificate& mfr) {
  using namespace field_tag::firmware;
  require_key_match(mfr_sk, mfr.manufacturer_key(), "manufacturer certificate");
  Document doc;
  doc.type = DocType::Firmware;
  doc.fields = {{kMeta, text_bytes(fw_meta)},
                {kImageDigest, view_bytes(hash(fw_image).view())},
                {kMfrId, view_bytes(mfr.mfr_id().view())}};
  append_signature(doc, mfr_sk);
  return FirmwareDocument(std::move(doc));
}

InstallationDocument make_installation_document(const Digest& fw_doc_digest, const Uuid& uuid,
                                                std::string_view instinfo, const SecretKey& device_sk) {
  using namespace field_tag::installation;
  Document doc;
  doc.type = DocType::Installation;
  doc.fields = {{kFwDocDigest, view_bytes(fw_doc_digest.view())},
                {kUuid, view_bytes(uuid.view())},
                {kInfo, text_bytes(instinfo)}};
  append_signature(doc, device_sk);
  return InstallationDocument(std::move(doc));
}

namespace {

Document configuration_body(const Digest& cfg_digest, const Uuid& uuid, std::uint64_t seq) {
  using namespace field_tag::configuration;
  Bytes seq_bytes;
  put_u64(seq_bytes, seq);
  Document doc;
  doc.type = DocType::Configuration;
  doc.fields = {{kCfgDigest, view_bytes(cfg_digest.view())}, {kUuid, view_bytes(uuid.view())}, {kSeq, seq_bytes}};
  return doc;
}

}  // namespace

ConfigurationDocument make_configuration_document(const Digest& cfg_digest, const Uuid& uuid, std::uint64_t seq,
                                                  const SecretKey& device_sk) {
  Document doc = configuration_body(cfg_digest, uuid, seq);
  append_signature(doc, device_sk);
  return ConfigurationDocument(std::move(doc));
}

ConfigurationDocument empty_configuration(const Uuid& uuid) {
  return ConfigurationDocument(configuration_body(hash({}), uuid, 0));
}

ChainResult verify_chain(std::span<const Document> chain, const RootCertificate& root) {
  if (!root.self_verifies()) return fail(0, ErrorCode::ChainInvalid, "root certificate does not self-verify");
  if (chain.empty()) return fail(0, ErrorCode::ChainInvalid, "empty chain");

  std::size_t links = chain.size();
  if (chain.back().type == DocType::Root) {
    if (chain.back() != root.document()) {
      return fail(links - 1, ErrorCode::ChainInvalid, "chain terminates in an untrusted root");
    }
    --links;
  }

  for (std::size_t i = 0; i < links; ++i) {
    const Document& doc = chain[i];
    const Document& issuer = (i + 1 < links) ? chain[i + 1] : root.document();
    try {
      check_shape(doc);
      auto expected = issuer_type(doc.type);
      if (!expected || *expected != issuer.type) {
        return fail(i, ErrorCode::ChainInvalid,
                    std::string(doc_type_name(doc.type)) + " cannot be issued by " +
                        std::string(doc_type_name(issuer.type)));
      }
      if (doc.signatures.size() != 1) {
        return fail(i, ErrorCode::ChainInvalid, "chain links must carry exactly one signature");
      }
      if (!verify_signature(doc, 0, issuer_key(issuer))) {
        return fail(i, ErrorCode::ChainInvalid,
                    std::string(doc_type_name(doc.type)) + " signature does not verify under its issuer");
      }
      if (auto why = constraint_failure(doc, issuer)) return fail(i, ErrorCode::ConstraintViolation, *why);
    } catch (const Error& e) {
      return fail(i, ErrorCode::ChainInvalid, e.what());
    }
  }
  return ChainResult{true, ErrorCode::ChainInvalid, {}, 0};
}

bool verify_installation(const InstallationDocument& inst, const DeviceCertificate& dcrt,
                         const FirmwareDocument& fw_doc) {
  const Document& doc = inst.document();
  return doc.signatures.size() == 1 && verify_signature(doc, 0, dcrt.device_key()) && inst.uuid() == dcrt.uuid() &&
         inst.fw_doc_digest() == document_digest(fw_doc.document());
}

bool verify_configuration(const ConfigurationDocument& cfg, const DeviceCertificate& dcrt) {
  const Document& doc = cfg.document();
  return doc.signatures.size() == 1 && verify_signature(doc, 0, dcrt.device_key()) && cfg.uuid() == dcrt.uuid();
}

Digest compute_state_digest(const InstallationDocument& inst, const ConfigurationDocument* cfg) {
  Bytes material = encode_canonical(inst.document());
  if (cfg != nullptr) {
    append(material, encode_canonical(cfg->document()));
  } else {
    append(material, encode_canonical(empty_configuration(inst.uuid()).document()));
  }
  return hash(material);
}

}  // namespace tlt
