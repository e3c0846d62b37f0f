#pragma once

// Typed views over the six document kinds, their constructors, and chain
// verification against a root of trust.

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "tlt/document.hpp"
#include "tlt/error.hpp"

namespace tlt {

struct MfrIdTag {};
using MfrId = FixedBytes<16, MfrIdTag>;

namespace field_tag {
namespace root {
inline constexpr std::uint8_t kInfo = 0x01;
inline constexpr std::uint8_t kAuthorityKey = 0x02;
}  // namespace root
namespace manufacturer {
inline constexpr std::uint8_t kInfo = 0x01;
inline constexpr std::uint8_t kMfrId = 0x02;
inline constexpr std::uint8_t kKey = 0x03;
}  // namespace manufacturer
namespace device {
inline constexpr std::uint8_t kInfo = 0x01;
inline constexpr std::uint8_t kKey = 0x02;
inline constexpr std::uint8_t kUuid = 0x03;
inline constexpr std::uint8_t kMfrId = 0x04;
}  // namespace device
namespace firmware {
inline constexpr std::uint8_t kMeta = 0x01;
inline constexpr std::uint8_t kImageDigest = 0x02;
inline constexpr std::uint8_t kMfrId = 0x03;
}  // namespace firmware
namespace installation {
inline constexpr std::uint8_t kFwDocDigest = 0x01;
inline constexpr std::uint8_t kUuid = 0x02;
inline constexpr std::uint8_t kInfo = 0x03;
}  // namespace installation
namespace configuration {
inline constexpr std::uint8_t kCfgDigest = 0x01;
inline constexpr std::uint8_t kUuid = 0x02;
inline constexpr std::uint8_t kSeq = 0x03;
}  // namespace configuration
}  // namespace field_tag

// Each typed view validates doc_type and the exact field set on
// construction and throws MalformedDocument otherwise. Signatures are not
// checked here; that is verify_chain's job.

class RootCertificate {
 public:
  explicit RootCertificate(Document doc);
  static RootCertificate create(std::string_view info, const KeyPair& authority);

  const Document& document() const { return doc_; }
  const std::string& info() const { return info_; }
  const PublicKey& authority_key() const { return key_; }
  bool self_verifies() const;

 private:
  Document doc_;
  std::string info_;
  PublicKey key_;
};

class ManufacturerCertificate {
 public:
  explicit ManufacturerCertificate(Document doc);

  const Document& document() const { return doc_; }
  const std::string& info() const { return info_; }
  const MfrId& mfr_id() const { return id_; }
  const PublicKey& manufacturer_key() const { return key_; }

 private:
  Document doc_;
  std::string info_;
  MfrId id_;
  PublicKey key_;
};

class DeviceCertificate {
 public:
  explicit DeviceCertificate(Document doc);

  const Document& document() const { return doc_; }
  const std::string& info() const { return info_; }
  const PublicKey& device_key() const { return key_; }
  const Uuid& uuid() const { return uuid_; }
  const MfrId& mfr_id() const { return mfr_id_; }

 private:
  Document doc_;
  std::string info_;
  PublicKey key_;
  Uuid uuid_;
  MfrId mfr_id_;
};

class FirmwareDocument {
 public:
  explicit FirmwareDocument(Document doc);

  const Document& document() const { return doc_; }
  const std::string& meta() const { return meta_; }
  const Digest& image_digest() const { return image_digest_; }
  const MfrId& mfr_id() const { return mfr_id_; }

 private:
  Document doc_;
  std::string meta_;
  Digest image_digest_;
  MfrId mfr_id_;
};

class InstallationDocument {
 public:
  explicit InstallationDocument(Document doc);

  const Document& document() const { return doc_; }
  const Digest& fw_doc_digest() const { return fw_doc_digest_; }
  const Uuid& uuid() const { return uuid_; }
  const std::string& info() const { return info_; }

 private:
  Document doc_;
  Digest fw_doc_digest_;
  Uuid uuid_;
  std::string info_;
};

class ConfigurationDocument {
 public:
  explicit ConfigurationDocument(Document doc);

  const Document& document() const { return doc_; }
  const Digest& cfg_digest() const { return cfg_digest_; }
  const Uuid& uuid() const { return uuid_; }
  std::uint64_t seq() const { return seq_; }

 private:
  Document doc_;
  Digest cfg_digest_;
  Uuid uuid_;
  std::uint64_t seq_ = 0;
};

// Assigns a fresh random 16-byte manufacturer id.
ManufacturerCertificate make_manufacturer_certificate(std::string_view mfr_info, const PublicKey& mfr_pk,
                                                      const SecretKey& authority_sk,
                                                      RandomSource& rng = system_random());

// InvalidKey if mfr_sk does not match the manufacturer certificate.
DeviceCertificate make_device_certificate(std::string_view dinf, const PublicKey& device_pk, const Uuid& uuid,
                                          const ManufacturerCertificate& mfr, const SecretKey& mfr_sk);
// As above, but with a caller-claimed issuer id. ConstraintViolation if it
// is not the signing manufacturer's id.
DeviceCertificate make_device_certificate(std::string_view dinf, const PublicKey& device_pk, const Uuid& uuid,
                                          const MfrId& claimed_mfr_id, const ManufacturerCertificate& mfr,
                                          const SecretKey& mfr_sk);

FirmwareDocument sign_firmware(ByteView fw_image, std::string_view fw_meta, const SecretKey& mfr_sk,
                               const ManufacturerCertificate& mfr);

InstallationDocument make_installation_document(const Digest& fw_doc_digest, const Uuid& uuid,
                                                std::string_view instinfo, const SecretKey& device_sk);
ConfigurationDocument make_configuration_document(const Digest& cfg_digest, const Uuid& uuid, std::uint64_t seq,
                                                  const SecretKey& device_sk);
// Unsigned placeholder (cfg_digest = hash(""), seq = 0) standing in for a
// device that has never been configured.
ConfigurationDocument empty_configuration(const Uuid& uuid);

struct ChainResult {
  bool ok = false;
  ErrorCode code = ErrorCode::ChainInvalid;  // meaningful only when !ok
  std::string reason;
  // Index into the chain of the link that failed.
  std::size_t failed_index = 0;

  explicit operator bool() const { return ok; }
};

// chain[0] is the leaf; each link must be signed by the next one. A trailing
// root element is optional and, when present, must equal `root` exactly.
// Legal issuers: manufacturer <- root; device/firmware <- manufacturer;
// installation/configuration <- device.
ChainResult verify_chain(std::span<const Document> chain, const RootCertificate& root);

bool verify_installation(const InstallationDocument& inst, const DeviceCertificate& dcrt,
                         const FirmwareDocument& fw_doc);
bool verify_configuration(const ConfigurationDocument& cfg, const DeviceCertificate& dcrt);

// hash(encode(inst) || encode(cfg)), substituting empty_configuration(uuid)
// when cfg is absent.
Digest compute_state_digest(const InstallationDocument& inst, const ConfigurationDocument* cfg);

}  // namespace tlt
