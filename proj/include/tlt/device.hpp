#pragma once

// Simulated constrained IoT device.
//
// The device keeps its identity (uuid, keypair), the digest of its own
// certificate, a copy of the trusted root, the set of document digests it has
// verified, and the full installation/configuration proofs needed to
// recompute its state digest. Everything else lives in the store.

#include <filesystem>
#include <optional>
#include <set>
#include <utility>

#include "tlt/attestation.hpp"
#include "tlt/certificates.hpp"

namespace tlt {

enum class BootStatus : std::uint8_t {
  Unprogrammed = 0,
  Operational = 1,
  IntegrityFailed = 2,
};

std::string_view boot_status_name(BootStatus status);

struct FirmwareSlot {
  InstallationDocument installation;
  Digest fw_doc_digest;
};

class Device {
 public:
  // Generates uuid and keypair on the device and has the manufacturer
  // certify them. ChainInvalid if `mfr` does not chain to `root`; InvalidKey
  // if `mfr_sk` is not the manufacturer's key.
  static std::pair<Device, DeviceCertificate> birth(const ManufacturerCertificate& mfr, const SecretKey& mfr_sk,
                                                    const RootCertificate& root, std::string_view dinf,
                                                    RandomSource& rng = system_random());

  // Adds hash(doc) to the verified set iff doc : chain verifies against the
  // trusted root. ChainInvalid otherwise, with state untouched.
  void remember_digest(const Document& doc, std::span<const Document> chain);

  // `chain` links fw_doc to the trusted root (normally just the
  // manufacturer certificate). ChainInvalid / ImageMismatch leave the
  // firmware slot unchanged.
  InstallationDocument install_firmware(const FirmwareDocument& fw_doc, ByteView fw_image,
                                        std::span<const Document> chain, std::string_view instinfo);

  // NotOperational before firmware; StaleSequence unless seq increases.
  ConfigurationDocument apply_configuration(ByteView cfg_payload, std::uint64_t seq);

  // NotOperational without an installed firmware.
  Digest compute_state_digest() const;

  Bytes advertise() const;

  // NotOperational unless boot status is operational.
  AttestationResponse handle_challenge(const Nonce& challenge, RandomSource& rng = system_random()) const;

  // Secure-boot style revalidation of stored proofs. Sets and returns the
  // resulting boot status.
  BootStatus boot();

  // Threat-model hook: writes a firmware slot without any chain check, as a
  // physical reflash would. The proof is still signed with the device key.
  // Boot status is left alone until the next boot().
  void tamper_reflash(const FirmwareDocument& fw_doc, std::string_view instinfo);
  // Threat-model hook: replaces the configuration without the sequence check.
  void tamper_configure(ByteView cfg_payload, std::uint64_t seq);

  const Uuid& uuid() const { return uuid_; }
  const PublicKey& public_key() const { return public_key_; }
  const MfrId& mfr_id() const { return mfr_id_; }
  const Digest& cert_digest() const { return cert_digest_; }
  const RootCertificate& trusted_root() const { return root_; }
  const std::set<Digest>& verified_digests() const { return verified_; }
  const std::optional<FirmwareSlot>& firmware() const { return fw_slot_; }
  const std::optional<ConfigurationDocument>& configuration() const { return cfg_; }
  BootStatus boot_status() const { return boot_status_; }

  // `.tltdev` state file. The secret key goes to `key_path` (`.tltkey`) and
  // the state file stores only a reference to it.
  void save(const std::filesystem::path& state_path, const std::filesystem::path& key_path) const;
  static Device load(const std::filesystem::path& state_path);

  Bytes serialize_state(std::string_view key_ref) const;
  static Device deserialize_state(ByteView data, const SecretKey& sk);
  // Key reference stored inside a serialized state.
  static std::string key_reference(ByteView data);

 private:
  Device(Uuid uuid, KeyPair keys, MfrId mfr_id, RootCertificate root);

  Uuid uuid_;
  PublicKey public_key_;
  SecretKey secret_key_;
  MfrId mfr_id_;
  Digest cert_digest_;
  RootCertificate root_;
  std::set<Digest> verified_;
  std::optional<FirmwareSlot> fw_slot_;
  std::optional<ConfigurationDocument> cfg_;
  BootStatus boot_status_ = BootStatus::Unprogrammed;
};

}  // namespace tlt
