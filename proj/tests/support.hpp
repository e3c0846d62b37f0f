#pragma once

#include <gtest/gtest.h>
#include <openssl/evp.h>
#include <openssl/sha.h>

#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <unistd.h>

#include "tlt/device.hpp"
#include "tlt/exchange.hpp"
#include "tlt/store.hpp"
#include "tlt/verifier.hpp"

namespace tlt {
inline void PrintTo(ErrorCode c, std::ostream* os) { *os << error_code_name(c); }
}  // namespace tlt

namespace tlt::test {

// Oracles independent of libsodium and of the library's own encoder.
namespace oracle {

inline Bytes sha256(ByteView data) {
  Bytes out(SHA256_DIGEST_LENGTH);
  SHA256(data.data(), data.size(), out.data());
  return out;
}

inline bool ed25519_verify(ByteView pk32, ByteView msg, ByteView sig64) {
  EVP_PKEY* key = EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, pk32.data(), pk32.size());
  if (!key) return false;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  bool ok = EVP_DigestVerifyInit(ctx, nullptr, nullptr, nullptr, key) == 1 &&
            EVP_DigestVerify(ctx, sig64.data(), sig64.size(), msg.data(), msg.size()) == 1;
  EVP_MD_CTX_free(ctx);
  EVP_PKEY_free(key);
  return ok;
}

inline Bytes ed25519_public_from_seed(ByteView seed32) {
  EVP_PKEY* key = EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed32.data(), seed32.size());
  Bytes pk(32);
  std::size_t len = pk.size();
  EVP_PKEY_get_raw_public_key(key, pk.data(), &len);
  EVP_PKEY_free(key);
  return pk;
}

// Hand-rolled TLV writer: type, count, then tag | u32 BE length | value.
struct TlvWriter {
  Bytes out;
  explicit TlvWriter(std::uint8_t type, std::uint8_t count) { out = {type, count}; }
  TlvWriter& field(std::uint8_t tag, ByteView v) {
    out.push_back(tag);
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v.size() >> s));
    out.insert(out.end(), v.begin(), v.end());
    return *this;
  }
  TlvWriter& sig(ByteView hint, ByteView sig) {
    out.insert(out.end(), hint.begin(), hint.end());
    out.insert(out.end(), sig.begin(), sig.end());
    return *this;
  }
};

inline Bytes u64_be(std::uint64_t v) {
  Bytes b(8);
  for (int i = 7; i >= 0; --i, v >>= 8) b[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v);
  return b;
}

inline Bytes encode_installation(const InstallationDocument& inst) {
  TlvWriter w(0x05, 3);
  w.field(1, inst.fw_doc_digest().view()).field(2, inst.uuid().view()).field(3, as_bytes(inst.info()));
  for (const auto& s : inst.document().signatures) w.sig(s.hint.view(), s.signature.view());
  return w.out;
}

inline Bytes encode_configuration(const Uuid& uuid, ByteView cfg_digest, std::uint64_t seq,
                                  const std::vector<SignatureEntry>& sigs) {
  TlvWriter w(0x06, 3);
  w.field(1, cfg_digest).field(2, uuid.view()).field(3, u64_be(seq));
  for (const auto& s : sigs) w.sig(s.hint.view(), s.signature.view());
  return w.out;
}

// hash(inst || cfg), where an absent cfg is the unsigned seq-0 placeholder
// whose digest field is sha256("").
inline Bytes state_digest(const InstallationDocument& inst, const ConfigurationDocument* cfg) {
  Bytes buf = encode_installation(inst);
  Bytes c = cfg ? encode_configuration(cfg->uuid(), cfg->cfg_digest().view(), cfg->seq(), cfg->document().signatures)
                : encode_configuration(inst.uuid(), sha256({}), 0, {});
  buf.insert(buf.end(), c.begin(), c.end());
  return sha256(buf);
}

}  // namespace oracle

inline Bytes bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline Bytes to_bytes(const Digest& d) { return Bytes(d.bytes.begin(), d.bytes.end()); }

// Temporary directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "tlt-test-XXXXXX").string();
    path_ = ::mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Authority, store, one manufacturer and one registered firmware.
struct World {
  explicit World(std::uint64_t seed = 1)
      : rng(seed),
        authority(generate_keypair(rng)),
        root(RootCertificate::create("Test Authority", authority)),
        store(root),
        mfr_keys(generate_keypair(rng)),
        mcrt(make_manufacturer_certificate("Acme", mfr_keys.public_key, authority.secret_key, rng)),
        fw_image(random_bytes(2048, rng)),
        fw(sign_firmware(fw_image, "lock 1.0", mfr_keys.secret_key, mcrt)) {
    store.register_document(RecordKind::Manufacturer, mcrt.document());
    store.register_document(RecordKind::Firmware, fw.document());
  }

  std::vector<Document> mfr_chain() const { return {mcrt.document()}; }

  Device born_device(const std::string& dinf = "front door lock") {
    auto [dev, dcrt] = Device::birth(mcrt, mfr_keys.secret_key, root, dinf, rng);
    store.register_document(RecordKind::Device, dcrt.document(), mfr_chain());
    return std::move(dev);
  }

  Device installed_device(const std::string& dinf = "front door lock") {
    Device dev = born_device(dinf);
    auto chain = mfr_chain();
    InstallationDocument inst = dev.install_firmware(fw, fw_image, chain, "slot=0");
    store.register_document(RecordKind::Installation, inst.document());
    return dev;
  }

  Device configured_device(const std::string& dinf = "front door lock") {
    Device dev = installed_device(dinf);
    ConfigurationDocument cfg = dev.apply_configuration(as_bytes("mode=auto"), 1);
    store.register_document(RecordKind::Configuration, cfg.document());
    return dev;
  }

  FirmwareDocument new_firmware(const std::string& meta, Bytes* image_out = nullptr) {
    Bytes image = random_bytes(1024, rng);
    FirmwareDocument doc = sign_firmware(image, meta, mfr_keys.secret_key, mcrt);
    store.register_document(RecordKind::Firmware, doc.document());
    if (image_out) *image_out = image;
    return doc;
  }

  SeededRandom rng;
  KeyPair authority;
  RootCertificate root;
  Store store;
  KeyPair mfr_keys;
  ManufacturerCertificate mcrt;
  Bytes fw_image;
  FirmwareDocument fw;
};

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no tlt::Error thrown";
  return ErrorCode::IoError;
}

}  // namespace tlt::test
