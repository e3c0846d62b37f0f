#pragma once

// Suite-versioned signing, hashing and randomness primitives.
//
// Suite 0x01: Ed25519 (32-byte keys, 64-byte deterministic signatures) with
// SHA-256 digests. The suite byte travels with every serialized key so a
// different suite can be added without changing document or file layouts.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>

#include "tlt/bytes.hpp"

namespace tlt {

inline constexpr std::uint8_t kSuiteEd25519Sha256 = 0x01;

inline constexpr std::size_t kPublicKeySize = 32;
inline constexpr std::size_t kSecretKeySize = 32;
inline constexpr std::size_t kSignatureSize = 64;
inline constexpr std::size_t kDigestSize = 32;
inline constexpr std::size_t kUuidSize = 16;
inline constexpr std::size_t kNonceSize = 16;

struct DigestTag {};
struct SignatureTag {};
struct UuidTag {};
struct NonceTag {};
struct SignerHintTag {};

using Digest = FixedBytes<kDigestSize, DigestTag>;
using Signature = FixedBytes<kSignatureSize, SignatureTag>;
using Uuid = FixedBytes<kUuidSize, UuidTag>;
using Nonce = FixedBytes<kNonceSize, NonceTag>;
// First 16 bytes of the digest of the signer's serialized public key.
using SignerHint = FixedBytes<16, SignerHintTag>;

struct PublicKey {
  std::uint8_t suite_id = kSuiteEd25519Sha256;
  std::array<std::uint8_t, kPublicKeySize> bytes{};

  // suite_id followed by the raw key (33 bytes).
  Bytes serialize() const;
  static PublicKey parse(ByteView data);  // throws InvalidKey

  friend bool operator==(const PublicKey&, const PublicKey&) = default;
};

// Holds the 32-byte Ed25519 seed. Wiped on destruction.
class SecretKey {
 public:
  SecretKey() = default;
  SecretKey(std::uint8_t suite_id, ByteView seed);
  SecretKey(const SecretKey&) = default;
  SecretKey& operator=(const SecretKey&) = default;
  ~SecretKey();

  std::uint8_t suite_id() const { return suite_id_; }
  ByteView seed() const { return {seed_.data(), seed_.size()}; }

 private:
  std::uint8_t suite_id_ = kSuiteEd25519Sha256;
  std::array<std::uint8_t, kSecretKeySize> seed_{};
};

struct KeyPair {
  PublicKey public_key;
  SecretKey secret_key;
};

class RandomSource {
 public:
  virtual ~RandomSource() = default;
  virtual void fill(std::span<std::uint8_t> out) = 0;
};

// Process-wide CSPRNG (libsodium). Thread-safe.
RandomSource& system_random();

// Deterministic stream for reproducible runs. Not for production keys.
class SeededRandom final : public RandomSource {
 public:
  explicit SeededRandom(std::uint64_t seed);
  void fill(std::span<std::uint8_t> out) override;

 private:
  std::mutex mutex_;
  std::array<std::uint8_t, 32> key_{};
  std::uint64_t counter_ = 0;
};

KeyPair generate_keypair(RandomSource& rng = system_random());
PublicKey public_key_of(const SecretKey& sk);

Signature sign(const SecretKey& sk, ByteView msg);
bool verify(const PublicKey& pk, ByteView msg, const Signature& sig) noexcept;

Digest hash(ByteView msg);
// hash(prev || data)
Digest extend_digest(const Digest& prev, ByteView data);

Bytes random_bytes(std::size_t n, RandomSource& rng = system_random());
Uuid generate_uuid(RandomSource& rng = system_random());
Nonce generate_nonce(RandomSource& rng = system_random());

bool is_v4_uuid(const Uuid& uuid);
std::string format_uuid(const Uuid& uuid);  // 8-4-4-4-12 form

SignerHint signer_hint(const PublicKey& pk);

// Key files: suite_id byte followed by the raw key bytes.
// Secret keys use `.tltkey`, public keys `.tltpub`.
void write_secret_key_file(const std::filesystem::path& path, const SecretKey& sk);
SecretKey read_secret_key_file(const std::filesystem::path& path);
void write_public_key_file(const std::filesystem::path& path, const PublicKey& pk);
PublicKey read_public_key_file(const std::filesystem::path& path);

}  // namespace tlt
