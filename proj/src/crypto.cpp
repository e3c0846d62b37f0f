#include "tlt/crypto.hpp"

#include <sodium.h>

#include <cstdio>
#include <fstream>
#include <iterator>

#include "tlt/error.hpp"

namespace tlt {

namespace {

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) throw Error(ErrorCode::EntropyUnavailable, "libsodium initialisation failed");
}

void check_suite(std::uint8_t suite_id) {
  if (suite_id != kSuiteEd25519Sha256) {
    throw Error(ErrorCode::InvalidKey, "unsupported suite id " + std::to_string(suite_id));
  }
}

class SystemRandom final : public RandomSource {
 public:
  void fill(std::span<std::uint8_t> out) override {
    ensure_sodium();
    randombytes_buf(out.data(), out.size());
  }
};

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, ByteView data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace

Bytes PublicKey::serialize() const {
  Bytes out;
  out.reserve(1 + bytes.size());
  out.push_back(suite_id);
  append(out, bytes);
  return out;
}

PublicKey PublicKey::parse(ByteView data) {
  if (data.size() != 1 + kPublicKeySize) throw Error(ErrorCode::InvalidKey, "public key must be 33 bytes");
  check_suite(data[0]);
  PublicKey pk;
  pk.suite_id = data[0];
  std::copy(data.begin() + 1, data.end(), pk.bytes.begin());
  return pk;
}

SecretKey::SecretKey(std::uint8_t suite_id, ByteView seed) : suite_id_(suite_id) {
  if (seed.size() != kSecretKeySize) throw Error(ErrorCode::InvalidKey, "secret key must be 32 bytes");
  std::copy(seed.begin(), seed.end(), seed_.begin());
}

SecretKey::~SecretKey() { sodium_memzero(seed_.data(), seed_.size()); }

RandomSource& system_random() {
  static SystemRandom instance;
  return instance;
}

SeededRandom::SeededRandom(std::uint64_t seed) {
  ensure_sodium();
  Bytes material(as_bytes("tlt-seeded-random").begin(), as_bytes("tlt-seeded-random").end());
  put_u64(material, seed);
  crypto_hash_sha256(key_.data(), material.data(), material.size());
}

void SeededRandom::fill(std::span<std::uint8_t> out) {
  std::lock_guard lock(mutex_);
  // Each draw gets its own ChaCha20 key: key_i = SHA-256(key || i).
  Bytes block(key_.begin(), key_.end());
  put_u64(block, counter_++);
  std::array<std::uint8_t, randombytes_SEEDBYTES> draw_key{};
  crypto_hash_sha256(draw_key.data(), block.data(), block.size());
  randombytes_buf_deterministic(out.data(), out.size(), draw_key.data());
}

KeyPair generate_keypair(RandomSource& rng) {
  ensure_sodium();
  std::array<std::uint8_t, kSecretKeySize> seed{};
  rng.fill(seed);
  KeyPair kp{PublicKey{}, SecretKey(kSuiteEd25519Sha256, seed)};
  sodium_memzero(seed.data(), seed.size());
  kp.public_key = public_key_of(kp.secret_key);
  return kp;
}

PublicKey public_key_of(const SecretKey& sk) {
  ensure_sodium();
  check_suite(sk.suite_id());
  PublicKey pk;
  std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> expanded{};
  crypto_sign_seed_keypair(pk.bytes.data(), expanded.data(), sk.seed().data());
  sodium_memzero(expanded.data(), expanded.size());
  return pk;
}

Signature sign(const SecretKey& sk, ByteView msg) {
  ensure_sodium();
  check_suite(sk.suite_id());
  std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES> pk{};
  std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> expanded{};
  crypto_sign_seed_keypair(pk.data(), expanded.data(), sk.seed().data());
  Signature sig;
  crypto_sign_detached(sig.bytes.data(), nullptr, msg.data(), msg.size(), expanded.data());
  sodium_memzero(expanded.data(), expanded.size());
  return sig;
}

bool verify(const PublicKey& pk, ByteView msg, const Signature& sig) noexcept {
  if (pk.suite_id != kSuiteEd25519Sha256) return false;
  if (sodium_init() < 0) return false;
  return crypto_sign_verify_detached(sig.bytes.data(), msg.data(), msg.size(), pk.bytes.data()) == 0;
}

Digest hash(ByteView msg) {
  Digest d;
  crypto_hash_sha256(d.bytes.data(), msg.data(), msg.size());
  return d;
}

Digest extend_digest(const Digest& prev, ByteView data) {
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  crypto_hash_sha256_update(&st, prev.bytes.data(), prev.bytes.size());
  crypto_hash_sha256_update(&st, data.data(), data.size());
  Digest d;
  crypto_hash_sha256_final(&st, d.bytes.data());
  return d;
}

Bytes random_bytes(std::size_t n, RandomSource& rng) {
  Bytes out(n);
  if (n > 0) rng.fill(out);
  return out;
}

Uuid generate_uuid(RandomSource& rng) {
  Uuid u;
  rng.fill(u.bytes);
  u.bytes[6] = static_cast<std::uint8_t>((u.bytes[6] & 0x0f) | 0x40);
  u.bytes[8] = static_cast<std::uint8_t>((u.bytes[8] & 0x3f) | 0x80);
  return u;
}

Nonce generate_nonce(RandomSource& rng) {
  Nonce n;
  rng.fill(n.bytes);
  return n;
}

bool is_v4_uuid(const Uuid& uuid) {
  return (uuid.bytes[6] & 0xf0) == 0x40 && (uuid.bytes[8] & 0xc0) == 0x80;
}

std::string format_uuid(const Uuid& uuid) {
  std::string hex = to_hex(uuid);
  return hex.substr(0, 8) + "-" + hex.substr(8, 4) + "-" + hex.substr(12, 4) + "-" + hex.substr(16, 4) + "-" +
         hex.substr(20);
}

SignerHint signer_hint(const PublicKey& pk) {
  Digest d = hash(pk.serialize());
  return SignerHint::from(ByteView(d.bytes).first(16));
}

void write_secret_key_file(const std::filesystem::path& path, const SecretKey& sk) {
  Bytes data;
  data.push_back(sk.suite_id());
  append(data, sk.seed());
  write_file(path, data);
  sodium_memzero(data.data(), data.size());
}

SecretKey read_secret_key_file(const std::filesystem::path& path) {
  Bytes data = read_file(path);
  if (data.size() != 1 + kSecretKeySize) throw Error(ErrorCode::InvalidKey, "bad secret key file " + path.string());
  check_suite(data[0]);
  SecretKey sk(data[0], ByteView(data).subspan(1));
  sodium_memzero(data.data(), data.size());
  return sk;
}

void write_public_key_file(const std::filesystem::path& path, const PublicKey& pk) { write_file(path, pk.serialize()); }

PublicKey read_public_key_file(const std::filesystem::path& path) { return PublicKey::parse(read_file(path)); }

}  // namespace tlt
