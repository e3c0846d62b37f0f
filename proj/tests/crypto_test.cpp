#include <set>

#include "support.hpp"

namespace tlt {
namespace {

using test::oracle::ed25519_public_from_seed;
using test::oracle::ed25519_verify;
using test::oracle::sha256;

TEST(Hash, KnownVectors) {
  EXPECT_EQ(to_hex(hash({})), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(to_hex(hash(as_bytes("abc"))), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Hash, MatchesIndependentImplementation) {
  SeededRandom rng(3);
  for (std::size_t len : {0u, 1u, 55u, 56u, 64u, 1000u, 1000000u}) {
    Bytes m = random_bytes(len, rng);
    Digest d = hash(m);
    EXPECT_EQ(d.bytes.size(), 32u);
    EXPECT_EQ(test::to_bytes(d), sha256(m)) << len;
    EXPECT_EQ(hash(m), d);
  }
}

TEST(Hash, ExtendDigest) {
  Bytes a = test::bytes("a"), b = test::bytes("b");
  Digest ha = hash(a);
  Bytes cat = test::to_bytes(ha);
  append(cat, b);
  EXPECT_EQ(extend_digest(ha, b), hash(cat));
  EXPECT_EQ(extend_digest(ha, {}), hash(ha.view()));

  SeededRandom rng(9);
  for (int i = 0; i < 50; ++i) {
    Bytes x1 = random_bytes(8, rng), x2 = random_bytes(8, rng), x3 = random_bytes(8, rng);
    Digest z{};
    Digest f1 = extend_digest(extend_digest(extend_digest(z, x1), x2), x3);
    Digest f2 = extend_digest(extend_digest(extend_digest(z, x2), x1), x3);
    EXPECT_NE(f1, f2);
  }
}

// RFC 8032 section 7.1, test 1.
TEST(Ed25519, Rfc8032Vector) {
  SecretKey sk(kSuiteEd25519Sha256, from_hex_or_throw("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60"));
  PublicKey pk = public_key_of(sk);
  EXPECT_EQ(to_hex(pk.bytes), "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a");
  Signature sig = sign(sk, {});
  EXPECT_EQ(to_hex(sig),
            "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e065"
            "224901555fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b");
  EXPECT_TRUE(verify(pk, {}, sig));
}

TEST(Ed25519, KeyAndSignatureSizes) {
  KeyPair kp = generate_keypair();
  EXPECT_EQ(kp.public_key.bytes.size(), 32u);
  EXPECT_EQ(kp.secret_key.seed().size(), 32u);
  EXPECT_EQ(kp.public_key.serialize().size(), 33u);
  for (std::size_t len : {0u, 1u, 64u, 4096u}) {
    Bytes m(len, 0x5a);
    EXPECT_EQ(sign(kp.secret_key, m).bytes.size(), 64u);
  }
}

TEST(Ed25519, ThousandDistinctKeypairs) {
  std::set<std::array<std::uint8_t, 32>> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(generate_keypair().public_key.bytes);
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(Ed25519, RoundTripAgainstOracle) {
  SeededRandom rng(11);
  for (int i = 0; i < 100; ++i) {
    KeyPair kp = generate_keypair(rng);
    Bytes m = random_bytes(static_cast<std::size_t>(i * 7), rng);
    Signature s1 = sign(kp.secret_key, m);
    Signature s2 = sign(kp.secret_key, m);
    EXPECT_EQ(s1, s2);
    EXPECT_TRUE(verify(kp.public_key, m, s1));
    EXPECT_TRUE(ed25519_verify({kp.public_key.bytes.data(), 32}, m, s1.view()));
    EXPECT_EQ(ed25519_public_from_seed(kp.secret_key.seed()),
              Bytes(kp.public_key.bytes.begin(), kp.public_key.bytes.end()));
  }
}

TEST(Ed25519, RejectsOtherMessageAndKey) {
  KeyPair kp = generate_keypair();
  KeyPair other = generate_keypair();
  Signature s = sign(kp.secret_key, as_bytes("message"));
  EXPECT_FALSE(verify(kp.public_key, as_bytes("messagf"), s));
  EXPECT_FALSE(verify(other.public_key, as_bytes("message"), s));
  PublicKey wrong_suite = kp.public_key;
  wrong_suite.suite_id = 0x02;
  EXPECT_FALSE(verify(wrong_suite, as_bytes("message"), s));
}

TEST(Ed25519, EverySignatureBitFlipRejected) {
  KeyPair kp = generate_keypair();
  Bytes m = test::bytes("flip me");
  Signature s = sign(kp.secret_key, m);
  for (std::size_t bit = 0; bit < 512; ++bit) {
    Signature t = s;
    t.bytes[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    EXPECT_FALSE(verify(kp.public_key, m, t)) << bit;
  }
}

TEST(PublicKeyParse, RejectsBadInput) {
  KeyPair kp = generate_keypair();
  Bytes ser = kp.public_key.serialize();
  EXPECT_EQ(PublicKey::parse(ser), kp.public_key);
  EXPECT_EQ(test::code_of([&] { PublicKey::parse(ByteView(ser).first(32)); }), ErrorCode::InvalidKey);
  ser[0] = 0x07;
  EXPECT_EQ(test::code_of([&] { PublicKey::parse(ser); }), ErrorCode::InvalidKey);
}

TEST(Random, Lengths) {
  EXPECT_TRUE(random_bytes(0).empty());
  EXPECT_EQ(random_bytes(16).size(), 16u);
}

TEST(Random, NoDuplicatesInTenThousandDraws) {
  std::set<Bytes> seen;
  for (int i = 0; i < 10000; ++i) seen.insert(random_bytes(16));
  EXPECT_EQ(seen.size(), 10000u);
}

TEST(Random, SeededStreamIsReproducible) {
  SeededRandom a(42), b(42), c(43);
  Bytes xa = random_bytes(100, a);
  EXPECT_EQ(xa, random_bytes(100, b));
  EXPECT_NE(xa, random_bytes(100, c));
  EXPECT_NE(xa, random_bytes(100, a));
}

TEST(Uuid, VersionBitsAndUniqueness) {
  std::set<Uuid> seen;
  for (int i = 0; i < 10000; ++i) {
    Uuid u = generate_uuid();
    ASSERT_EQ(u.bytes.size(), 16u);
    EXPECT_EQ(u.bytes[6] >> 4, 0x4);
    EXPECT_EQ(u.bytes[8] >> 6, 0b10);
    EXPECT_TRUE(is_v4_uuid(u));
    seen.insert(u);
  }
  EXPECT_EQ(seen.size(), 10000u);
}

TEST(Uuid, Format) {
  Uuid u = Uuid::from(from_hex_or_throw("00112233445566778899aabbccddeeff"));
  EXPECT_EQ(format_uuid(u), "00112233-4455-6677-8899-aabbccddeeff");
}

TEST(SignerHint, IsPrefixOfKeyDigest) {
  KeyPair kp = generate_keypair();
  Bytes h = sha256(kp.public_key.serialize());
  SignerHint hint = signer_hint(kp.public_key);
  EXPECT_EQ(Bytes(hint.bytes.begin(), hint.bytes.end()), Bytes(h.begin(), h.begin() + 16));
}

TEST(KeyFiles, RoundTrip) {
  test::TempDir dir;
  KeyPair kp = generate_keypair();
  write_secret_key_file(dir / "k.tltkey", kp.secret_key);
  write_public_key_file(dir / "k.tltpub", kp.public_key);
  EXPECT_EQ(public_key_of(read_secret_key_file(dir / "k.tltkey")), kp.public_key);
  EXPECT_EQ(read_public_key_file(dir / "k.tltpub"), kp.public_key);
  EXPECT_EQ(std::filesystem::file_size(dir / "k.tltkey"), 33u);
  EXPECT_ANY_THROW(read_secret_key_file(dir / "missing.tltkey"));
}

}  // namespace
}  // namespace tlt
