#pragma once

// Canonical document encoding.
//
//   doc_type   1 byte
//   n_fields   1 byte
//   n_fields x { tag 1 byte | length 4 bytes BE | value }
//   signatures to end of buffer, each { signer_hint 16 bytes | signature 64 bytes }
//
// Field tags are strictly ascending. Signature i covers the encoding of the
// document with only signatures [0, i) attached.

#include <cstdint>
#include <optional>
#include <vector>

#include "tlt/bytes.hpp"
#include "tlt/crypto.hpp"

namespace tlt {

enum class DocType : std::uint8_t {
  Root = 0x01,
  Manufacturer = 0x02,
  Device = 0x03,
  Firmware = 0x04,
  Installation = 0x05,
  Configuration = 0x06,
};

std::string_view doc_type_name(DocType type);

struct Field {
  std::uint8_t tag = 0;
  Bytes value;

  friend bool operator==(const Field&, const Field&) = default;
};

struct SignatureEntry {
  SignerHint hint;
  Signature signature;

  friend bool operator==(const SignatureEntry&, const SignatureEntry&) = default;
};

inline constexpr std::size_t kDocumentHeaderSize = 2;
inline constexpr std::size_t kFieldHeaderSize = 5;
inline constexpr std::size_t kSignatureEntrySize = 16 + kSignatureSize;
inline constexpr std::size_t kMaxFields = 255;

struct Document {
  DocType type = DocType::Root;
  std::vector<Field> fields;
  std::vector<SignatureEntry> signatures;

  const Bytes* find(std::uint8_t tag) const;
  // Throws MalformedDocument when the tag is absent.
  const Bytes& field(std::uint8_t tag) const;

  friend bool operator==(const Document&, const Document&) = default;
};

// Throws NonCanonicalField if tags are not strictly ascending.
Bytes encode_canonical(const Document& doc);
// Encoding with only the first `signature_count` signatures attached.
Bytes encode_prefix(const Document& doc, std::size_t signature_count);
// Throws MalformedDocument on any deviation from the canonical layout.
Document decode(ByteView bytes);

Digest document_digest(const Document& doc);

// Appends a signature over the current canonical encoding.
void append_signature(Document& doc, const SecretKey& sk);
// Checks signature `index` against `pk`, including the signer hint.
bool verify_signature(const Document& doc, std::size_t index, const PublicKey& pk);

}  // namespace tlt
