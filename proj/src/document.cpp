#include "tlt/document.hpp"

#include "tlt/error.hpp"

namespace tlt {

std::string_view doc_type_name(DocType type) {
  switch (type) {
    case DocType::Root: return "root";
    case DocType::Manufacturer: return "manufacturer";
    case DocType::Device: return "device";
    case DocType::Firmware: return "firmware";
    case DocType::Installation: return "installation";
    case DocType::Configuration: return "configuration";
  }
  return "unknown";
}

const Bytes* Document::find(std::uint8_t tag) const {
  for (const auto& f : fields) {
    if (f.tag == tag) return &f.value;
  }
  return nullptr;
}

const Bytes& Document::field(std::uint8_t tag) const {
  if (const Bytes* v = find(tag)) return *v;
  throw Error(ErrorCode::MalformedDocument,
              std::string(doc_type_name(type)) + " document lacks field " + std::to_string(tag));
}

Bytes encode_prefix(const Document& doc, std::size_t signature_count) {
  if (doc.fields.size() > kMaxFields) throw Error(ErrorCode::NonCanonicalField, "too many fields");
  for (std::size_t i = 1; i < doc.fields.size(); ++i) {
    if (doc.fields[i].tag <= doc.fields[i - 1].tag) {
      throw Error(ErrorCode::NonCanonicalField, "field tags must be strictly ascending");
    }
  }
  signature_count = std::min(signature_count, doc.signatures.size());

  std::size_t size = kDocumentHeaderSize + signature_count * kSignatureEntrySize;
  for (const auto& f : doc.fields) size += kFieldHeaderSize + f.value.size();

  Bytes out;
  out.reserve(size);
  out.push_back(static_cast<std::uint8_t>(doc.type));
  out.push_back(static_cast<std::uint8_t>(doc.fields.size()));
  for (const auto& f : doc.fields) {
    if (f.value.size() > UINT32_MAX) throw Error(ErrorCode::NonCanonicalField, "field too long");
    out.push_back(f.tag);
    put_u32(out, static_cast<std::uint32_t>(f.value.size()));
    append(out, f.value);
  }
  for (std::size_t i = 0; i < signature_count; ++i) {
    append(out, doc.signatures[i].hint.bytes);
    append(out, doc.signatures[i].signature.bytes);
  }
  return out;
}

Bytes encode_canonical(const Document& doc) { return encode_prefix(doc, doc.signatures.size()); }

Document decode(ByteView bytes) {
  auto malformed = [](const char* why) { return Error(ErrorCode::MalformedDocument, why); };
  if (bytes.size() < kDocumentHeaderSize) throw malformed("truncated header");

  Document doc;
  std::uint8_t type = bytes[0];
  if (type < 0x01 || type > 0x06) throw malformed("unknown document type");
  doc.type = static_cast<DocType>(type);

  std::size_t n_fields = bytes[1];
  std::size_t pos = kDocumentHeaderSize;
  doc.fields.reserve(n_fields);
  for (std::size_t i = 0; i < n_fields; ++i) {
    if (bytes.size() - pos < kFieldHeaderSize) throw malformed("truncated field header");
    Field f;
    f.tag = bytes[pos];
    std::uint32_t len = get_u32(&bytes[pos + 1]);
    pos += kFieldHeaderSize;
    if (len > bytes.size() - pos) throw malformed("field length overflows buffer");
    if (!doc.fields.empty() && f.tag <= doc.fields.back().tag) throw malformed("field tags out of order");
    f.value.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                   bytes.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
    doc.fields.push_back(std::move(f));
  }

  std::size_t rest = bytes.size() - pos;
  if (rest % kSignatureEntrySize != 0) throw malformed("trailing bytes do not form whole signatures");
  for (; pos < bytes.size(); pos += kSignatureEntrySize) {
    SignatureEntry e;
    e.hint = SignerHint::from(bytes.subspan(pos, 16));
    e.signature = Signature::from(bytes.subspan(pos + 16, kSignatureSize));
    doc.signatures.push_back(e);
  }
  return doc;
}

Digest document_digest(const Document& doc) { return hash(encode_canonical(doc)); }

void append_signature(Document& doc, const SecretKey& sk) {
  Bytes payload = encode_canonical(doc);
  SignatureEntry e{signer_hint(public_key_of(sk)), sign(sk, payload)};
  doc.signatures.push_back(e);
}

bool verify_signature(const Document& doc, std::size_t index, const PublicKey& pk) {
  if (index >= doc.signatures.size()) return false;
  const auto& entry = doc.signatures[index];
  if (entry.hint != signer_hint(pk)) return false;
  return verify(pk, encode_prefix(doc, index), entry.signature);
}

}  // namespace tlt
