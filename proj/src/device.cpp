#include "tlt/device.hpp"

#include <fstream>
#include <iterator>

#include "tlt/transport.hpp"

namespace tlt {

namespace {

// `.tltdev` layout: "TLTD" | version | { tag | u32 BE length | value } ascending.
constexpr std::uint8_t kStateMagic[4] = {'T', 'L', 'T', 'D'};
constexpr std::uint8_t kStateVersion = 0x01;

namespace state_tag {
constexpr std::uint8_t kUuid = 0x01;
constexpr std::uint8_t kPublicKey = 0x02;
constexpr std::uint8_t kKeyRef = 0x03;
constexpr std::uint8_t kMfrId = 0x04;
constexpr std::uint8_t kCertDigest = 0x05;
constexpr std::uint8_t kRoot = 0x06;
constexpr std::uint8_t kVerified = 0x07;
constexpr std::uint8_t kInstallation = 0x08;
constexpr std::uint8_t kFwDocDigest = 0x09;
constexpr std::uint8_t kConfiguration = 0x0a;
constexpr std::uint8_t kBootStatus = 0x0b;
}  // namespace state_tag

void put_field(Bytes& out, std::uint8_t tag, ByteView value) {
  out.push_back(tag);
  put_u32(out, static_cast<std::uint32_t>(value.size()));
  append(out, value);
}

Error bad_state(const std::string& why) { return Error(ErrorCode::MalformedDocument, "device state: " + why); }

std::vector<Field> parse_state_fields(ByteView data) {
  if (data.size() < 5 || !std::equal(std::begin(kStateMagic), std::end(kStateMagic), data.begin())) {
    throw bad_state("bad magic");
  }
  if (data[4] != kStateVersion) throw bad_state("unsupported version");
  std::vector<Field> fields;
  std::size_t pos = 5;
  while (pos < data.size()) {
    if (data.size() - pos < 5) throw bad_state("truncated field");
    Field f;
    f.tag = data[pos];
    std::uint32_t len = get_u32(&data[pos + 1]);
    pos += 5;
    if (len > data.size() - pos) throw bad_state("field overflows file");
    if (!fields.empty() && f.tag <= fields.back().tag) throw bad_state("fields out of order");
    f.value.assign(data.begin() + static_cast<std::ptrdiff_t>(pos),
                   data.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
    fields.push_back(std::move(f));
  }
  return fields;
}

const Bytes* find_field(const std::vector<Field>& fields, std::uint8_t tag) {
  for (const auto& f : fields) {
    if (f.tag == tag) return &f.value;
  }
  return nullptr;
}

const Bytes& need_field(const std::vector<Field>& fields, std::uint8_t tag) {
  const Bytes* v = find_field(fields, tag);
  if (v == nullptr) throw bad_state("missing field " + std::to_string(tag));
  return *v;
}

template <typename Fixed>
Fixed need_fixed(const std::vector<Field>& fields, std::uint8_t tag) {
  const Bytes& v = need_field(fields, tag);
  if (v.size() != Fixed::kSize) throw bad_state("field " + std::to_string(tag) + " has wrong width");
  return Fixed::from(v);
}

Bytes read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

std::string_view boot_status_name(BootStatus status) {
  switch (status) {
    case BootStatus::Unprogrammed: return "unprogrammed";
    case BootStatus::Operational: return "operational";
    case BootStatus::IntegrityFailed: return "integrity_failed";
  }
  return "unknown";
}

Device::Device(Uuid uuid, KeyPair keys, MfrId mfr_id, RootCertificate root)
    : uuid_(uuid),
      public_key_(keys.public_key),
      secret_key_(keys.secret_key),
      mfr_id_(mfr_id),
      root_(std::move(root)) {}

std::pair<Device, DeviceCertificate> Device::birth(const ManufacturerCertificate& mfr, const SecretKey& mfr_sk,
                                                   const RootCertificate& root, std::string_view dinf,
                                                   RandomSource& rng) {
  const Document mfr_chain[] = {mfr.document()};
  if (auto r = verify_chain(mfr_chain, root); !r) {
    throw Error(ErrorCode::ChainInvalid, "manufacturer does not chain to root: " + r.reason);
  }
  Uuid uuid = generate_uuid(rng);
  KeyPair keys = generate_keypair(rng);
  DeviceCertificate dcrt = make_device_certificate(dinf, keys.public_key, uuid, mfr, mfr_sk);

  // The device only keeps H(D_dcrt) after seeing the certificate verify.
  const Document dcrt_chain[] = {dcrt.document(), mfr.document()};
  if (auto r = verify_chain(dcrt_chain, root); !r) {
    throw Error(ErrorCode::ChainInvalid, "issued certificate does not verify: " + r.reason);
  }
  Device dev(uuid, std::move(keys), mfr.mfr_id(), root);
  dev.cert_digest_ = document_digest(dcrt.document());
  return {std::move(dev), std::move(dcrt)};
}

void Device::remember_digest(const Document& doc, std::span<const Document> chain) {
  std::vector<Document> full;
  full.reserve(chain.size() + 1);
  full.push_back(doc);
  full.insert(full.end(), chain.begin(), chain.end());
  if (auto r = verify_chain(full, root_); !r) throw Error(ErrorCode::ChainInvalid, r.reason);
  verified_.insert(document_digest(doc));
}

InstallationDocument Device::install_firmware(const FirmwareDocument& fw_doc, ByteView fw_image,
                                              std::span<const Document> chain, std::string_view instinfo) {
  std::vector<Document> full;
  full.reserve(chain.size() + 1);
  full.push_back(fw_doc.document());
  full.insert(full.end(), chain.begin(), chain.end());
  if (auto r = verify_chain(full, root_); !r) {
    throw Error(ErrorCode::ChainInvalid, "firmware rejected: " + r.reason);
  }
  if (fw_doc.mfr_id() != mfr_id_) {
    throw Error(ErrorCode::ChainInvalid, "firmware rejected: issued by a different manufacturer");
  }
  if (hash(fw_image) != fw_doc.image_digest()) {
    throw Error(ErrorCode::ImageMismatch, "image digest does not match the signed firmware document");
  }

  Digest fw_digest = document_digest(fw_doc.document());
  InstallationDocument inst = make_installation_document(fw_digest, uuid_, instinfo, secret_key_);
  verified_.insert(fw_digest);
  fw_slot_ = FirmwareSlot{inst, fw_digest};
  boot_status_ = BootStatus::Operational;
  return inst;
}

ConfigurationDocument Device::apply_configuration(ByteView cfg_payload, std::uint64_t seq) {
  if (boot_status_ != BootStatus::Operational) {
    throw Error(ErrorCode::NotOperational, "device is " + std::string(boot_status_name(boot_status_)));
  }
  std::uint64_t current = cfg_ ? cfg_->seq() : 0;
  if (seq <= current) {
    throw Error(ErrorCode::StaleSequence,
                "sequence " + std::to_string(seq) + " not above " + std::to_string(current));
  }
  ConfigurationDocument cfg = make_configuration_document(hash(cfg_payload), uuid_, seq, secret_key_);
  cfg_ = cfg;
  return cfg;
}

Digest Device::compute_state_digest() const {
  if (!fw_slot_) throw Error(ErrorCode::NotOperational, "no firmware installed");
  return tlt::compute_state_digest(fw_slot_->installation, cfg_ ? &*cfg_ : nullptr);
}

Bytes Device::advertise() const { return transport::encode_advertisement(uuid_); }

AttestationResponse Device::handle_challenge(const Nonce& challenge, RandomSource& rng) const {
  if (boot_status_ != BootStatus::Operational) {
    throw Error(ErrorCode::NotOperational, "device is " + std::string(boot_status_name(boot_status_)));
  }
  AttestationResponse resp;
  resp.state_digest = compute_state_digest();
  resp.challenge = challenge;
  resp.device_nonce = generate_nonce(rng);
  resp.signature = sign(secret_key_, resp.signed_portion());
  return resp;
}

BootStatus Device::boot() {
  if (!fw_slot_) {
    boot_status_ = BootStatus::Unprogrammed;
    return boot_status_;
  }
  const Document& inst = fw_slot_->installation.document();
  bool ok = inst.signatures.size() == 1 && verify_signature(inst, 0, public_key_) &&
            fw_slot_->installation.uuid() == uuid_ &&
            fw_slot_->installation.fw_doc_digest() == fw_slot_->fw_doc_digest &&
            verified_.contains(fw_slot_->fw_doc_digest);
  if (ok && cfg_) {
    const Document& cfg = cfg_->document();
    ok = cfg.signatures.size() == 1 && verify_signature(cfg, 0, public_key_) && cfg_->uuid() == uuid_;
  }
  boot_status_ = ok ? BootStatus::Operational : BootStatus::IntegrityFailed;
  return boot_status_;
}

void Device::tamper_reflash(const FirmwareDocument& fw_doc, std::string_view instinfo) {
  Digest fw_digest = document_digest(fw_doc.document());
  fw_slot_ = FirmwareSlot{make_installation_document(fw_digest, uuid_, instinfo, secret_key_), fw_digest};
  if (boot_status_ == BootStatus::Unprogrammed) boot_status_ = BootStatus::Operational;
}

void Device::tamper_configure(ByteView cfg_payload, std::uint64_t seq) {
  cfg_ = make_configuration_document(hash(cfg_payload), uuid_, seq, secret_key_);
}

Bytes Device::serialize_state(std::string_view key_ref) const {
  using namespace state_tag;
  Bytes out(std::begin(kStateMagic), std::end(kStateMagic));
  out.push_back(kStateVersion);
  put_field(out, kUuid, uuid_.bytes);
  put_field(out, kPublicKey, public_key_.serialize());
  put_field(out, kKeyRef, as_bytes(key_ref));
  put_field(out, kMfrId, mfr_id_.bytes);
  put_field(out, kCertDigest, cert_digest_.bytes);
  put_field(out, kRoot, encode_canonical(root_.document()));
  Bytes verified;
  for (const auto& d : verified_) append(verified, d.bytes);
  put_field(out, kVerified, verified);
  if (fw_slot_) {
    put_field(out, kInstallation, encode_canonical(fw_slot_->installation.document()));
    put_field(out, kFwDocDigest, fw_slot_->fw_doc_digest.bytes);
  }
  if (cfg_) put_field(out, kConfiguration, encode_canonical(cfg_->document()));
  put_field(out, kBootStatus, Bytes{static_cast<std::uint8_t>(boot_status_)});
  return out;
}

std::string Device::key_reference(ByteView data) {
  return to_string(need_field(parse_state_fields(data), state_tag::kKeyRef));
}

Device Device::deserialize_state(ByteView data, const SecretKey& sk) {
  using namespace state_tag;
  auto fields = parse_state_fields(data);
  PublicKey pk = PublicKey::parse(need_field(fields, kPublicKey));
  if (public_key_of(sk) != pk) throw Error(ErrorCode::InvalidKey, "key file does not match device state");

  Device dev(need_fixed<Uuid>(fields, kUuid), KeyPair{pk, sk}, need_fixed<MfrId>(fields, kMfrId),
             RootCertificate(decode(need_field(fields, kRoot))));
  dev.cert_digest_ = need_fixed<Digest>(fields, kCertDigest);
  const Bytes& verified = need_field(fields, kVerified);
  if (verified.size() % kDigestSize != 0) throw bad_state("verified digest set has wrong width");
  for (std::size_t i = 0; i < verified.size(); i += kDigestSize) {
    dev.verified_.insert(Digest::from(ByteView(verified).subspan(i, kDigestSize)));
  }
  const Bytes* inst = find_field(fields, kInstallation);
  const Bytes* fw_digest = find_field(fields, kFwDocDigest);
  if ((inst == nullptr) != (fw_digest == nullptr)) throw bad_state("partial firmware slot");
  if (inst != nullptr) {
    if (fw_digest->size() != kDigestSize) throw bad_state("firmware digest has wrong width");
    dev.fw_slot_ = FirmwareSlot{InstallationDocument(decode(*inst)), Digest::from(*fw_digest)};
  }
  if (const Bytes* cfg = find_field(fields, kConfiguration)) dev.cfg_ = ConfigurationDocument(decode(*cfg));
  const Bytes& status = need_field(fields, kBootStatus);
  if (status.size() != 1 || status[0] > 2) throw bad_state("bad boot status");
  dev.boot_status_ = static_cast<BootStatus>(status[0]);
  if (dev.fw_slot_ && dev.boot_status_ == BootStatus::Unprogrammed) throw bad_state("firmware slot while unprogrammed");
  return dev;
}

void Device::save(const std::filesystem::path& state_path, const std::filesystem::path& key_path) const {
  write_secret_key_file(key_path, secret_key_);
  // Relative references resolve against the state file's directory.
  std::filesystem::path ref = key_path;
  if (key_path.parent_path() == state_path.parent_path()) ref = key_path.filename();
  Bytes data = serialize_state(ref.string());
  std::ofstream out(state_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + state_path.string());
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + state_path.string());
}

Device Device::load(const std::filesystem::path& state_path) {
  Bytes data = read_all(state_path);
  std::filesystem::path ref = key_reference(data);
  if (ref.is_relative()) ref = state_path.parent_path() / ref;
  return deserialize_state(data, read_secret_key_file(ref));
}

}  // namespace tlt
