#include "tlt/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <shared_mutex>

namespace tlt {

namespace {

constexpr RecordKind kAllKinds[] = {RecordKind::Root,     RecordKind::Manufacturer, RecordKind::Device,
                                    RecordKind::Firmware, RecordKind::Installation, RecordKind::Configuration};

struct ParsedLine {
  RecordKind kind;
  std::uint64_t seq;
  Document doc;
};

// Strict: "<kind> <seq> <hex>" with single spaces, canonical decimal.
ParsedLine parse_line(std::string_view line) {
  auto bad = [](const char* why) { return Error(ErrorCode::ParseError, why); };
  std::size_t s1 = line.find(' ');
  if (s1 == std::string_view::npos) throw bad("missing separator");
  std::size_t s2 = line.find(' ', s1 + 1);
  if (s2 == std::string_view::npos) throw bad("missing separator");
  std::string_view kind_text = line.substr(0, s1);
  std::string_view seq_text = line.substr(s1 + 1, s2 - s1 - 1);
  std::string_view hex_text = line.substr(s2 + 1);

  auto kind = record_kind_from_name(kind_text);
  if (!kind) throw bad("unknown record kind");
  if (seq_text.empty() || seq_text.size() > 19 || (seq_text.size() > 1 && seq_text[0] == '0')) {
    throw bad("bad sequence number");
  }
  std::uint64_t seq = 0;
  for (char c : seq_text) {
    if (c < '0' || c > '9') throw bad("bad sequence number");
    seq = seq * 10 + static_cast<std::uint64_t>(c - '0');
  }
  Bytes raw;
  if (!from_hex(hex_text, raw)) throw bad("document is not lowercase hex");
  Document doc = decode(raw);
  if (encode_canonical(doc) != raw) throw bad("document is not canonical");
  return ParsedLine{*kind, seq, std::move(doc)};
}

// Shared mutex whose waiting writer blocks new readers at the turnstile.
class WriterPreferringMutex {
 public:
  void lock() {
    std::lock_guard gate(turnstile_);
    rw_.lock();
  }
  void unlock() { rw_.unlock(); }
  void lock_shared() {
    { std::lock_guard gate(turnstile_); }
    rw_.lock_shared();
  }
  void unlock_shared() { rw_.unlock_shared(); }

 private:
  std::mutex turnstile_;
  std::shared_mutex rw_;
};

}  // namespace

std::string_view record_kind_name(RecordKind kind) {
  switch (kind) {
    case RecordKind::Root: return "root";
    case RecordKind::Manufacturer: return "manufacturer";
    case RecordKind::Device: return "device";
    case RecordKind::Firmware: return "firmware";
    case RecordKind::Installation: return "installation";
    case RecordKind::Configuration: return "configuration";
  }
  return "unknown";
}

std::optional<RecordKind> record_kind_from_name(std::string_view name) {
  for (RecordKind k : kAllKinds) {
    if (record_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

RecordKind record_kind_for(DocType type) {
  switch (type) {
    case DocType::Root: return RecordKind::Root;
    case DocType::Manufacturer: return RecordKind::Manufacturer;
    case DocType::Device: return RecordKind::Device;
    case DocType::Firmware: return RecordKind::Firmware;
    case DocType::Installation: return RecordKind::Installation;
    case DocType::Configuration: return RecordKind::Configuration;
  }
  return RecordKind::Root;
}

struct Store::Impl {
  explicit Impl(RootCertificate r) : root(std::move(r)) {}
  ~Impl() {
    if (log != nullptr) std::fclose(log);
  }

  RootCertificate root;
  std::vector<StoreRecord> records;
  std::map<MfrId, std::size_t> manufacturers;
  std::map<Uuid, std::size_t> devices;
  std::map<Digest, std::size_t> firmware;
  std::map<Uuid, std::size_t> latest_installation;
  std::map<Uuid, std::size_t> latest_configuration;
  std::map<std::pair<Uuid, Digest>, StateIndexEntry> state_index;
  std::map<Uuid, Digest> current;

  std::filesystem::path log_path;
  std::FILE* log = nullptr;
  std::uint64_t log_offset = 0;

  mutable WriterPreferringMutex mutex;

  // Outcome of admission checks. `existing` is set when the document is
  // already present and re-registration is idempotent.
  struct Admission {
    std::optional<std::uint64_t> existing;
  };

  Admission check(RecordKind kind, const Document& doc, std::span<const Document> chain) const;
  std::uint64_t commit(RecordKind kind, const Document& doc);
  std::vector<Document> resolve_issuers(const Document& doc) const;
  bool is_registered(const Document& doc) const;
  void append_line(const StoreRecord& rec);
  std::size_t replay(std::string_view text, std::uint64_t& consumed);
};

std::vector<Document> Store::Impl::resolve_issuers(const Document& doc) const {
  auto manufacturer_chain = [&](const MfrId& id) -> std::vector<Document> {
    auto it = manufacturers.find(id);
    if (it == manufacturers.end()) throw Error(ErrorCode::UnknownIssuer, "manufacturer not registered");
    return {records[it->second].doc};
  };
  auto device_chain = [&](const Uuid& uuid) -> std::vector<Document> {
    auto it = devices.find(uuid);
    if (it == devices.end()) throw Error(ErrorCode::UnknownIssuer, "device not registered");
    const Document& dcrt = records[it->second].doc;
    std::vector<Document> chain{dcrt};
    auto rest = manufacturer_chain(DeviceCertificate(dcrt).mfr_id());
    chain.insert(chain.end(), rest.begin(), rest.end());
    return chain;
  };

  switch (doc.type) {
    case DocType::Root:
    case DocType::Manufacturer: return {};
    case DocType::Device: return manufacturer_chain(DeviceCertificate(doc).mfr_id());
    case DocType::Firmware: return manufacturer_chain(FirmwareDocument(doc).mfr_id());
    case DocType::Installation: return device_chain(InstallationDocument(doc).uuid());
    case DocType::Configuration: return device_chain(ConfigurationDocument(doc).uuid());
  }
  return {};
}

bool Store::Impl::is_registered(const Document& doc) const {
  switch (doc.type) {
    case DocType::Root: return doc == root.document();
    case DocType::Manufacturer: {
      auto it = manufacturers.find(ManufacturerCertificate(doc).mfr_id());
      return it != manufacturers.end() && records[it->second].doc == doc;
    }
    case DocType::Device: {
      auto it = devices.find(DeviceCertificate(doc).uuid());
      return it != devices.end() && records[it->second].doc == doc;
    }
    default: return false;
  }
}

Store::Impl::Admission Store::Impl::check(RecordKind kind, const Document& doc,
                                          std::span<const Document> chain) const {
  if (record_kind_for(doc.type) != kind) {
    throw Error(ErrorCode::MalformedDocument, "record kind " + std::string(record_kind_name(kind)) +
                                                  " does not match " + std::string(doc_type_name(doc.type)));
  }
  if (kind == RecordKind::Root) throw Error(ErrorCode::ChainInvalid, "store is already anchored to a root");

  auto verify_or_throw = [&](std::span<const Document> links) {
    std::vector<Document> full{doc};
    full.insert(full.end(), links.begin(), links.end());
    if (auto r = verify_chain(full, root); !r) throw Error(r.code, r.reason);
  };

  if (!chain.empty()) {
    verify_or_throw(chain);
    for (const auto& link : chain) {
      if (!is_registered(link)) {
        throw Error(ErrorCode::UnknownIssuer, std::string(doc_type_name(link.type)) + " in chain is not registered");
      }
    }
  }
  std::vector<Document> issuers;
  try {
    issuers = resolve_issuers(doc);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedDocument) throw Error(ErrorCode::ChainInvalid, e.what());
    throw;
  }
  verify_or_throw(issuers);

  switch (kind) {
    case RecordKind::Manufacturer:
      if (manufacturers.contains(ManufacturerCertificate(doc).mfr_id())) {
        throw Error(ErrorCode::DuplicateUuid, "manufacturer id already registered");
      }
      break;
    case RecordKind::Device:
      if (devices.contains(DeviceCertificate(doc).uuid())) {
        throw Error(ErrorCode::DuplicateUuid, "device uuid already registered");
      }
      break;
    case RecordKind::Firmware:
      if (auto it = firmware.find(document_digest(doc)); it != firmware.end()) {
        return Admission{records[it->second].seq};
      }
      break;
    case RecordKind::Installation: {
      InstallationDocument inst(doc);
      auto fw = firmware.find(inst.fw_doc_digest());
      if (fw == firmware.end()) throw Error(ErrorCode::UnknownIssuer, "installed firmware is not registered");
      DeviceCertificate dcrt(records[devices.at(inst.uuid())].doc);
      if (FirmwareDocument(records[fw->second].doc).mfr_id() != dcrt.mfr_id()) {
        throw Error(ErrorCode::ConstraintViolation, "firmware belongs to a different manufacturer than the device");
      }
      break;
    }
    case RecordKind::Configuration: {
      ConfigurationDocument cfg(doc);
      std::uint64_t prior = 0;
      if (auto it = latest_configuration.find(cfg.uuid()); it != latest_configuration.end()) {
        prior = ConfigurationDocument(records[it->second].doc).seq();
      }
      if (cfg.seq() <= prior) {
        throw Error(ErrorCode::StaleSequence,
                    "configuration sequence " + std::to_string(cfg.seq()) + " not above " + std::to_string(prior));
      }
      break;
    }
    case RecordKind::Root: break;
  }
  return Admission{};
}

std::uint64_t Store::Impl::commit(RecordKind kind, const Document& doc) {
  std::uint64_t seq = records.size();
  std::size_t index = records.size();
  records.push_back(StoreRecord{kind, doc, seq});

  std::optional<Uuid> touched;
  switch (kind) {
    case RecordKind::Root: break;
    case RecordKind::Manufacturer: manufacturers[ManufacturerCertificate(doc).mfr_id()] = index; break;
    case RecordKind::Device: devices[DeviceCertificate(doc).uuid()] = index; break;
    case RecordKind::Firmware: firmware[document_digest(doc)] = index; break;
    case RecordKind::Installation:
      touched = InstallationDocument(doc).uuid();
      latest_installation[*touched] = index;
      break;
    case RecordKind::Configuration:
      touched = ConfigurationDocument(doc).uuid();
      latest_configuration[*touched] = index;
      break;
  }

  if (touched) {
    auto inst_it = latest_installation.find(*touched);
    if (inst_it != latest_installation.end()) {
      InstallationDocument inst(records[inst_it->second].doc);
      std::optional<ConfigurationDocument> cfg;
      std::optional<std::uint64_t> cfg_ref;
      if (auto c = latest_configuration.find(*touched); c != latest_configuration.end()) {
        cfg.emplace(records[c->second].doc);
        cfg_ref = records[c->second].seq;
      }
      Digest state = compute_state_digest(inst, cfg ? &*cfg : nullptr);
      state_index.try_emplace({*touched, state},
                              StateIndexEntry{*touched, state, records[inst_it->second].seq, cfg_ref});
      current[*touched] = state;
    }
  }
  return seq;
}

void Store::Impl::append_line(const StoreRecord& rec) {
  if (log == nullptr) return;
  std::string line = format_record_line(rec);
  if (std::fwrite(line.data(), 1, line.size(), log) != line.size() || std::fflush(log) != 0 ||
      ::fsync(::fileno(log)) != 0) {
    throw Error(ErrorCode::IoError, "failed to append to " + log_path.string());
  }
  log_offset += line.size();
}

std::size_t Store::Impl::replay(std::string_view text, std::uint64_t& consumed) {
  std::size_t added = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::uint64_t expected_seq = records.size();
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      throw CorruptLogError(expected_seq, "unterminated record line");
    }
    std::string_view line = text.substr(pos, nl - pos);
    try {
      ParsedLine parsed = parse_line(line);
      if (parsed.seq != expected_seq) throw Error(ErrorCode::ParseError, "sequence number out of order");
      if (expected_seq == 0) {
        if (parsed.kind != RecordKind::Root || parsed.doc != root.document()) {
          throw Error(ErrorCode::ChainInvalid, "first record must be the anchoring root");
        }
        records.push_back(StoreRecord{RecordKind::Root, parsed.doc, 0});
      } else {
        Admission a = check(parsed.kind, parsed.doc, {});
        if (a.existing) throw Error(ErrorCode::ParseError, "duplicate record");
        commit(parsed.kind, parsed.doc);
      }
    } catch (const CorruptLogError&) {
      throw;
    } catch (const Error& e) {
      throw CorruptLogError(expected_seq, e.what());
    }
    pos = nl + 1;
    consumed += line.size() + 1;
    ++added;
  }
  return added;
}

Store::Store(const RootCertificate& root) : impl_(std::make_unique<Impl>(root)) {
  if (!root.self_verifies()) throw Error(ErrorCode::ChainInvalid, "root certificate does not self-verify");
  impl_->records.push_back(StoreRecord{RecordKind::Root, root.document(), 0});
}

Store::Store(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Store::~Store() = default;
Store::Store(Store&&) noexcept = default;
Store& Store::operator=(Store&&) noexcept = default;

std::string Store::format_record_line(const StoreRecord& record) {
  return std::string(record_kind_name(record.kind)) + " " + std::to_string(record.seq) + " " +
         to_hex(encode_canonical(record.doc)) + "\n";
}

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_synced(const std::filesystem::path& path, std::string_view text, bool exclusive) {
  int flags = O_WRONLY | O_CREAT | (exclusive ? O_EXCL : O_TRUNC);
  int fd = ::open(path.c_str(), flags, 0644);
  if (fd < 0) throw Error(ErrorCode::IoError, "cannot create " + path.string());
  std::size_t done = 0;
  while (done < text.size()) {
    ssize_t n = ::write(fd, text.data() + done, text.size() - done);
    if (n <= 0) {
      ::close(fd);
      throw Error(ErrorCode::IoError, "write failed for " + path.string());
    }
    done += static_cast<std::size_t>(n);
  }
  bool ok = ::fsync(fd) == 0;
  ::close(fd);
  if (!ok) throw Error(ErrorCode::IoError, "fsync failed for " + path.string());
}

}  // namespace

Store Store::load(const std::filesystem::path& log_path) {
  std::string text = read_text(log_path);
  std::size_t nl = text.find('\n');
  if (nl == std::string::npos) throw CorruptLogError(0, "log has no root record");
  std::unique_ptr<Impl> impl;
  try {
    ParsedLine first = parse_line(std::string_view(text).substr(0, nl));
    if (first.kind != RecordKind::Root || first.seq != 0) throw Error(ErrorCode::ParseError, "first record is not root");
    RootCertificate root(first.doc);
    if (!root.self_verifies()) throw Error(ErrorCode::ChainInvalid, "root does not self-verify");
    impl = std::make_unique<Impl>(std::move(root));
  } catch (const Error& e) {
    throw CorruptLogError(0, e.what());
  }
  std::uint64_t consumed = 0;
  impl->replay(text, consumed);
  impl->log_offset = consumed;
  return Store(std::move(impl));
}

Store Store::open(const std::filesystem::path& log_path) {
  Store s = load(log_path);
  s.impl_->log_path = log_path;
  s.impl_->log = std::fopen(log_path.c_str(), "ab");
  if (s.impl_->log == nullptr) throw Error(ErrorCode::IoError, "cannot open " + log_path.string() + " for append");
  return s;
}

Store Store::create(const std::filesystem::path& log_path, const RootCertificate& root) {
  Store s(root);
  write_synced(log_path, format_record_line(s.impl_->records.front()), /*exclusive=*/true);
  return open(log_path);
}

void Store::persist(const std::filesystem::path& path) const {
  std::shared_lock lock(impl_->mutex);
  std::string text;
  for (const auto& r : impl_->records) text += format_record_line(r);
  write_synced(path, text, /*exclusive=*/false);
}

std::uint64_t Store::register_document(RecordKind kind, const Document& doc, std::span<const Document> chain) {
  std::unique_lock lock(impl_->mutex);
  Impl::Admission a = impl_->check(kind, doc, chain);
  if (a.existing) return *a.existing;
  StoreRecord pending{kind, doc, impl_->records.size()};
  impl_->append_line(pending);
  return impl_->commit(kind, doc);
}

DeviceView Store::lookup_device(const Uuid& uuid) const {
  std::shared_lock lock(impl_->mutex);
  auto it = impl_->devices.find(uuid);
  if (it == impl_->devices.end()) throw Error(ErrorCode::NotFound, "no device " + to_hex(uuid));
  DeviceCertificate dcrt(impl_->records[it->second].doc);
  ManufacturerCertificate mcrt(impl_->records[impl_->manufacturers.at(dcrt.mfr_id())].doc);
  return DeviceView{std::move(dcrt), std::move(mcrt)};
}

StateView Store::lookup_state(const Uuid& uuid, const Digest& state_digest) const {
  std::shared_lock lock(impl_->mutex);
  auto it = impl_->state_index.find({uuid, state_digest});
  if (it == impl_->state_index.end()) throw Error(ErrorCode::NotFound, "no state entry for " + to_hex(uuid));
  const StateIndexEntry& entry = it->second;
  InstallationDocument inst(impl_->records[entry.inst_ref].doc);
  FirmwareDocument fw(impl_->records[impl_->firmware.at(inst.fw_doc_digest())].doc);
  std::uint64_t cfg_seq = 0;
  if (entry.cfg_ref) cfg_seq = ConfigurationDocument(impl_->records[*entry.cfg_ref].doc).seq();
  auto cur = impl_->current.find(uuid);
  bool is_current = cur != impl_->current.end() && cur->second == state_digest;
  return StateView{std::move(fw), cfg_seq, is_current};
}

std::size_t Store::refresh() {
  std::unique_lock lock(impl_->mutex);
  if (impl_->log == nullptr) return 0;
  std::string text = read_text(impl_->log_path);
  if (text.size() <= impl_->log_offset) return 0;
  std::string_view fresh = std::string_view(text).substr(impl_->log_offset);
  // Only complete lines; a writer may be mid-append.
  std::size_t last_nl = fresh.rfind('\n');
  if (last_nl == std::string_view::npos) return 0;
  std::uint64_t consumed = 0;
  std::size_t added = impl_->replay(fresh.substr(0, last_nl + 1), consumed);
  impl_->log_offset += consumed;
  return added;
}

const RootCertificate& Store::root() const { return impl_->root; }

std::vector<StoreRecord> Store::records() const {
  std::shared_lock lock(impl_->mutex);
  return impl_->records;
}

std::vector<StateIndexEntry> Store::state_index() const {
  std::shared_lock lock(impl_->mutex);
  std::vector<StateIndexEntry> out;
  for (const auto& [key, entry] : impl_->state_index) out.push_back(entry);
  return out;
}

std::optional<Digest> Store::current_state(const Uuid& uuid) const {
  std::shared_lock lock(impl_->mutex);
  auto it = impl_->current.find(uuid);
  if (it == impl_->current.end()) return std::nullopt;
  return it->second;
}

std::vector<Document> Store::issuer_chain(const Document& doc) const {
  std::shared_lock lock(impl_->mutex);
  return impl_->resolve_issuers(doc);
}

std::optional<FirmwareDocument> Store::find_firmware(const Digest& fw_doc_digest) const {
  std::shared_lock lock(impl_->mutex);
  auto it = impl_->firmware.find(fw_doc_digest);
  if (it == impl_->firmware.end()) return std::nullopt;
  return FirmwareDocument(impl_->records[it->second].doc);
}

}  // namespace tlt
