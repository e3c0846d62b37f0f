#pragma once

// The trust data store: admission-checked records indexed by UUID and by
// state digest, persisted as an append-only line log (`.tltlog`).
//
// Log line: "<kind> <seq> <lowercase hex of canonical document>\n".
// Line 0 is always the root certificate with sequence 0. Loading replays
// and re-admits every record; any failure is CorruptLog naming the record.
//
// Thread-safety: lookups may run concurrently; register_document() is
// serialized internally and a record becomes visible only after its log
// line has been flushed and synced.

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tlt/certificates.hpp"

namespace tlt {

enum class RecordKind : std::uint8_t {
  Root,
  Manufacturer,
  Device,
  Firmware,
  Installation,
  Configuration,
};

std::string_view record_kind_name(RecordKind kind);
std::optional<RecordKind> record_kind_from_name(std::string_view name);
RecordKind record_kind_for(DocType type);

struct StoreRecord {
  RecordKind kind;
  Document doc;
  std::uint64_t seq = 0;
};

struct StateIndexEntry {
  Uuid uuid;
  Digest state_digest;
  std::uint64_t inst_ref = 0;
  std::optional<std::uint64_t> cfg_ref;
};

struct DeviceView {
  DeviceCertificate certificate;
  ManufacturerCertificate manufacturer;

  const std::string& model() const { return certificate.info(); }
  const std::string& manufacturer_name() const { return manufacturer.info(); }
};

struct StateView {
  FirmwareDocument firmware;
  // 0 when the device has never been configured.
  std::uint64_t config_seq = 0;
  bool expected_current = false;
};

// Read-side interface shared by the in-process store and the socket client.
// Both lookups throw NotFound.
class StoreQuery {
 public:
  virtual ~StoreQuery() = default;
  virtual DeviceView lookup_device(const Uuid& uuid) const = 0;
  virtual StateView lookup_state(const Uuid& uuid, const Digest& state_digest) const = 0;
};

class Store final : public StoreQuery {
 public:
  // In-memory store anchored to `root`. ChainInvalid if root does not self-verify.
  explicit Store(const RootCertificate& root);
  ~Store() override;
  Store(Store&&) noexcept;
  Store& operator=(Store&&) noexcept;

  // New log file holding only the root record; the store stays attached and
  // appends every admitted record. IoError if the file already exists.
  static Store create(const std::filesystem::path& log_path, const RootCertificate& root);
  // Loads an existing log and stays attached for appends.
  static Store open(const std::filesystem::path& log_path);
  // Loads without attaching. CorruptLog on any replay failure.
  static Store load(const std::filesystem::path& log_path);

  // Writes the full record log to `path`.
  void persist(const std::filesystem::path& path) const;

  // Admits `doc` if it verifies against the root through registered issuers.
  // A supplied `chain` must verify and consist of registered documents.
  // Errors: ChainInvalid, ConstraintViolation, UnknownIssuer, DuplicateUuid,
  // StaleSequence, MalformedDocument (kind/doc_type mismatch).
  std::uint64_t register_document(RecordKind kind, const Document& doc, std::span<const Document> chain = {});

  DeviceView lookup_device(const Uuid& uuid) const override;
  StateView lookup_state(const Uuid& uuid, const Digest& state_digest) const override;

  // Replays lines appended to the attached log by other writers. Returns the
  // number of new records. No-op for detached stores.
  std::size_t refresh();

  const RootCertificate& root() const;
  std::vector<StoreRecord> records() const;
  std::vector<StateIndexEntry> state_index() const;
  std::optional<Digest> current_state(const Uuid& uuid) const;
  // Chain for a registered document, leaf excluded, root excluded.
  std::vector<Document> issuer_chain(const Document& doc) const;
  std::optional<FirmwareDocument> find_firmware(const Digest& fw_doc_digest) const;

  static std::string format_record_line(const StoreRecord& record);

 private:
  struct Impl;
  explicit Store(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

}  // namespace tlt
