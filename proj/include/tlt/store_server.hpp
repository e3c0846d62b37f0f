#pragma once

// Line protocol over a Unix domain socket for out-of-process verifiers.
//
//   DEV <uuid-hex>                 -> OK <hex(u32 len(dcrt) | dcrt | mcrt)>
//   STATE <uuid-hex> <digest-hex>  -> OK <hex(current u8 | config_seq u64 | firmware doc)>
//   anything else                  -> ERR <code>
//
// Requests and responses are single '\n'-terminated lines.

#include <atomic>
#include <filesystem>
#include <mutex>
#include <string>

#include "tlt/store.hpp"

namespace tlt {

inline constexpr std::size_t kMaxRequestLine = 4096;

// Pure request handler; never throws.
std::string handle_store_request(const StoreQuery& store, std::string_view line);

Bytes encode_device_view(const DeviceView& view);
DeviceView decode_device_view(ByteView payload);
Bytes encode_state_view(const StateView& view);
StateView decode_state_view(ByteView payload);

class StoreServer {
 public:
  // Binds and listens on `socket_path` (an existing socket file is replaced).
  StoreServer(Store& store, std::filesystem::path socket_path);
  ~StoreServer();
  StoreServer(const StoreServer&) = delete;
  StoreServer& operator=(const StoreServer&) = delete;

  // Single-threaded poll loop. Picks up records appended to the store's log
  // by other processes before answering each request. Returns once `stop`
  // becomes true (checked at least every 100 ms).
  void run(const std::atomic<bool>& stop);

  const std::filesystem::path& socket_path() const { return path_; }

 private:
  Store& store_;
  std::filesystem::path path_;
  int listen_fd_ = -1;
};

// StoreQuery over the socket protocol. Decoded certificates are returned as
// sent; callers re-verify them against their own trusted root.
class RemoteStore final : public StoreQuery {
 public:
  explicit RemoteStore(const std::filesystem::path& socket_path);
  ~RemoteStore() override;
  RemoteStore(const RemoteStore&) = delete;
  RemoteStore& operator=(const RemoteStore&) = delete;

  DeviceView lookup_device(const Uuid& uuid) const override;
  StateView lookup_state(const Uuid& uuid, const Digest& state_digest) const override;

  // Sends one raw request line, returns the raw response line.
  std::string request(const std::string& line) const;

 private:
  int fd_ = -1;
  mutable std::string buffer_;
  mutable std::mutex mutex_;
};

}  // namespace tlt
