#include "tlt/store_server.hpp"

#include <poll.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <map>
#include <vector>

namespace tlt {

namespace {

std::string ok(ByteView payload) { return "OK " + to_hex(payload) + "\n"; }
std::string err(ErrorCode code) { return "ERR " + std::string(error_code_name(code)) + "\n"; }

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t sp = line.find(' ', pos);
    if (sp == std::string_view::npos) sp = line.size();
    parts.push_back(line.substr(pos, sp - pos));
    pos = sp + 1;
  }
  return parts;
}

template <typename Fixed>
bool parse_fixed_hex(std::string_view text, Fixed& out) {
  Bytes raw;
  if (!from_hex(text, raw) || raw.size() != Fixed::kSize) return false;
  out = Fixed::from(raw);
  return true;
}

sockaddr_un make_address(const std::filesystem::path& path) {
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  const std::string s = path.string();
  if (s.size() >= sizeof(addr.sun_path)) throw Error(ErrorCode::IoError, "socket path too long: " + s);
  std::memcpy(addr.sun_path, s.c_str(), s.size() + 1);
  return addr;
}

bool write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

Bytes encode_device_view(const DeviceView& view) {
  Bytes dcrt = encode_canonical(view.certificate.document());
  Bytes out;
  put_u32(out, static_cast<std::uint32_t>(dcrt.size()));
  append(out, dcrt);
  append(out, encode_canonical(view.manufacturer.document()));
  return out;
}

DeviceView decode_device_view(ByteView payload) {
  if (payload.size() < 4) throw Error(ErrorCode::ParseError, "device view too short");
  std::uint32_t len = get_u32(payload.data());
  if (len > payload.size() - 4) throw Error(ErrorCode::ParseError, "device view length overflow");
  DeviceCertificate certificate(decode(payload.subspan(4, len)));
  ManufacturerCertificate manufacturer(decode(payload.subspan(4 + len)));
  return DeviceView{std::move(certificate), std::move(manufacturer)};
}

Bytes encode_state_view(const StateView& view) {
  Bytes out{static_cast<std::uint8_t>(view.expected_current ? 1 : 0)};
  put_u64(out, view.config_seq);
  append(out, encode_canonical(view.firmware.document()));
  return out;
}

StateView decode_state_view(ByteView payload) {
  if (payload.size() < 9 || payload[0] > 1) throw Error(ErrorCode::ParseError, "bad state view");
  FirmwareDocument firmware(decode(payload.subspan(9)));
  return StateView{std::move(firmware), get_u64(&payload[1]), payload[0] == 1};
}

std::string handle_store_request(const StoreQuery& store, std::string_view line) {
  auto parts = split_spaces(line);
  try {
    if (parts.size() == 2 && parts[0] == "DEV") {
      Uuid uuid;
      if (!parse_fixed_hex(parts[1], uuid)) return err(ErrorCode::ParseError);
      return ok(encode_device_view(store.lookup_device(uuid)));
    }
    if (parts.size() == 3 && parts[0] == "STATE") {
      Uuid uuid;
      Digest digest;
      if (!parse_fixed_hex(parts[1], uuid) || !parse_fixed_hex(parts[2], digest)) return err(ErrorCode::ParseError);
      return ok(encode_state_view(store.lookup_state(uuid, digest)));
    }
    return err(ErrorCode::UsageError);
  } catch (const Error& e) {
    return err(e.code());
  } catch (const std::exception&) {
    return err(ErrorCode::IoError);
  }
}

StoreServer::StoreServer(Store& store, std::filesystem::path socket_path)
    : store_(store), path_(std::move(socket_path)) {
  sockaddr_un addr = make_address(path_);
  listen_fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(ErrorCode::IoError, "socket() failed");
  std::error_code ec;
  std::filesystem::remove(path_, ec);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 16) != 0) {
    ::close(listen_fd_);
    throw Error(ErrorCode::IoError, "cannot listen on " + path_.string() + ": " + std::strerror(errno));
  }
}

StoreServer::~StoreServer() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

void StoreServer::run(const std::atomic<bool>& stop) {
  std::map<int, std::string> clients;
  while (!stop.load()) {
    std::vector<pollfd> fds{{listen_fd_, POLLIN, 0}};
    for (const auto& [fd, buf] : clients) fds.push_back({fd, POLLIN, 0});
    int n = ::poll(fds.data(), fds.size(), 100);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::IoError, "poll failed");
    }
    if (n == 0) continue;

    if (fds[0].revents & POLLIN) {
      int client = ::accept(listen_fd_, nullptr, nullptr);
      if (client >= 0) clients.emplace(client, std::string{});
    }
    for (std::size_t i = 1; i < fds.size(); ++i) {
      if (fds[i].revents == 0) continue;
      int fd = fds[i].fd;
      char chunk[1024];
      ssize_t got = ::recv(fd, chunk, sizeof(chunk), 0);
      bool close_client = got <= 0;
      if (!close_client) {
        std::string& buf = clients[fd];
        buf.append(chunk, static_cast<std::size_t>(got));
        std::size_t nl;
        while (!close_client && (nl = buf.find('\n')) != std::string::npos) {
          std::string line = buf.substr(0, nl);
          buf.erase(0, nl + 1);
          if (!line.empty() && line.back() == '\r') line.pop_back();
          std::string reply;
          try {
            store_.refresh();
            reply = handle_store_request(store_, line);
          } catch (const Error& e) {
            reply = err(e.code());
          }
          close_client = !write_all(fd, reply);
        }
        if (buf.size() > kMaxRequestLine) {
          write_all(fd, err(ErrorCode::ParseError));
          close_client = true;
        }
      }
      if (close_client) {
        ::close(fd);
        clients.erase(fd);
      }
    }
  }
  for (const auto& [fd, buf] : clients) ::close(fd);
}

RemoteStore::RemoteStore(const std::filesystem::path& socket_path) {
  sockaddr_un addr = make_address(socket_path);
  fd_ = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd_ < 0) throw Error(ErrorCode::IoError, "socket() failed");
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd_);
    throw Error(ErrorCode::IoError, "cannot connect to " + socket_path.string() + ": " + std::strerror(errno));
  }
}

RemoteStore::~RemoteStore() {
  if (fd_ >= 0) ::close(fd_);
}

std::string RemoteStore::request(const std::string& line) const {
  std::lock_guard lock(mutex_);
  if (!write_all(fd_, line + "\n")) throw Error(ErrorCode::IoError, "store connection closed");
  std::size_t nl;
  while ((nl = buffer_.find('\n')) == std::string::npos) {
    char chunk[4096];
    ssize_t got = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) throw Error(ErrorCode::IoError, "store connection closed");
    buffer_.append(chunk, static_cast<std::size_t>(got));
  }
  std::string reply = buffer_.substr(0, nl);
  buffer_.erase(0, nl + 1);
  return reply;
}

namespace {

Bytes expect_ok(const std::string& reply) {
  if (reply.rfind("OK ", 0) == 0) return from_hex_or_throw(std::string_view(reply).substr(3));
  if (reply.rfind("ERR ", 0) == 0) {
    auto code = error_code_from_name(std::string_view(reply).substr(4));
    throw Error(code.value_or(ErrorCode::ParseError), "store replied " + reply);
  }
  throw Error(ErrorCode::ParseError, "unexpected store reply");
}

}  // namespace

DeviceView RemoteStore::lookup_device(const Uuid& uuid) const {
  return decode_device_view(expect_ok(request("DEV " + to_hex(uuid))));
}

StateView RemoteStore::lookup_state(const Uuid& uuid, const Digest& state_digest) const {
  return decode_state_view(expect_ok(request("STATE " + to_hex(uuid) + " " + to_hex(state_digest))));
}

}  // namespace tlt
