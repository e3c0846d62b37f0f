#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tlt {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Fixed-width byte string. The tag keeps digests, UUIDs and nonces from
// being mixed up even though they share a width.
template <std::size_t N, typename Tag>
struct FixedBytes {
  static constexpr std::size_t kSize = N;
  std::array<std::uint8_t, N> bytes{};

  ByteView view() const { return {bytes.data(), bytes.size()}; }
  // Caller guarantees src.size() == N; see fixed_from() for the checked form.
  static FixedBytes from(ByteView src) {
    FixedBytes out;
    std::copy_n(src.begin(), N, out.bytes.begin());
    return out;
  }

  friend auto operator<=>(const FixedBytes&, const FixedBytes&) = default;
};

std::string to_hex(ByteView data);
template <std::size_t N, typename Tag>
std::string to_hex(const FixedBytes<N, Tag>& v) {
  return to_hex(v.view());
}
// Strict lowercase hex. Returns false on odd length or any other character.
bool from_hex(std::string_view text, Bytes& out);
Bytes from_hex_or_throw(std::string_view text);

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}
inline std::string to_string(ByteView b) { return {b.begin(), b.end()}; }

inline void append(Bytes& dst, ByteView src) { dst.insert(dst.end(), src.begin(), src.end()); }

inline void put_u16(Bytes& dst, std::uint16_t v) {
  dst.push_back(static_cast<std::uint8_t>(v >> 8));
  dst.push_back(static_cast<std::uint8_t>(v));
}
inline void put_u32(Bytes& dst, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) dst.push_back(static_cast<std::uint8_t>(v >> shift));
}
inline void put_u64(Bytes& dst, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) dst.push_back(static_cast<std::uint8_t>(v >> shift));
}
inline std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}
inline std::uint32_t get_u32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}
inline std::uint64_t get_u64(const std::uint8_t* p) {
  return (std::uint64_t{get_u32(p)} << 32) | get_u32(p + 4);
}

}  // namespace tlt
