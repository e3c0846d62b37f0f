#pragma once

// Constrained-radio framing.
//
// Advertising frame (19 bytes): magic 0x54 | version 0x01 | flags | uuid[16]
// Data frame: msg_type | frag_index | frag_total | payload_len (u16 BE) | payload
//   standard frames carry at most 250 payload bytes (255 total);
//   extended frames carry up to 1,645 payload bytes (1,650 total).

#include <deque>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "tlt/bytes.hpp"
#include "tlt/crypto.hpp"

namespace tlt::transport {

inline constexpr std::size_t kAdvertisingMax = 31;
inline constexpr std::size_t kDataFrameMax = 255;
inline constexpr std::size_t kExtendedFrameMax = 1650;
inline constexpr std::size_t kDataHeaderSize = 5;
inline constexpr std::size_t kFragmentPayloadMax = kDataFrameMax - kDataHeaderSize;          // 250
inline constexpr std::size_t kExtendedPayloadMax = kExtendedFrameMax - kDataHeaderSize;      // 1645
inline constexpr std::size_t kMaxMessage = kFragmentPayloadMax * 255;

inline constexpr std::uint8_t kAdvertMagic = 0x54;
inline constexpr std::uint8_t kAdvertVersion = 0x01;
inline constexpr std::size_t kAdvertisingSize = 3 + kUuidSize;

enum class MsgType : std::uint8_t {
  Challenge = 0x01,
  Response = 0x02,
  Fragment = 0x03,
};

Bytes encode_advertisement(const Uuid& uuid, std::uint8_t flags = 0);
// ParseError on bad magic, version or length.
Uuid parse_advertisement(ByteView frame);

struct DataFrame {
  MsgType msg_type = MsgType::Fragment;
  std::uint8_t frag_index = 0;
  std::uint8_t frag_total = 1;
  Bytes payload;

  // PayloadTooLarge if the encoded frame would exceed its size class.
  Bytes encode(bool extended = false) const;
  // ParseError on a malformed header or length mismatch.
  static DataFrame decode(ByteView frame, bool extended = false);

  friend bool operator==(const DataFrame&, const DataFrame&) = default;
};

// Minimal frame set for `payload`. With `extended`, a payload that fits one
// extended frame is sent unfragmented. PayloadTooLarge above 63,750 bytes.
std::vector<DataFrame> fragment(MsgType msg_type, ByteView payload, bool extended = false);

struct Message {
  MsgType msg_type;
  Bytes payload;
};

// Accepts any ordering of a complete set. MissingFragment when an index is
// absent, InconsistentSet on mixed msg_type/frag_total or duplicates.
Message reassemble(std::span<const DataFrame> frames);

// Writes one hex-dump line per frame, prefixed with `label`.
void trace_frame(std::ostream& out, std::string_view label, ByteView frame);

// One direction of the simulated radio. Preserves order unless a fault
// injector drops or mutates frames.
class Link {
 public:
  using DropFn = std::function<bool(std::size_t frame_number)>;
  using CorruptFn = std::function<void(std::size_t frame_number, Bytes& frame)>;

  explicit Link(std::size_t max_frame = kDataFrameMax) : max_frame_(max_frame) {}

  // PayloadTooLarge if the frame exceeds this link's size class.
  void send(Bytes frame);
  std::optional<Bytes> receive();
  std::vector<Bytes> drain();
  bool empty() const { return queue_.empty(); }

  void set_drop(DropFn fn) { drop_ = std::move(fn); }
  void set_corrupt(CorruptFn fn) { corrupt_ = std::move(fn); }
  void set_trace(std::ostream* out, std::string label) {
    trace_ = out;
    label_ = std::move(label);
  }
  std::size_t frames_sent() const { return sent_; }

 private:
  std::size_t max_frame_;
  std::deque<Bytes> queue_;
  DropFn drop_;
  CorruptFn corrupt_;
  std::ostream* trace_ = nullptr;
  std::string label_;
  std::size_t sent_ = 0;
};

// Bidirectional channel between a verifier and a device.
struct Channel {
  Link advertising{kAdvertisingMax};
  Link to_device;
  Link to_verifier;

  explicit Channel(bool extended = false)
      : to_device(extended ? kExtendedFrameMax : kDataFrameMax),
        to_verifier(extended ? kExtendedFrameMax : kDataFrameMax) {}

  void set_trace(std::ostream* out) {
    advertising.set_trace(out, "adv");
    to_device.set_trace(out, "v->d");
    to_verifier.set_trace(out, "d->v");
  }
};

void send_message(Link& link, MsgType msg_type, ByteView payload, bool extended = false);
// Drains the link and reassembles; errors from decode/reassemble propagate.
Message receive_message(Link& link, bool extended = false);

}  // namespace tlt::transport
