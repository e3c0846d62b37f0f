#include "tlt/transport.hpp"


#include "tlt/error.hpp"

namespace tlt::transport {

Bytes encode_advertisement(const Uuid& uuid, std::uint8_t flags) {
  Bytes out{kAdvertMagic, kAdvertVersion, flags};
  append(out, uuid.bytes);
  return out;
}

Uuid parse_advertisement(ByteView frame) {
  if (frame.size() != kAdvertisingSize) {
    throw Error(ErrorCode::ParseError, "advertisement must be " + std::to_string(kAdvertisingSize) + " bytes");
  }
  if (frame[0] != kAdvertMagic) throw Error(ErrorCode::ParseError, "bad advertisement magic");
  if (frame[1] != kAdvertVersion) throw Error(ErrorCode::ParseError, "unsupported advertisement version");
  return Uuid::from(frame.subspan(3));
}

Bytes DataFrame::encode(bool extended) const {
  std::size_t limit = extended ? kExtendedFrameMax : kDataFrameMax;
  if (kDataHeaderSize + payload.size() > limit) {
    throw Error(ErrorCode::PayloadTooLarge, "frame payload of " + std::to_string(payload.size()) + " bytes");
  }
  Bytes out;
  out.reserve(kDataHeaderSize + payload.size());
  out.push_back(static_cast<std::uint8_t>(msg_type));
  out.push_back(frag_index);
  out.push_back(frag_total);
  put_u16(out, static_cast<std::uint16_t>(payload.size()));
  append(out, payload);
  return out;
}

DataFrame DataFrame::decode(ByteView frame, bool extended) {
  std::size_t limit = extended ? kExtendedFrameMax : kDataFrameMax;
  if (frame.size() < kDataHeaderSize) throw Error(ErrorCode::ParseError, "data frame shorter than header");
  if (frame.size() > limit) throw Error(ErrorCode::ParseError, "data frame exceeds size class");
  std::uint8_t type = frame[0];
  if (type < 0x01 || type > 0x03) throw Error(ErrorCode::ParseError, "unknown message type");
  DataFrame f;
  f.msg_type = static_cast<MsgType>(type);
  f.frag_index = frame[1];
  f.frag_total = frame[2];
  if (f.frag_total == 0 || f.frag_index >= f.frag_total) throw Error(ErrorCode::ParseError, "bad fragment indices");
  std::size_t len = get_u16(&frame[3]);
  if (len != frame.size() - kDataHeaderSize) throw Error(ErrorCode::ParseError, "payload length mismatch");
  f.payload.assign(frame.begin() + kDataHeaderSize, frame.end());
  return f;
}

std::vector<DataFrame> fragment(MsgType msg_type, ByteView payload, bool extended) {
  if (extended && payload.size() <= kExtendedPayloadMax) {
    return {DataFrame{msg_type, 0, 1, Bytes(payload.begin(), payload.end())}};
  }
  if (payload.size() > kMaxMessage) {
    throw Error(ErrorCode::PayloadTooLarge, std::to_string(payload.size()) + " bytes exceeds 255 fragments");
  }
  std::size_t total = payload.empty() ? 1 : (payload.size() + kFragmentPayloadMax - 1) / kFragmentPayloadMax;
  std::vector<DataFrame> frames;
  frames.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t begin = i * kFragmentPayloadMax;
    std::size_t end = std::min(payload.size(), begin + kFragmentPayloadMax);
    frames.push_back(DataFrame{msg_type, static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(total),
                               Bytes(payload.begin() + static_cast<std::ptrdiff_t>(begin),
                                     payload.begin() + static_cast<std::ptrdiff_t>(end))});
  }
  return frames;
}

Message reassemble(std::span<const DataFrame> frames) {
  if (frames.empty()) throw Error(ErrorCode::MissingFragment, "no frames");
  const MsgType type = frames.front().msg_type;
  const std::size_t total = frames.front().frag_total;
  std::vector<const DataFrame*> slots(total, nullptr);
  for (const auto& f : frames) {
    if (f.msg_type != type || f.frag_total != total) {
      throw Error(ErrorCode::InconsistentSet, "frames disagree on message type or fragment count");
    }
    if (f.frag_index >= total) throw Error(ErrorCode::InconsistentSet, "fragment index out of range");
    if (slots[f.frag_index] != nullptr) throw Error(ErrorCode::InconsistentSet, "duplicate fragment");
    slots[f.frag_index] = &f;
  }
  Message msg{type, {}};
  for (std::size_t i = 0; i < total; ++i) {
    if (slots[i] == nullptr) throw Error(ErrorCode::MissingFragment, "fragment " + std::to_string(i) + " missing");
    append(msg.payload, slots[i]->payload);
  }
  return msg;
}

void trace_frame(std::ostream& out, std::string_view label, ByteView frame) {
  out << "frame " << label << " len=" << frame.size() << " " << to_hex(frame) << "\n";
}

void Link::send(Bytes frame) {
  if (frame.size() > max_frame_) {
    throw Error(ErrorCode::PayloadTooLarge,
                "frame of " + std::to_string(frame.size()) + " bytes exceeds " + std::to_string(max_frame_));
  }
  std::size_t n = sent_++;
  if (trace_ != nullptr) trace_frame(*trace_, label_, frame);
  if (drop_ && drop_(n)) return;
  if (corrupt_) corrupt_(n, frame);
  queue_.push_back(std::move(frame));
}

std::optional<Bytes> Link::receive() {
  if (queue_.empty()) return std::nullopt;
  Bytes f = std::move(queue_.front());
  queue_.pop_front();
  return f;
}

std::vector<Bytes> Link::drain() {
  std::vector<Bytes> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

void send_message(Link& link, MsgType msg_type, ByteView payload, bool extended) {
  for (const auto& f : fragment(msg_type, payload, extended)) link.send(f.encode(extended));
}

Message receive_message(Link& link, bool extended) {
  std::vector<DataFrame> frames;
  for (const auto& raw : link.drain()) frames.push_back(DataFrame::decode(raw, extended));
  return reassemble(frames);
}

}  // namespace tlt::transport
