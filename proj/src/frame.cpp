#include "rehearse/frame.hpp"

#include <array>

#include "rehearse/error.hpp"

namespace rehearse::glove {

namespace {

constexpr std::array<std::uint16_t, 256> make_crc_table() {
  std::array<std::uint16_t, 256> t{};
  for (unsigned n = 0; n < 256; ++n) {
    std::uint16_t crc = static_cast<std::uint16_t>(n << 8);
    for (int i = 0; i < 8; ++i) {
      crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021) : static_cast<std::uint16_t>(crc << 1);
    }
    t[n] = crc;
  }
  return t;
}

constexpr auto kCrcTable = make_crc_table();

}  // namespace

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes) {
  std::uint16_t crc = 0xFFFF;
  for (auto b : bytes) crc = static_cast<std::uint16_t>((crc << 8) ^ kCrcTable[((crc >> 8) ^ b) & 0xFF]);
  return crc;
}

bool is_known_type(std::uint8_t raw) { return raw >= 0x01 && raw <= 0x07; }

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  if (frame.payload.size() > kMaxPayload) {
    throw Error(ErrorCode::PayloadTooLarge, std::to_string(frame.payload.size()) + " byte payload");
  }
  std::vector<std::uint8_t> out;
  out.reserve(frame.payload.size() + kFrameOverhead);
  out.push_back(static_cast<std::uint8_t>(frame.type));
  out.push_back(frame.seq);
  out.push_back(static_cast<std::uint8_t>(frame.payload.size()));
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  const auto crc = crc16_ccitt_false(out);
  out.push_back(static_cast<std::uint8_t>(crc >> 8));
  out.push_back(static_cast<std::uint8_t>(crc & 0xFF));
  return out;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kFrameOverhead) throw Error(ErrorCode::TruncatedFrame, "shorter than frame overhead");
  const auto body = bytes.first(bytes.size() - 2);
  const std::uint16_t wire_crc = static_cast<std::uint16_t>((bytes[bytes.size() - 2] << 8) | bytes.back());
  if (crc16_ccitt_false(body) != wire_crc) throw Error(ErrorCode::CrcMismatch);

  const std::size_t len = body[2];
  if (len > kMaxPayload || body.size() != 3 + len) {
    throw Error(ErrorCode::TruncatedFrame, "length field disagrees with frame size");
  }
  if (!is_known_type(body[0])) throw Error(ErrorCode::UnknownMsgType, std::to_string(body[0]));

  Frame f;
  f.type = static_cast<MsgType>(body[0]);
  f.seq = body[1];
  f.payload.assign(body.begin() + 3, body.end());
  return f;
}

PayloadWriter& PayloadWriter::u8(std::uint8_t v) {
  out_.push_back(v);
  return *this;
}
PayloadWriter& PayloadWriter::u16(std::uint16_t v) {
  for (int i = 1; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  return *this;
}
PayloadWriter& PayloadWriter::u32(std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  return *this;
}
PayloadWriter& PayloadWriter::u64(std::uint64_t v) {
  for (int i = 7; i >= 0; --i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  return *this;
}
PayloadWriter& PayloadWriter::bytes(std::span<const std::uint8_t> v) {
  out_.insert(out_.end(), v.begin(), v.end());
  return *this;
}

std::uint64_t PayloadReader::be(int width) {
  if (remaining() < static_cast<std::size_t>(width)) throw Error(ErrorCode::TruncatedFrame, "payload too short");
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v = (v << 8) | in_[pos_++];
  return v;
}
std::uint8_t PayloadReader::u8() { return static_cast<std::uint8_t>(be(1)); }
std::uint16_t PayloadReader::u16() { return static_cast<std::uint16_t>(be(2)); }
std::uint32_t PayloadReader::u32() { return static_cast<std::uint32_t>(be(4)); }
std::uint64_t PayloadReader::u64() { return be(8); }
std::span<const std::uint8_t> PayloadReader::rest() {
  auto r = in_.subspan(pos_);
  pos_ = in_.size();
  return r;
}

}  // namespace rehearse::glove
