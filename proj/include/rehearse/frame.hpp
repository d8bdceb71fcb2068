#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rehearse::glove {

// Wire layout: [msg_type u8][seq u8][len u8][payload len bytes][crc u16 BE].
// The CRC is CRC-16/CCITT-FALSE over everything before it.

enum class MsgType : std::uint8_t {
  SchedChunk = 0x01,
  SchedCommit = 0x02,
  Start = 0x03,
  Stop = 0x04,
  StatusReq = 0x05,
  Status = 0x06,
  Sync = 0x07,
};

inline constexpr std::size_t kMaxPayload = 240;
inline constexpr std::size_t kFrameOverhead = 5;

struct Frame {
  MsgType type = MsgType::StatusReq;
  std::uint8_t seq = 0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes);

bool is_known_type(std::uint8_t raw);

std::vector<std::uint8_t> encode_frame(const Frame& frame);

/// Strict decode of exactly one frame. The CRC is checked before the length
/// and type fields so any corruption of the header also reports CrcMismatch.
Frame decode_frame(std::span<const std::uint8_t> bytes);

// Big-endian payload helpers shared by the command payloads.
class PayloadWriter {
 public:
  PayloadWriter& u8(std::uint8_t v);
  PayloadWriter& u16(std::uint16_t v);
  PayloadWriter& u32(std::uint32_t v);
  PayloadWriter& u64(std::uint64_t v);
  PayloadWriter& bytes(std::span<const std::uint8_t> v);
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class PayloadReader {
 public:
  explicit PayloadReader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::span<const std::uint8_t> rest();
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  std::uint64_t be(int width);
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace rehearse::glove
