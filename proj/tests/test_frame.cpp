#include <random>
#include <string_view>

#include "doctest.h"
#include "rehearse/error.hpp"
#include "rehearse/frame.hpp"

using namespace rehearse;
using namespace rehearse::glove;

namespace {

ErrorCode decode_error(std::span<const std::uint8_t> bytes) {
  try {
    decode_frame(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("decode succeeded");
  return ErrorCode::Io;
}

// Bitwise reference CRC, independent of the table-driven library version.
std::uint16_t crc_reference(std::span<const std::uint8_t> bytes) {
  std::uint32_t reg = 0xFFFF;
  for (auto b : bytes) {
    for (int bit = 7; bit >= 0; --bit) {
      const bool top = (reg >> 15) & 1;
      const bool in = (b >> bit) & 1;
      reg = (reg << 1) & 0xFFFF;
      if (top != in) reg ^= 0x1021;
    }
  }
  return static_cast<std::uint16_t>(reg);
}

}  // namespace

TEST_CASE("CRC-16/CCITT-FALSE check value") {
  constexpr std::string_view check = "123456789";
  const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(check.data()), check.size());
  CHECK(crc16_ccitt_false(bytes) == 0x29B1);
  CHECK(crc16_ccitt_false({}) == 0xFFFF);
}

TEST_CASE("CRC agrees with a bitwise reference") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::uint8_t> data(rng() % 300);
    for (auto& b : data) b = static_cast<std::uint8_t>(rng());
    CHECK(crc16_ccitt_false(data) == crc_reference(data));
  }
}

TEST_CASE("frame layout is bit exact") {
  const Frame f{MsgType::Start, 0x2A, {0xDE, 0xAD}};
  const auto bytes = encode_frame(f);
  REQUIRE(bytes.size() == 7);
  CHECK(bytes[0] == 0x03);
  CHECK(bytes[1] == 0x2A);
  CHECK(bytes[2] == 0x02);
  CHECK(bytes[3] == 0xDE);
  CHECK(bytes[4] == 0xAD);
  const auto crc = crc_reference(std::span(bytes).first(5));
  CHECK(bytes[5] == (crc >> 8));
  CHECK(bytes[6] == (crc & 0xFF));
}

TEST_CASE("empty and maximal payloads round trip") {
  const Frame empty{MsgType::StatusReq, 0, {}};
  CHECK(encode_frame(empty).size() == kFrameOverhead);
  CHECK(decode_frame(encode_frame(empty)) == empty);

  Frame full{MsgType::SchedChunk, 255, std::vector<std::uint8_t>(kMaxPayload, 0x5A)};
  CHECK(decode_frame(encode_frame(full)) == full);

  full.payload.push_back(0);
  CHECK_THROWS_AS(encode_frame(full), Error);
}

TEST_CASE("randomized round trips") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    Frame f;
    f.type = static_cast<MsgType>(1 + rng() % 7);
    f.seq = static_cast<std::uint8_t>(rng());
    f.payload.resize(rng() % (kMaxPayload + 1));
    for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng());
    CHECK(decode_frame(encode_frame(f)) == f);
  }
}

TEST_CASE("decode errors") {
  const auto good = encode_frame({MsgType::Stop, 1, {1, 2, 3}});
  CHECK(decode_error(std::span(good).first(4)) == ErrorCode::TruncatedFrame);
  CHECK(decode_error(std::span(good).first(good.size() - 1)) == ErrorCode::CrcMismatch);

  auto corrupt = good;
  corrupt[3] ^= 0x01;
  CHECK(decode_error(corrupt) == ErrorCode::CrcMismatch);

  // consistent CRC over a header that claims more payload than is present
  std::vector<std::uint8_t> lying{0x04, 0x01, 0x09, 0xAA};
  const auto c = crc16_ccitt_false(lying);
  lying.push_back(static_cast<std::uint8_t>(c >> 8));
  lying.push_back(static_cast<std::uint8_t>(c & 0xFF));
  CHECK(decode_error(lying) == ErrorCode::TruncatedFrame);

  std::vector<std::uint8_t> unknown{0x42, 0x00, 0x00};
  const auto u = crc16_ccitt_false(unknown);
  unknown.push_back(static_cast<std::uint8_t>(u >> 8));
  unknown.push_back(static_cast<std::uint8_t>(u & 0xFF));
  CHECK(decode_error(unknown) == ErrorCode::UnknownMsgType);
}

TEST_CASE("every single-bit flip is detected") {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 50; ++i) {
    Frame f{static_cast<MsgType>(1 + rng() % 7), static_cast<std::uint8_t>(rng()), {}};
    f.payload.resize(rng() % 64);
    for (auto& b : f.payload) b = static_cast<std::uint8_t>(rng());
    const auto bytes = encode_frame(f);
    for (std::size_t bit = 0; bit < bytes.size() * 8; ++bit) {
      auto flipped = bytes;
      flipped[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
      CHECK(decode_error(flipped) == ErrorCode::CrcMismatch);
    }
  }
}

TEST_CASE("known types") {
  for (int t = 0; t < 256; ++t) CHECK(is_known_type(static_cast<std::uint8_t>(t)) == (t >= 1 && t <= 7));
}

TEST_CASE("payload helpers are big endian") {
  auto bytes = PayloadWriter{}.u8(1).u16(0x0203).u32(0x04050607).u64(0x08090A0B0C0D0E0FULL).take();
  REQUIRE(bytes.size() == 15);
  for (std::size_t i = 0; i < bytes.size(); ++i) CHECK(bytes[i] == i + 1);
  PayloadReader in(bytes);
  CHECK(in.u8() == 1);
  CHECK(in.u16() == 0x0203);
  CHECK(in.u32() == 0x04050607);
  CHECK(in.u64() == 0x08090A0B0C0D0E0FULL);
  CHECK(in.remaining() == 0);
  CHECK_THROWS_AS(in.u8(), Error);
}
