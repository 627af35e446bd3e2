#pragma once

// Byte-level framings for the three simulated radios:
//   wifi      u32 big-endian length | payload
//   bluetooth 0xC0 | SLIP-escaped payload | 0xC0
//   zigbee    0x7E | u16 big-endian length | payload | 0xFF - (sum mod 256)
//
// Decoders are pure functions over a (possibly partial) receive buffer. They
// never consume bytes when reporting need_more_data.

#include <cstddef>
#include <cstdint>
#include <optional>

#include "iotgw/core_model.hpp"

namespace iotgw::transport {

inline constexpr std::size_t kMaxPayload = 65535;

class RawFrame {
 public:
  /// Throws Error(EmptyPayload) / Error(PayloadTooLarge).
  RawFrame(ProtocolId kind, Bytes payload);

  ProtocolId kind() const noexcept { return kind_; }
  const Bytes& payload() const noexcept { return payload_; }

  friend bool operator==(const RawFrame&, const RawFrame&) = default;

 private:
  ProtocolId kind_;
  Bytes payload_;
};

enum class DecodeStatus {
  frame,           // frame decoded; `consumed` bytes belong to it (plus skipped garbage)
  need_more_data,  // nothing consumed
  skip,            // keep-alive delimiters or garbage; drop `consumed` bytes
  error,           // malformed frame; drop `consumed` bytes and resume
};

enum class FrameError { none, length_out_of_range, bad_escape, checksum_mismatch };

std::string_view to_string(FrameError e) noexcept;

struct DecodeResult {
  DecodeStatus status = DecodeStatus::need_more_data;
  std::optional<RawFrame> frame;
  std::size_t consumed = 0;
  FrameError error = FrameError::none;
  // Only meaningful for checksum_mismatch.
  std::uint8_t expected_checksum = 0;
  std::uint8_t got_checksum = 0;
};

Bytes wifi_encode(ByteView payload);
DecodeResult wifi_decode(ByteView stream);

inline constexpr std::uint8_t kSlipEnd = 0xC0;
inline constexpr std::uint8_t kSlipEsc = 0xDB;
inline constexpr std::uint8_t kSlipEscEnd = 0xDC;
inline constexpr std::uint8_t kSlipEscEsc = 0xDD;

Bytes bt_encode(ByteView payload);
DecodeResult bt_decode(ByteView stream);

inline constexpr std::uint8_t kZigbeeStart = 0x7E;

std::uint8_t zb_checksum(ByteView payload) noexcept;
Bytes zb_encode(ByteView payload);
DecodeResult zb_decode(ByteView stream);

Bytes encode_frame(ProtocolId kind, ByteView payload);
DecodeResult decode_frame(ProtocolId kind, ByteView stream);

}  // namespace iotgw::transport
