#pragma once

// MQTT 3.1.1 control packets, QoS 0/1 subset. Encoding is bit-exact with the
// OASIS standard for the nine supported packet types.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "iotgw/core_model.hpp"

namespace iotgw::mqtt {

inline constexpr std::uint32_t kMaxRemainingLength = 268'435'455;

struct Connect {
  std::string client_id;
  std::uint16_t keep_alive = 60;  // seconds
  friend bool operator==(const Connect&, const Connect&) = default;
};

struct Connack {
  std::uint8_t return_code = 0;
  friend bool operator==(const Connack&, const Connack&) = default;
};

struct Publish {
  std::string topic;
  Bytes payload;
  std::uint8_t qos = 0;
  std::optional<std::uint16_t> packet_id;  // present iff qos == 1
  bool retain = false;
  bool dup = false;
  friend bool operator==(const Publish&, const Publish&) = default;
};

struct Puback {
  std::uint16_t packet_id = 0;
  friend bool operator==(const Puback&, const Puback&) = default;
};

struct Subscription {
  std::string filter;
  std::uint8_t qos = 0;
  friend bool operator==(const Subscription&, const Subscription&) = default;
};

struct Subscribe {
  std::uint16_t packet_id = 0;
  std::vector<Subscription> subscriptions;
  friend bool operator==(const Subscribe&, const Subscribe&) = default;
};

inline constexpr std::uint8_t kSubackFailure = 0x80;

struct Suback {
  std::uint16_t packet_id = 0;
  std::vector<std::uint8_t> return_codes;
  friend bool operator==(const Suback&, const Suback&) = default;
};

struct Pingreq {
  friend bool operator==(const Pingreq&, const Pingreq&) = default;
};
struct Pingresp {
  friend bool operator==(const Pingresp&, const Pingresp&) = default;
};
struct Disconnect {
  friend bool operator==(const Disconnect&, const Disconnect&) = default;
};

using Packet = std::variant<Connect, Connack, Publish, Puback, Subscribe, Suback, Pingreq, Pingresp, Disconnect>;

std::string_view packet_name(const Packet& p) noexcept;

/// Throws Error(ValueTooLarge) above kMaxRemainingLength.
Bytes encode_remaining_length(std::uint32_t n);

struct VarintDecode {
  std::uint32_t value = 0;
  std::size_t consumed = 0;
};
/// nullopt when more bytes are needed. Throws Error(MalformedVarint) when a
/// fifth length byte would be required.
std::optional<VarintDecode> decode_remaining_length(ByteView bytes);

/// Throws Error(ProtocolViolation) if the packet breaks its invariants.
Bytes encode_packet(const Packet& p);

struct PacketDecode {
  Packet packet;
  std::size_t consumed = 0;
};
/// nullopt when the buffer holds no complete packet (nothing consumed).
/// Throws Error(UnsupportedPacketType) for QoS 2 and other packet types,
/// Error(ProtocolViolation) / Error(MalformedVarint) for malformed input.
std::optional<PacketDecode> decode_packet(ByteView stream);

}  // namespace iotgw::mqtt
