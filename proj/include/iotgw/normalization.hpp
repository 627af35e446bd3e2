#pragma once

// Protocol conversion: pull the node's compact record out of a transport
// frame and rebuild it as a standardized reading.

#include <string>
#include <variant>

#include "iotgw/core_model.hpp"
#include "iotgw/transport/codec.hpp"

namespace iotgw::normalization {

/// Node-side uplink record, {"n":..,"s":..,"v":..,"t":..} on the wire.
struct NodeUplinkRecord {
  std::string node_id;
  std::string sensor_id;
  double value = 0.0;
  Timestamp capture_time{};

  friend bool operator==(const NodeUplinkRecord&, const NodeUplinkRecord&) = default;
};

/// Self-configuration record: same envelope, "s" is "_announce" and "v" holds
/// the node descriptor object.
struct NodeAnnounce {
  NodeDescriptor descriptor;
  Timestamp capture_time{};
};

inline constexpr std::string_view kAnnounceSensor = "_announce";

using Uplink = std::variant<NodeUplinkRecord, NodeAnnounce>;

std::string serialize_record(const NodeUplinkRecord& rec);
std::string serialize_announce(const NodeDescriptor& desc, Timestamp at);

/// Throws Error(MalformedRecord) / Error(UnknownKey). Announce payloads are
/// rejected as malformed; use extract_uplink to accept both.
NodeUplinkRecord extract_payload(const transport::RawFrame& frame);
Uplink extract_uplink(const transport::RawFrame& frame);

/// Throws Error(NodeMismatch) / Error(UnknownSensor).
NormalizedReading build_normalized(const NodeUplinkRecord& rec, ProtocolId arrival, const NodeDescriptor& node,
                                   const GatewayIdentity& gw);

}  // namespace iotgw::normalization
