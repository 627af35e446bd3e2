#pragma once

// Domain types shared by every module, and the standardized reading codec.

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace iotgw {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

Bytes to_bytes(std::string_view s);
std::string to_string(ByteView b);

// ---------------------------------------------------------------------------
// Protocols

enum class ProtocolId : std::uint8_t { wifi, bluetooth, zigbee };

inline constexpr std::array<ProtocolId, 3> kAllProtocols{ProtocolId::wifi, ProtocolId::bluetooth,
                                                         ProtocolId::zigbee};

std::string_view to_string(ProtocolId p) noexcept;
/// Throws Error(BadProtocol) for anything outside the three lowercase names.
ProtocolId parse_protocol(std::string_view s);

// ---------------------------------------------------------------------------
// Units

enum class Magnitude : std::uint8_t { celsius, percent_rh, w_per_m2, mm, km_per_h, compass_16 };

std::string_view to_string(Magnitude m) noexcept;
/// Throws Error(InvalidValue).
Magnitude parse_magnitude(std::string_view s);

// ---------------------------------------------------------------------------
// Timestamps: UTC, whole seconds, "YYYY-MM-DDThh:mm:ssZ" on the wire.

using Timestamp = std::chrono::sys_seconds;

std::string format_timestamp(Timestamp t);
/// Throws Error(BadTimestamp).
Timestamp parse_timestamp(std::string_view s);

// ---------------------------------------------------------------------------

/// Ids used in topic paths and JSON: [A-Za-z0-9_.-]+, at most 64 chars.
bool is_token(std::string_view s) noexcept;

/// Position stored in micro-degrees so the 6-decimal text form round-trips.
class GpsCoordinate {
 public:
  GpsCoordinate() = default;

  /// Throws Error(InvalidValue) outside [-90,90] x [-180,180].
  static GpsCoordinate from_degrees(double latitude, double longitude);
  /// Parses "lat,lon". Throws Error(InvalidValue).
  static GpsCoordinate parse(std::string_view text);

  double latitude() const noexcept { return static_cast<double>(lat_micro_) / 1e6; }
  double longitude() const noexcept { return static_cast<double>(lon_micro_) / 1e6; }
  std::string to_string() const;

  friend bool operator==(const GpsCoordinate&, const GpsCoordinate&) = default;

 private:
  std::int32_t lat_micro_ = 0;
  std::int32_t lon_micro_ = 0;
};

struct SensorDescriptor {
  std::string sensor_id;
  Magnitude magnitude = Magnitude::celsius;
  std::string model;

  friend bool operator==(const SensorDescriptor&, const SensorDescriptor&) = default;
};

struct NodeDescriptor {
  std::string node_id;
  GpsCoordinate gps;
  std::vector<SensorDescriptor> sensors;
  std::uint32_t capture_interval = 6;  // seconds
  std::map<std::string, ProtocolId> protocol_assignment;

  const SensorDescriptor* find_sensor(std::string_view sensor_id) const noexcept;
  /// Throws Error(InvalidDescriptor) naming the first violated invariant.
  void validate() const;

  friend bool operator==(const NodeDescriptor&, const NodeDescriptor&) = default;
};

struct GatewayIdentity {
  std::string gate_id;
  std::string network_id;

  void validate() const;
};

// ---------------------------------------------------------------------------

/// The nine-field standardized measurement. Only constructible in a valid
/// state; every instance serializes.
class NormalizedReading {
 public:
  struct Fields {
    std::string node_id;
    GpsCoordinate gps;
    ProtocolId protocol = ProtocolId::wifi;
    Timestamp date{};
    std::string sensor_id;
    double value = 0.0;
    Magnitude magnitude = Magnitude::celsius;
    std::string gate_id;
    std::string network_id;
  };

  /// Throws Error(InvalidValue) on empty ids or a non-finite value.
  explicit NormalizedReading(Fields f);

  const std::string& node_id() const noexcept { return f_.node_id; }
  const GpsCoordinate& gps() const noexcept { return f_.gps; }
  ProtocolId protocol() const noexcept { return f_.protocol; }
  Timestamp date() const noexcept { return f_.date; }
  const std::string& sensor_id() const noexcept { return f_.sensor_id; }
  double value() const noexcept { return f_.value; }
  Magnitude magnitude() const noexcept { return f_.magnitude; }
  const std::string& gate_id() const noexcept { return f_.gate_id; }
  const std::string& network_id() const noexcept { return f_.network_id; }
  const Fields& fields() const noexcept { return f_; }

  friend bool operator==(const NormalizedReading& a, const NormalizedReading& b) noexcept;

 private:
  Fields f_;
};

/// Key names in their canonical serialization order.
inline constexpr std::array<std::string_view, 9> kReadingKeys{
    "node-id", "gps", "protocol", "date", "sensor-id", "value", "magnitude", "gate-id", "network-id"};

std::string serialize_reading(const NormalizedReading& r);
/// Throws Error with MissingField / TypeMismatch / BadTimestamp / BadProtocol,
/// detail = offending key.
NormalizedReading parse_reading(std::string_view json);

// ---------------------------------------------------------------------------
// Alarm rules

enum class Comparator : std::uint8_t { lt, le, gt, ge, eq };

std::string_view to_string(Comparator c) noexcept;
/// Accepts "<", "<=", "≤", ">", ">=", "≥", "=", "==". Throws Error(InvalidValue).
Comparator parse_comparator(std::string_view s);

struct AlarmRule {
  std::string rule_id;
  std::string node_pattern = "*";
  std::string sensor_pattern = "*";
  Comparator comparator = Comparator::gt;
  double threshold = 0.0;
  std::string message;

  /// Throws Error(InvalidValue).
  void validate() const;

  friend bool operator==(const AlarmRule&, const AlarmRule&) = default;
};

bool rule_matches(const AlarmRule& rule, const NormalizedReading& r) noexcept;

}  // namespace iotgw
