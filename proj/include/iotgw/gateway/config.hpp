#pragma once

#include <filesystem>
#include <string>

#include "iotgw/clock.hpp"
#include "iotgw/core_model.hpp"
#include "iotgw/json_codec.hpp"

namespace iotgw::gateway {

/// Gateway settings, read from a single JSON document. Every key is optional
/// except where noted; unknown keys are rejected so typos surface.
struct GatewayConfig {
  GatewayIdentity identity{"gw1", "net1"};
  std::string listen_host = "127.0.0.1";
  int wifi_port = 5001;
  int bluetooth_port = 5002;
  int zigbee_port = 5003;
  int broker_port = 1883;
  /// host:port of the cloud broker; empty disables the uplink.
  std::string cloud_broker;
  int api_port = 8080;
  std::string api_token;  // required
  Millis mqtt_retry_interval{2000};
  int mqtt_retry_budget = 5;
  std::uint32_t throughput_window_s = 6;
  std::uint32_t stats_period_s = 10;
  std::size_t uplink_buffer = 10'000;
  std::filesystem::path readings_log = "readings.jsonl";
  std::uint64_t readings_log_max_bytes = 1ull << 30;

  int port_for(ProtocolId p) const;
};

/// Throws Error(InvalidConfig) naming the offending key.
GatewayConfig config_from_json(const Json& j);
/// Throws Error(InvalidConfig) if the file is missing or malformed.
GatewayConfig load_config(const std::filesystem::path& path);
Json to_json(const GatewayConfig& c);

}  // namespace iotgw::gateway
