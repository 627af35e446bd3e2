#include "iotgw/gateway/config.hpp"

#include <fstream>
#include <set>

#include "iotgw/error.hpp"

namespace iotgw::gateway {

int GatewayConfig::port_for(ProtocolId p) const {
  switch (p) {
    case ProtocolId::wifi: return wifi_port;
    case ProtocolId::bluetooth: return bluetooth_port;
    case ProtocolId::zigbee: return zigbee_port;
  }
  return 0;
}

namespace {

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(Errc::InvalidConfig, key);
  }
}

int get_port(const Json& j, const char* key) {
  const auto v = get<int>(j, key);
  if (v < 0 || v > 65535) fail(Errc::InvalidConfig, key);
  return v;
}

std::uint32_t get_positive(const Json& j, const char* key) {
  if (!j.at(key).is_number_integer()) fail(Errc::InvalidConfig, key);
  const auto v = j.at(key).get<std::int64_t>();
  if (v < 1 || v > 86400 * 365) fail(Errc::InvalidConfig, key);
  return static_cast<std::uint32_t>(v);
}

}  // namespace

GatewayConfig config_from_json(const Json& j) {
  if (!j.is_object()) fail(Errc::InvalidConfig, "document is not an object");
  static const std::set<std::string> kKeys = {
      "gate_id",        "network_id",          "listen_host",      "wifi_port",     "bluetooth_port",
      "zigbee_port",    "broker_port",         "cloud_broker",     "api_port",      "api_token",
      "mqtt_retry_ms",  "mqtt_retry_budget",   "throughput_window_s", "stats_period_s", "uplink_buffer",
      "readings_log",   "readings_log_max_bytes"};
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) fail(Errc::InvalidConfig, key);
  }

  GatewayConfig c;
  if (j.contains("gate_id")) c.identity.gate_id = get<std::string>(j, "gate_id");
  if (j.contains("network_id")) c.identity.network_id = get<std::string>(j, "network_id");
  if (!is_token(c.identity.gate_id)) fail(Errc::InvalidConfig, "gate_id");
  if (!is_token(c.identity.network_id)) fail(Errc::InvalidConfig, "network_id");
  if (j.contains("listen_host")) c.listen_host = get<std::string>(j, "listen_host");
  if (j.contains("wifi_port")) c.wifi_port = get_port(j, "wifi_port");
  if (j.contains("bluetooth_port")) c.bluetooth_port = get_port(j, "bluetooth_port");
  if (j.contains("zigbee_port")) c.zigbee_port = get_port(j, "zigbee_port");
  if (j.contains("broker_port")) c.broker_port = get_port(j, "broker_port");
  if (j.contains("cloud_broker")) c.cloud_broker = get<std::string>(j, "cloud_broker");
  if (j.contains("api_port")) c.api_port = get_port(j, "api_port");
  if (!j.contains("api_token")) fail(Errc::InvalidConfig, "api_token");
  c.api_token = get<std::string>(j, "api_token");
  if (c.api_token.empty()) fail(Errc::InvalidConfig, "api_token");
  if (j.contains("mqtt_retry_ms")) c.mqtt_retry_interval = Millis{get_positive(j, "mqtt_retry_ms")};
  if (j.contains("mqtt_retry_budget")) c.mqtt_retry_budget = static_cast<int>(get_positive(j, "mqtt_retry_budget"));
  if (j.contains("throughput_window_s")) c.throughput_window_s = get_positive(j, "throughput_window_s");
  if (j.contains("stats_period_s")) c.stats_period_s = get_positive(j, "stats_period_s");
  if (j.contains("uplink_buffer")) c.uplink_buffer = get_positive(j, "uplink_buffer");
  if (j.contains("readings_log")) c.readings_log = get<std::string>(j, "readings_log");
  if (j.contains("readings_log_max_bytes")) c.readings_log_max_bytes = get<std::uint64_t>(j, "readings_log_max_bytes");
  return c;
}

GatewayConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::InvalidConfig, "cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::InvalidConfig, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

Json to_json(const GatewayConfig& c) {
  return Json{{"gate_id", c.identity.gate_id},
              {"network_id", c.identity.network_id},
              {"listen_host", c.listen_host},
              {"wifi_port", c.wifi_port},
              {"bluetooth_port", c.bluetooth_port},
              {"zigbee_port", c.zigbee_port},
              {"broker_port", c.broker_port},
              {"cloud_broker", c.cloud_broker},
              {"api_port", c.api_port},
              {"api_token", c.api_token},
              {"mqtt_retry_ms", c.mqtt_retry_interval.count()},
              {"mqtt_retry_budget", c.mqtt_retry_budget},
              {"throughput_window_s", c.throughput_window_s},
              {"stats_period_s", c.stats_period_s},
              {"uplink_buffer", c.uplink_buffer},
              {"readings_log", c.readings_log.string()},
              {"readings_log_max_bytes", c.readings_log_max_bytes}};
}

}  // namespace iotgw::gateway
