#include "iotgw/json_codec.hpp"

#include <cmath>

#include "iotgw/error.hpp"

namespace iotgw {

Json to_json(const SensorDescriptor& s) {
  Json j;
  j["sensor_id"] = s.sensor_id;
  j["magnitude"] = to_string(s.magnitude);
  j["model"] = s.model;
  return j;
}

Json to_json(const NodeDescriptor& d) {
  Json j;
  j["node_id"] = d.node_id;
  j["gps"] = d.gps.to_string();
  j["capture_interval"] = d.capture_interval;
  j["sensors"] = Json::array();
  for (const auto& s : d.sensors) j["sensors"].push_back(to_json(s));
  j["protocol_assignment"] = Json::object();
  for (const auto& [sensor, proto] : d.protocol_assignment)
    j["protocol_assignment"][sensor] = to_string(proto);
  return j;
}

Json to_json(const AlarmRule& r) {
  Json j;
  j["rule_id"] = r.rule_id;
  j["node"] = r.node_pattern;
  j["sensor"] = r.sensor_pattern;
  j["comparator"] = to_string(r.comparator);
  j["threshold"] = r.threshold;
  j["message"] = r.message;
  return j;
}

namespace {

[[noreturn]] void bad(Errc code, std::string_view key, std::string_view why) {
  fail(code, std::string(key) + ": " + std::string(why));
}

const Json& field(const Json& j, std::string_view key, Errc code) {
  if (!j.is_object()) bad(code, "<document>", "expected an object");
  auto it = j.find(key);
  if (it == j.end()) bad(code, key, "missing");
  return *it;
}

std::string string_field(const Json& j, std::string_view key, Errc code) {
  const Json& v = field(j, key, code);
  if (!v.is_string()) bad(code, key, "expected a string");
  return v.get<std::string>();
}

}  // namespace

SensorDescriptor sensor_from_json(const Json& j) {
  constexpr auto code = Errc::InvalidDescriptor;
  SensorDescriptor s;
  s.sensor_id = string_field(j, "sensor_id", code);
  try {
    s.magnitude = parse_magnitude(string_field(j, "magnitude", code));
  } catch (const Error& e) {
    if (e.code() != Errc::InvalidValue) throw;
    bad(code, "magnitude", e.detail());
  }
  if (j.contains("model")) s.model = string_field(j, "model", code);
  return s;
}

NodeDescriptor descriptor_from_json(const Json& j) {
  constexpr auto code = Errc::InvalidDescriptor;
  NodeDescriptor d;
  d.node_id = string_field(j, "node_id", code);
  try {
    d.gps = GpsCoordinate::parse(string_field(j, "gps", code));
  } catch (const Error& e) {
    if (e.code() != Errc::InvalidValue) throw;
    bad(code, "gps", e.detail());
  }
  const Json& interval = field(j, "capture_interval", code);
  if (!interval.is_number_integer() || interval.get<std::int64_t>() < 1 ||
      interval.get<std::int64_t>() > 86400)
    bad(code, "capture_interval", "expected an integer number of seconds in [1, 86400]");
  d.capture_interval = interval.get<std::uint32_t>();

  const Json& sensors = field(j, "sensors", code);
  if (!sensors.is_array()) bad(code, "sensors", "expected an array");
  for (const auto& s : sensors) d.sensors.push_back(sensor_from_json(s));

  if (j.contains("protocol_assignment")) {
    const Json& pa = j.at("protocol_assignment");
    if (!pa.is_object()) bad(code, "protocol_assignment", "expected an object");
    for (const auto& [sensor, proto] : pa.items()) {
      if (!proto.is_string()) bad(code, "protocol_assignment", "expected protocol names");
      try {
        d.protocol_assignment[sensor] = parse_protocol(proto.get<std::string>());
      } catch (const Error&) {
        bad(code, "protocol_assignment", "unknown protocol '" + proto.get<std::string>() + "'");
      }
    }
  }
  d.validate();
  return d;
}

AlarmRule rule_from_json(const Json& j) {
  constexpr auto code = Errc::InvalidValue;
  AlarmRule r;
  r.rule_id = string_field(j, "rule_id", code);
  if (j.contains("node")) r.node_pattern = string_field(j, "node", code);
  if (j.contains("sensor")) r.sensor_pattern = string_field(j, "sensor", code);
  r.comparator = parse_comparator(string_field(j, "comparator", code));
  const Json& threshold = field(j, "threshold", code);
  if (!threshold.is_number()) bad(code, "threshold", "expected a number");
  r.threshold = threshold.get<double>();
  if (j.contains("message")) r.message = string_field(j, "message", code);
  r.validate();
  return r;
}

}  // namespace iotgw
