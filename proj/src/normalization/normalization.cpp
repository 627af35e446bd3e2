#include "iotgw/normalization.hpp"

#include <cmath>

#include "iotgw/error.hpp"
#include "iotgw/json_codec.hpp"

namespace iotgw::normalization {

std::string serialize_record(const NodeUplinkRecord& rec) {
  Json j;
  j["n"] = rec.node_id;
  j["s"] = rec.sensor_id;
  j["v"] = rec.value;
  j["t"] = format_timestamp(rec.capture_time);
  return j.dump();
}

std::string serialize_announce(const NodeDescriptor& desc, Timestamp at) {
  Json j;
  j["n"] = desc.node_id;
  j["s"] = kAnnounceSensor;
  j["v"] = to_json(desc);
  j["t"] = format_timestamp(at);
  return j.dump();
}

namespace {

struct Envelope {
  std::string node_id;
  std::string sensor_id;
  Json value;
  Timestamp time;
};

Envelope parse_envelope(const transport::RawFrame& frame) {
  const auto& p = frame.payload();
  Json j = Json::parse(p.begin(), p.end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) fail(Errc::MalformedRecord, "payload is not JSON");
  if (!j.is_object()) fail(Errc::MalformedRecord, "payload is not an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "n" && key != "s" && key != "v" && key != "t") fail(Errc::UnknownKey, key);
  }
  for (const char* key : {"n", "s", "v", "t"}) {
    if (!j.contains(key)) fail(Errc::MalformedRecord, std::string("missing \"") + key + "\"");
  }
  auto nonempty_string = [&](const char* key) {
    const auto& v = j.at(key);
    if (!v.is_string() || v.get_ref<const std::string&>().empty())
      fail(Errc::MalformedRecord, std::string("\"") + key + "\" must be a nonempty string");
    return v.get<std::string>();
  };
  Envelope e;
  e.node_id = nonempty_string("n");
  e.sensor_id = nonempty_string("s");
  try {
    e.time = parse_timestamp(nonempty_string("t"));
  } catch (const Error& err) {
    if (err.code() != Errc::BadTimestamp) throw;
    fail(Errc::MalformedRecord, "bad \"t\": " + err.detail());
  }
  e.value = std::move(j.at("v"));
  return e;
}

NodeUplinkRecord to_record(Envelope e) {
  if (!e.value.is_number()) fail(Errc::MalformedRecord, "\"v\" must be a number");
  const double v = e.value.get<double>();
  if (!std::isfinite(v)) fail(Errc::MalformedRecord, "\"v\" must be finite");
  return {std::move(e.node_id), std::move(e.sensor_id), v, e.time};
}

}  // namespace

NodeUplinkRecord extract_payload(const transport::RawFrame& frame) {
  auto e = parse_envelope(frame);
  if (e.sensor_id == kAnnounceSensor) fail(Errc::MalformedRecord, "announce record where a reading was expected");
  return to_record(std::move(e));
}

Uplink extract_uplink(const transport::RawFrame& frame) {
  auto e = parse_envelope(frame);
  if (e.sensor_id != kAnnounceSensor) return to_record(std::move(e));

  NodeAnnounce a;
  try {
    a.descriptor = descriptor_from_json(e.value);
  } catch (const Error& err) {
    fail(Errc::MalformedRecord, "announce: " + err.detail());
  }
  if (a.descriptor.node_id != e.node_id) fail(Errc::MalformedRecord, "announce node id differs from envelope");
  a.capture_time = e.time;
  return a;
}

NormalizedReading build_normalized(const NodeUplinkRecord& rec, ProtocolId arrival, const NodeDescriptor& node,
                                   const GatewayIdentity& gw) {
  if (rec.node_id != node.node_id) fail(Errc::NodeMismatch, rec.node_id + " vs " + node.node_id);
  const auto* sensor = node.find_sensor(rec.sensor_id);
  if (!sensor) fail(Errc::UnknownSensor, rec.sensor_id);

  NormalizedReading::Fields f;
  f.node_id = rec.node_id;
  f.gps = node.gps;
  f.protocol = arrival;
  f.date = rec.capture_time;
  f.sensor_id = rec.sensor_id;
  f.value = rec.value;
  f.magnitude = sensor->magnitude;
  f.gate_id = gw.gate_id;
  f.network_id = gw.network_id;
  return NormalizedReading(std::move(f));
}

}  // namespace iotgw::normalization
