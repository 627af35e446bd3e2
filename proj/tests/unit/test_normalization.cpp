#include <doctest.h>

#include "iotgw/error.hpp"
#include "iotgw/json_codec.hpp"
#include "iotgw/normalization.hpp"
#include "support/generators.hpp"

using namespace iotgw;
using namespace iotgw::normalization;
using transport::RawFrame;

namespace {

RawFrame frame_of(std::string_view text, ProtocolId kind = ProtocolId::wifi) { return RawFrame(kind, to_bytes(text)); }

Error error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected iotgw::Error");
  return Error(Errc::InvalidValue, "");
}

const GatewayIdentity kGw{"gw1", "net1"};

}  // namespace

TEST_CASE("extract_payload parses the compact record") {
  const auto rec = extract_payload(frame_of(R"({"n":"n1","s":"temp","v":25.3,"t":"2020-01-01T00:00:06Z"})"));
  CHECK(rec.node_id == "n1");
  CHECK(rec.sensor_id == "temp");
  CHECK(rec.value == 25.3);
  CHECK(rec.capture_time == parse_timestamp("2020-01-01T00:00:06Z"));
}

TEST_CASE("extract_payload rejects malformed records") {
  CHECK(error_of([] { extract_payload(frame_of(R"({"n":"n1","s":"temp","t":"2020-01-01T00:00:06Z"})")); }).code() ==
        Errc::MalformedRecord);
  const auto e =
      error_of([] { extract_payload(frame_of(R"({"n":"n1","s":"temp","v":1,"t":"2020-01-01T00:00:06Z","x":0})")); });
  CHECK(e.code() == Errc::UnknownKey);
  CHECK(e.detail() == "x");
  CHECK(error_of([] { extract_payload(frame_of(R"({"n":"n1","s":"temp","v":"1","t":"2020-01-01T00:00:06Z"})")); })
            .code() == Errc::MalformedRecord);
  CHECK(error_of([] { extract_payload(frame_of(R"({"n":"n1","s":"temp","v":1,"t":"yesterday"})")); }).code() ==
        Errc::MalformedRecord);
  CHECK(error_of([] { extract_payload(frame_of("not json")); }).code() == Errc::MalformedRecord);
  CHECK(error_of([] { extract_payload(frame_of("[1,2]")); }).code() == Errc::MalformedRecord);
  CHECK(error_of([] { extract_payload(frame_of(R"({"n":" ","s":"","v":1,"t":"2020-01-01T00:00:06Z"})")); }).code() ==
        Errc::MalformedRecord);
}

TEST_CASE("property: extract_payload inverts node-side serialization") {
  testing::Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    NodeUplinkRecord rec{testing::random_token(rng), testing::random_token(rng), testing::random_value(rng),
                         Timestamp{std::chrono::seconds{std::uniform_int_distribution<std::int64_t>(0, 4e9)(rng)}}};
    if (rec.sensor_id == kAnnounceSensor) continue;
    const auto kind = kAllProtocols[static_cast<std::size_t>(i % 3)];
    REQUIRE(extract_payload(RawFrame(kind, to_bytes(serialize_record(rec)))) == rec);
  }
}

TEST_CASE("announce records carry a descriptor") {
  const auto desc = testing::weather_node("n1");
  const auto t = parse_timestamp("2020-01-01T00:00:00Z");
  const auto up = extract_uplink(frame_of(serialize_announce(desc, t), ProtocolId::bluetooth));
  REQUIRE(std::holds_alternative<NodeAnnounce>(up));
  CHECK(std::get<NodeAnnounce>(up).descriptor == desc);
  CHECK(std::get<NodeAnnounce>(up).capture_time == t);

  CHECK(error_of([&] { extract_payload(frame_of(serialize_announce(desc, t))); }).code() == Errc::MalformedRecord);

  auto bad = testing::weather_node("n1");
  bad.capture_interval = 0;
  Json j = Json::parse(serialize_announce(desc, t));
  j["v"]["capture_interval"] = 0;
  CHECK(error_of([&] { extract_uplink(frame_of(j.dump())); }).code() == Errc::MalformedRecord);

  j = Json::parse(serialize_announce(desc, t));
  j["n"] = "other";
  CHECK(error_of([&] { extract_uplink(frame_of(j.dump())); }).code() == Errc::MalformedRecord);
}

TEST_CASE("build_normalized maps every field from its source") {
  const auto node = testing::weather_node("n1", ProtocolId::zigbee);
  const NodeUplinkRecord rec{"n1", "temp", 25.3, parse_timestamp("2020-01-01T00:00:06Z")};
  const auto r = build_normalized(rec, ProtocolId::wifi, node, kGw);
  CHECK(r.node_id() == "n1");
  CHECK(r.sensor_id() == "temp");
  CHECK(r.value() == 25.3);
  CHECK(r.date() == rec.capture_time);
  CHECK(r.gps() == node.gps);
  // Arrival truth, not the configured zigbee assignment.
  CHECK(r.protocol() == ProtocolId::wifi);
  CHECK(r.magnitude() == Magnitude::celsius);
  CHECK(r.gate_id() == "gw1");
  CHECK(r.network_id() == "net1");
}

TEST_CASE("build_normalized errors") {
  const auto node = testing::weather_node("n1");
  const auto t = parse_timestamp("2020-01-01T00:00:06Z");
  auto e = error_of([&] { build_normalized({"n1", "xyz", 1.0, t}, ProtocolId::wifi, node, kGw); });
  CHECK(e.code() == Errc::UnknownSensor);
  CHECK(e.detail() == "xyz");
  e = error_of([&] { build_normalized({"n2", "temp", 1.0, t}, ProtocolId::wifi, node, kGw); });
  CHECK(e.code() == Errc::NodeMismatch);
}

TEST_CASE("property: protocol field always equals the arrival transport") {
  testing::Rng rng(3);
  const auto node = testing::weather_node("n1", ProtocolId::bluetooth);
  for (int i = 0; i < 300; ++i) {
    const auto arrival = kAllProtocols[std::uniform_int_distribution<int>(0, 2)(rng)];
    const auto& sensor = node.sensors[static_cast<std::size_t>(i) % node.sensors.size()];
    const NodeUplinkRecord rec{"n1", sensor.sensor_id, testing::random_value(rng), Timestamp{}};
    const auto r = build_normalized(rec, arrival, node, kGw);
    REQUIRE(r.protocol() == arrival);
    REQUIRE(r.magnitude() == sensor.magnitude);
  }
}
