#include <doctest.h>

#include "iotgw/error.hpp"
#include "iotgw/transport/codec.hpp"
#include "support/generators.hpp"

using namespace iotgw;
using namespace iotgw::transport;

namespace {

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected iotgw::Error");
  return Errc::InvalidValue;
}

}  // namespace

TEST_CASE("wifi framing") {
  CHECK(wifi_encode(Bytes{0x7B, 0x7D}) == Bytes{0x00, 0x00, 0x00, 0x02, 0x7B, 0x7D});
  CHECK(wifi_encode(Bytes{0xAA}) == Bytes{0x00, 0x00, 0x00, 0x01, 0xAA});
  CHECK(error_of([] { wifi_encode(Bytes{}); }) == Errc::EmptyPayload);
  CHECK(error_of([] { wifi_encode(Bytes(kMaxPayload + 1, 1)); }) == Errc::PayloadTooLarge);

  const auto wire = wifi_encode(Bytes{1, 2, 3});
  auto r = wifi_decode(wire);
  REQUIRE(r.status == DecodeStatus::frame);
  CHECK(r.frame->payload() == Bytes{1, 2, 3});
  CHECK(r.frame->kind() == ProtocolId::wifi);
  CHECK(r.consumed == 7);

  r = wifi_decode(Bytes{0x00, 0x00});
  CHECK(r.status == DecodeStatus::need_more_data);
  CHECK(r.consumed == 0);

  r = wifi_decode(Bytes{0x00, 0x00, 0x00, 0x00, 0x55});
  CHECK(r.status == DecodeStatus::error);
  CHECK(r.error == FrameError::length_out_of_range);

  r = wifi_decode(Bytes{0x00, 0x01, 0x00, 0x00});
  CHECK(r.error == FrameError::length_out_of_range);
}

TEST_CASE("bluetooth SLIP framing") {
  CHECK(bt_encode(Bytes{0x01, 0x02}) == Bytes{0xC0, 0x01, 0x02, 0xC0});
  CHECK(bt_encode(Bytes{0xC0}) == Bytes{0xC0, 0xDB, 0xDC, 0xC0});
  CHECK(bt_encode(Bytes{0xDB, 0x05}) == Bytes{0xC0, 0xDB, 0xDD, 0x05, 0xC0});
  CHECK(error_of([] { bt_encode(Bytes{}); }) == Errc::EmptyPayload);

  auto r = bt_decode(Bytes{0xC0, 0xDB, 0xDC, 0xDB, 0xDD, 0xC0});
  REQUIRE(r.status == DecodeStatus::frame);
  CHECK(r.frame->payload() == Bytes{0xC0, 0xDB});
  CHECK(r.consumed == 6);

  SUBCASE("no closing delimiter yet") {
    r = bt_decode(Bytes{0xC0, 0x01, 0x02});
    CHECK(r.status == DecodeStatus::need_more_data);
    CHECK(r.consumed == 0);
  }
  SUBCASE("bad escape drops the frame") {
    r = bt_decode(Bytes{0xC0, 0xDB, 0x01, 0xC0, 0xC0, 0x09, 0xC0});
    CHECK(r.status == DecodeStatus::error);
    CHECK(r.error == FrameError::bad_escape);
    CHECK(r.consumed == 4);
    r = bt_decode(Bytes{0xC0, 0xDB, 0xC0});
    CHECK(r.error == FrameError::bad_escape);
  }
  SUBCASE("adjacent delimiters are keep-alives") {
    Bytes buf{0xC0, 0xC0, 0xC0, 0x42, 0xC0};
    r = bt_decode(buf);
    CHECK(r.status == DecodeStatus::skip);
    CHECK(r.consumed == 1);
    buf.erase(buf.begin());
    r = bt_decode(buf);
    CHECK(r.status == DecodeStatus::skip);
    buf.erase(buf.begin());
    r = bt_decode(buf);
    REQUIRE(r.status == DecodeStatus::frame);
    CHECK(r.frame->payload() == Bytes{0x42});
  }
  SUBCASE("frames sharing a delimiter") {
    Bytes buf{0xC0, 0x01, 0xC0, 0x02, 0xC0};
    r = bt_decode(buf);
    REQUIRE(r.status == DecodeStatus::frame);
    buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(r.consumed));
    r = bt_decode(buf);
    REQUIRE(r.status == DecodeStatus::frame);
    CHECK(r.frame->payload() == Bytes{0x02});
  }
}

TEST_CASE("zigbee API framing") {
  CHECK(zb_encode(Bytes{0x10, 0x01}) == Bytes{0x7E, 0x00, 0x02, 0x10, 0x01, 0xEE});
  CHECK(zb_checksum(Bytes{0xFF}) == 0x00);
  CHECK(zb_encode(Bytes{0xFF}) == Bytes{0x7E, 0x00, 0x01, 0xFF, 0x00});
  CHECK(error_of([] { zb_encode(Bytes{}); }) == Errc::EmptyPayload);
  CHECK(error_of([] { zb_encode(Bytes(kMaxPayload + 1, 0)); }) == Errc::PayloadTooLarge);

  SUBCASE("garbage before the start byte is skipped") {
    Bytes wire{0x11, 0x22, 0x33};
    const auto frame = zb_encode(Bytes{0x10, 0x01});
    wire.insert(wire.end(), frame.begin(), frame.end());
    const auto r = zb_decode(wire);
    REQUIRE(r.status == DecodeStatus::frame);
    CHECK(r.frame->payload() == Bytes{0x10, 0x01});
    CHECK(r.consumed == wire.size());
  }
  SUBCASE("pure garbage is dropped") {
    const auto r = zb_decode(Bytes{0x01, 0x02});
    CHECK(r.status == DecodeStatus::skip);
    CHECK(r.consumed == 2);
  }
  SUBCASE("checksum mismatch resumes after the bad start byte") {
    auto wire = zb_encode(Bytes{0x10, 0x01});
    wire[3] = 0x11;
    const auto r = zb_decode(wire);
    CHECK(r.status == DecodeStatus::error);
    CHECK(r.error == FrameError::checksum_mismatch);
    CHECK(r.expected_checksum == 0xED);
    CHECK(r.got_checksum == 0xEE);
    CHECK(r.consumed == 1);
  }
  SUBCASE("declared length zero") {
    const auto r = zb_decode(Bytes{0x7E, 0x00, 0x00, 0xFF});
    CHECK(r.error == FrameError::length_out_of_range);
  }
}

TEST_CASE("zigbee: every single-byte payload corruption is detected") {
  Bytes payload(16);
  for (std::size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<std::uint8_t>(i * 17 + 3);
  const auto wire = zb_encode(payload);
  int mismatches = 0;
  for (std::size_t pos = 0; pos < payload.size(); ++pos) {
    for (int v = 0; v < 256; ++v) {
      if (v == payload[pos]) continue;
      auto corrupted = wire;
      corrupted[3 + pos] = static_cast<std::uint8_t>(v);
      const auto r = zb_decode(corrupted);
      REQUIRE(r.status == DecodeStatus::error);
      REQUIRE(r.error == FrameError::checksum_mismatch);
      ++mismatches;
    }
  }
  CHECK(mismatches == 16 * 255);
}

TEST_CASE("property: decoders never consume on any strict prefix of a frame") {
  testing::Rng rng(7);
  for (auto kind : kAllProtocols) {
    for (int i = 0; i < 50; ++i) {
      const auto payload = testing::random_payload(rng, 1, 200);
      const auto wire = encode_frame(kind, payload);
      for (std::size_t n = 0; n < wire.size(); ++n) {
        const auto r = decode_frame(kind, ByteView(wire.data(), n));
        REQUIRE(r.status == DecodeStatus::need_more_data);
        REQUIRE(r.consumed == 0);
      }
      const auto r = decode_frame(kind, wire);
      REQUIRE(r.status == DecodeStatus::frame);
      REQUIRE(r.frame->payload() == payload);
      REQUIRE(r.consumed == wire.size());
    }
  }
}

TEST_CASE("property: random streams decode identically under random chunking") {
  testing::Rng rng(2024);
  for (auto kind : kAllProtocols) {
    CAPTURE(to_string(kind));
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<Bytes> payloads;
      Bytes wire;
      const int frames = std::uniform_int_distribution<int>(1, 12)(rng);
      for (int f = 0; f < frames; ++f) {
        payloads.push_back(testing::random_payload(rng, 1, testing::random_length(rng, 2048)));
        const auto enc = encode_frame(kind, payloads.back());
        wire.insert(wire.end(), enc.begin(), enc.end());
      }
      REQUIRE(testing::decode_chunked(kind, wire, rng, 97) == payloads);
    }
  }
}

TEST_CASE("maximum payload round-trips on every codec") {
  testing::Rng rng(5);
  const auto payload = testing::random_payload(rng, kMaxPayload, kMaxPayload);
  for (auto kind : kAllProtocols) {
    const auto r = decode_frame(kind, encode_frame(kind, payload));
    REQUIRE(r.status == DecodeStatus::frame);
    CHECK(r.frame->payload() == payload);
  }
}

TEST_CASE("RawFrame bounds") {
  CHECK(error_of([] { RawFrame(ProtocolId::wifi, Bytes{}); }) == Errc::EmptyPayload);
  CHECK(error_of([] { RawFrame(ProtocolId::wifi, Bytes(kMaxPayload + 1, 0)); }) == Errc::PayloadTooLarge);
  CHECK_NOTHROW(RawFrame(ProtocolId::zigbee, Bytes(kMaxPayload, 0)));
}
