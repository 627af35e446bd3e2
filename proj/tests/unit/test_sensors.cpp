#include <doctest.h>

#include <cmath>
#include <set>

#include "iotgw/error.hpp"
#include "iotgw/sensors.hpp"

using namespace iotgw;
using namespace iotgw::sensors;

namespace {

Am2315Payload payload_with(std::uint8_t rh_hi, std::uint8_t rh_lo, std::uint8_t t_hi, std::uint8_t t_lo) {
  Am2315Payload p{0x03, 0x04, rh_hi, rh_lo, t_hi, t_lo, 0, 0};
  const auto crc = crc16_modbus(ByteView(p.data(), 6));
  p[6] = static_cast<std::uint8_t>(crc & 0xFF);
  p[7] = static_cast<std::uint8_t>(crc >> 8);
  return p;
}

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

TEST_CASE("crc16/modbus check value") {
  CHECK(crc16_modbus(to_bytes("123456789")) == 0x4B37);
}

TEST_CASE("am2315 decode") {
  auto r = am2315_decode(payload_with(0x01, 0x90, 0x00, 0xFA));
  CHECK(r.humidity_rh == doctest::Approx(40.0).epsilon(1e-12));
  CHECK(r.temperature_c == doctest::Approx(25.0).epsilon(1e-12));

  r = am2315_decode(payload_with(0x01, 0x90, 0x80, 0x32));
  CHECK(r.temperature_c == doctest::Approx(-5.0).epsilon(1e-12));

  CHECK(error_of([] { am2315_decode(payload_with(0x03, 0xE9, 0x00, 0x00)); }) == Errc::HumidityOutOfRange);
  CHECK_NOTHROW(am2315_decode(payload_with(0x03, 0xE8, 0x00, 0x00)));

  auto bad_fc = payload_with(0x01, 0x90, 0x00, 0xFA);
  bad_fc[0] = 0x04;
  const auto crc = crc16_modbus(ByteView(bad_fc.data(), 6));
  bad_fc[6] = static_cast<std::uint8_t>(crc & 0xFF);
  bad_fc[7] = static_cast<std::uint8_t>(crc >> 8);
  CHECK(error_of([&] { am2315_decode(bad_fc); }) == Errc::InvalidValue);
}

TEST_CASE("am2315 encode quantizes to tenths and round-trips") {
  const auto p = am2315_encode(-12.34, 55.55);
  CHECK(p[0] == 0x03);
  CHECK(p[1] == 0x04);
  const auto r = am2315_decode(p);
  CHECK(r.temperature_c == doctest::Approx(-12.3));
  CHECK(r.humidity_rh == doctest::Approx(55.6));
  CHECK(am2315_decode(am2315_encode(-0.01, 0)).temperature_c == 0.0);
}

TEST_CASE("am2315 rejects every single-byte corruption") {
  const auto good = payload_with(0x01, 0x90, 0x00, 0xFA);
  for (std::size_t pos = 0; pos < good.size(); ++pos) {
    for (int v = 0; v < 256; ++v) {
      if (v == good[pos]) continue;
      auto p = good;
      p[pos] = static_cast<std::uint8_t>(v);
      REQUIRE(error_of([&] { am2315_decode(p); }) == Errc::CrcMismatch);
    }
  }
}

TEST_CASE("davis 6450 pyranometer") {
  CHECK(davis6450_convert(0.00167) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(davis6450_convert(0.0) == 0.0);
  CHECK(davis6450_convert(0.5) == doctest::Approx(299.401).epsilon(0.001 / 299.401));
  CHECK(error_of([] { davis6450_convert(3.01); }) == Errc::VoltageOutOfRange);
  CHECK(error_of([] { davis6450_convert(-0.001); }) == Errc::VoltageOutOfRange);
  double prev = -1;
  for (int mv = 0; mv <= 3000; ++mv) {
    const double w = davis6450_convert(mv / 1000.0);
    REQUIRE(w >= prev);
    prev = w;
  }
}

TEST_CASE("rain gauge") {
  CHECK(rain_tips_to_mm(1) == doctest::Approx(0.2794).epsilon(1e-12));
  CHECK(rain_tips_to_mm(0) == 0.0);
  CHECK(rain_tips_to_mm(10) == doctest::Approx(2.794).epsilon(1e-12));
  // Exact to four decimals: the integer count of 1e-4 mm is tips * 2794.
  for (std::uint64_t tips = 0; tips < 5000; ++tips) {
    REQUIRE(std::llround(rain_tips_to_mm(tips) * 1e4) == static_cast<long long>(tips * 2794));
    if (tips) REQUIRE(rain_tips_to_mm(tips) >= rain_tips_to_mm(tips - 1));
  }
}

TEST_CASE("anemometer") {
  CHECK(anemometer_to_kmh(0, 7.0) == 0.0);
  CHECK(anemometer_to_kmh(1, 1.0) == doctest::Approx(2.4).epsilon(1e-12));
  CHECK(anemometer_to_kmh(5, 2.0) == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(error_of([] { anemometer_to_kmh(3, 0.0); }) == Errc::ZeroWindow);
  for (std::uint64_t c = 1; c < 200; c += 7)
    REQUIRE(anemometer_to_kmh(2 * c, 10.0) == doctest::Approx(2 * anemometer_to_kmh(c, 10.0)).epsilon(1e-12));
  Calibration custom;
  custom.anemometer_kmh_per_hz = 3.0;
  CHECK(anemometer_to_kmh(1, 1.0, custom) == doctest::Approx(3.0));
}

TEST_CASE("wind vane") {
  const double vref = 3.3;
  CHECK(vane_direction(0.0, vref) == Compass::N);
  CHECK(vane_direction(vref * 4 / 16, vref) == Compass::E);
  CHECK(vane_direction(vref * 8 / 16, vref) == Compass::S);
  CHECK(vane_direction(vref * 15.9 / 16, vref) == Compass::N);
  CHECK(vane_direction(vref, vref) == Compass::N);
  CHECK(to_string(Compass::NNW) == "NNW");
  CHECK(error_of([&] { vane_direction(vref + 0.01, vref); }) == Errc::VoltageOutOfRange);
  CHECK(error_of([] { vane_direction(0.1, 0.0); }) == Errc::VoltageOutOfRange);

  // Sweep: every compass point appears and steps advance by exactly one sector.
  std::set<Compass> seen;
  auto prev = vane_direction(0.0, vref);
  seen.insert(prev);
  for (int i = 1; i <= 16000; ++i) {
    const auto c = vane_direction(vref * i / 16000.0, vref);
    const int step = (static_cast<int>(c) - static_cast<int>(prev) + 16) % 16;
    REQUIRE((step == 0 || step == 1));
    seen.insert(c);
    prev = c;
  }
  CHECK(seen.size() == 16);
}

TEST_CASE("synthetic weather is deterministic and bounded") {
  for (double t = 0; t < 3600; t += 6) {
    const auto a = synth_weather(t, 42);
    const auto b = synth_weather(t, 42);
    REQUIRE(a.temperature_c == b.temperature_c);
    REQUIRE(a.humidity_rh == b.humidity_rh);
    REQUIRE(a.wind_closures == b.wind_closures);
    REQUIRE(a.humidity_rh >= 0.0);
    REQUIRE(a.humidity_rh <= 100.0);
    REQUIRE(a.irradiance_wm2 >= 0.0);
    REQUIRE(a.vane_volts >= 0.0);
    REQUIRE(a.vane_volts <= Calibration{}.vane_vref);
    REQUIRE_NOTHROW(davis6450_convert(a.irradiance_wm2 * Calibration{}.pyranometer_volts_per_wm2));
  }
}

TEST_CASE("neighbouring seeds give temperature traces within half a degree") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    double worst = 0;
    for (double t = 0; t <= 86400; t += 1) {
      const auto a = synth_weather(t, seed);
      const auto b = synth_weather(t, seed + 1);
      worst = std::max(worst, std::fabs(a.temperature_c - b.temperature_c));
      REQUIRE(std::fabs(a.humidity_rh - b.humidity_rh) <= 4.0);
    }
    CHECK(worst < 0.5);
    CHECK(worst <= 0.2 + 1e-12);
  }
}

TEST_CASE("rain accumulates monotonically") {
  std::uint64_t prev = 0;
  for (double t = 0; t < 7200; t += 6) {
    const auto tips = synth_weather(t, 1).rain_tips;
    REQUIRE(tips >= prev);
    prev = tips;
  }
  CHECK(prev > 0);
}
