#include "iotgw/sensors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "iotgw/error.hpp"

namespace iotgw::sensors {

std::uint16_t crc16_modbus(ByteView data) noexcept {
  std::uint16_t crc = 0xFFFF;
  for (auto b : data) {
    crc ^= b;
    for (int i = 0; i < 8; ++i) crc = (crc & 1) ? static_cast<std::uint16_t>((crc >> 1) ^ 0xA001) : crc >> 1;
  }
  return crc;
}

Am2315Payload am2315_encode(double temperature_c, double humidity_rh) {
  const auto rh = static_cast<std::uint16_t>(std::clamp<long long>(std::llround(humidity_rh * 10.0), 0, 1000));
  const auto mag = static_cast<std::uint16_t>(std::min<long long>(std::llround(std::fabs(temperature_c) * 10.0), 0x7FFF));
  std::uint16_t t = mag;
  if (temperature_c < 0 && mag != 0) t |= 0x8000;

  Am2315Payload p{0x03,
                  0x04,
                  static_cast<std::uint8_t>(rh >> 8),
                  static_cast<std::uint8_t>(rh),
                  static_cast<std::uint8_t>(t >> 8),
                  static_cast<std::uint8_t>(t),
                  0,
                  0};
  const auto crc = crc16_modbus(ByteView(p.data(), 6));
  p[6] = static_cast<std::uint8_t>(crc & 0xFF);
  p[7] = static_cast<std::uint8_t>(crc >> 8);
  return p;
}

Am2315Reading am2315_decode(const Am2315Payload& p) {
  const auto crc = crc16_modbus(ByteView(p.data(), 6));
  const std::uint16_t got = static_cast<std::uint16_t>(p[6] | (p[7] << 8));
  if (crc != got) fail(Errc::CrcMismatch, "am2315");
  if (p[0] != 0x03) fail(Errc::InvalidValue, "am2315 function code");
  if (p[1] != 0x04) fail(Errc::InvalidValue, "am2315 byte count");

  const double humidity = static_cast<double>((p[2] << 8) | p[3]) / 10.0;
  if (humidity > 100.0) fail(Errc::HumidityOutOfRange, std::to_string(humidity));
  double temperature = static_cast<double>(((p[4] & 0x7F) << 8) | p[5]) / 10.0;
  if (p[4] & 0x80) temperature = -temperature;
  return {temperature, humidity};
}

double davis6450_convert(double volts, const Calibration& cal) {
  if (!(volts >= 0.0 && volts <= cal.pyranometer_max_volts))
    fail(Errc::VoltageOutOfRange, std::to_string(volts));
  return volts / cal.pyranometer_volts_per_wm2;
}

double rain_tips_to_mm(std::uint64_t tips, const Calibration& cal) {
  return std::round(static_cast<double>(tips) * cal.rain_mm_per_tip * 1e4) / 1e4;
}

double anemometer_to_kmh(std::uint64_t closures, double window_s, const Calibration& cal) {
  if (!(window_s > 0.0)) fail(Errc::ZeroWindow);
  return (static_cast<double>(closures) / window_s) * cal.anemometer_kmh_per_hz;
}

std::string_view to_string(Compass c) noexcept {
  static constexpr std::array<std::string_view, 16> kNames{"N",  "NNE", "NE", "ENE", "E",  "ESE", "SE", "SSE",
                                                           "S",  "SSW", "SW", "WSW", "W",  "WNW", "NW", "NNW"};
  return kNames[static_cast<std::size_t>(c) & 15];
}

Compass vane_direction(double volts, double vref) {
  if (!(vref > 0.0) || !(volts >= 0.0 && volts <= vref))
    fail(Errc::VoltageOutOfRange, std::to_string(volts) + " of " + std::to_string(vref));
  const auto sector = static_cast<long long>(std::floor((volts / vref) * 16.0 + 0.5));
  return static_cast<Compass>(sector % 16);
}

// ---------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform in [-1, 1], keyed by seed, channel and millisecond time.
double noise(std::uint64_t seed, std::uint64_t channel, double t) noexcept {
  const auto ms = static_cast<std::uint64_t>(std::llround(t * 1000.0));
  const auto h = splitmix64(splitmix64(splitmix64(seed) ^ channel) ^ ms);
  return static_cast<double>(h >> 11) / static_cast<double>(1ULL << 52) - 1.0;
}

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wave(double t, double period, double phase = 0.0) { return std::sin(kTwoPi * t / period + phase); }

}  // namespace

WeatherSample synth_weather(double t, std::uint64_t seed, const Calibration& cal) {
  WeatherSample s;
  // Base curves are seed-independent so co-located nodes track each other.
  const double temp_base = 21.0 + 3.0 * wave(t, 86400.0, -std::numbers::pi / 2) + 0.6 * wave(t, 1800.0) +
                           0.25 * wave(t, 420.0, 1.0);
  s.temperature_c = temp_base + 0.1 * noise(seed, 1, t);

  const double rh_base = 62.0 - 2.5 * (temp_base - 21.0) + 1.5 * wave(t, 900.0, 0.5);
  s.humidity_rh = std::clamp(rh_base + 0.5 * noise(seed, 2, t), 0.0, 100.0);

  const double max_irradiance = cal.pyranometer_max_volts / cal.pyranometer_volts_per_wm2;
  const double irr_base = 450.0 + 150.0 * wave(t, 600.0) + 40.0 * wave(t, 97.0, 2.0);
  s.irradiance_wm2 = std::clamp(irr_base + 5.0 * noise(seed, 3, t), 0.0, max_irradiance);

  s.rain_tips = static_cast<std::uint64_t>(std::floor(0.02 * t));

  const double speed_kmh = std::max(0.0, 8.0 + 4.0 * wave(t, 300.0) + 2.0 * wave(t, 47.0, 0.3));
  const double closures = speed_kmh / cal.anemometer_kmh_per_hz * cal.anemometer_window_s;
  s.wind_closures = static_cast<std::uint64_t>(std::max(0.0, std::round(closures + noise(seed, 4, t))));

  double direction = 200.0 + 40.0 * wave(t, 600.0, 1.2) + 10.0 * noise(seed, 5, t);
  direction = std::fmod(std::fmod(direction, 360.0) + 360.0, 360.0);
  s.vane_volts = direction / 360.0 * cal.vane_vref;
  return s;
}

}  // namespace iotgw::sensors
