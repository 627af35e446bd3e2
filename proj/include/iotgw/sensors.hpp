#pragma once

// Weather-station sensor physics: raw signal -> engineering units, plus the
// deterministic synthetic weather that drives simulated nodes.

#include <array>
#include <cstdint>
#include <string_view>

#include "iotgw/core_model.hpp"

namespace iotgw::sensors {

struct Calibration {
  double anemometer_kmh_per_hz = 2.4;    // one closure per second
  double rain_mm_per_tip = 0.2794;
  double pyranometer_volts_per_wm2 = 0.00167;
  double pyranometer_max_volts = 3.0;
  double vane_vref = 3.3;
  double anemometer_window_s = 10.0;     // closure counting window used by nodes
};

// ---------------------------------------------------------------------------
// AM2315 temperature / humidity, register-read response layout:
//   0x03 0x04 RHhi RHlo Thi Tlo CRClo CRChi

using Am2315Payload = std::array<std::uint8_t, 8>;

/// CRC-16/MODBUS (reflected 0xA001, init 0xFFFF).
std::uint16_t crc16_modbus(ByteView data) noexcept;

struct Am2315Reading {
  double temperature_c = 0.0;
  double humidity_rh = 0.0;
};

/// Quantizes to 0.1 units. Humidity is clamped to [0, 100].
Am2315Payload am2315_encode(double temperature_c, double humidity_rh);
/// Throws Error(CrcMismatch), Error(HumidityOutOfRange), or Error(InvalidValue)
/// for a wrong function code / byte count.
Am2315Reading am2315_decode(const Am2315Payload& p);

// ---------------------------------------------------------------------------

/// Davis 6450 pyranometer, volts -> W/m^2. Throws Error(VoltageOutOfRange).
double davis6450_convert(double volts, const Calibration& cal = {});

/// Tipping-bucket rain gauge, rounded to 4 decimals.
double rain_tips_to_mm(std::uint64_t tips, const Calibration& cal = {});

/// Throws Error(ZeroWindow) when window_s <= 0.
double anemometer_to_kmh(std::uint64_t closures, double window_s, const Calibration& cal = {});

enum class Compass : std::uint8_t { N, NNE, NE, ENE, E, ESE, SE, SSE, S, SSW, SW, WSW, W, WNW, NW, NNW };

std::string_view to_string(Compass c) noexcept;

/// 16 equal voltage sectors, nearest-sector rounding, sector 0 = N.
/// Throws Error(VoltageOutOfRange) unless 0 <= v <= vref and vref > 0.
Compass vane_direction(double volts, double vref);

// ---------------------------------------------------------------------------

struct WeatherSample {
  double temperature_c = 0.0;
  double humidity_rh = 0.0;
  double irradiance_wm2 = 0.0;
  std::uint64_t rain_tips = 0;      // cumulative since scenario start
  std::uint64_t wind_closures = 0;  // within Calibration::anemometer_window_s
  double vane_volts = 0.0;
};

/// Deterministic in (t, seed). Shared smooth base curves plus seeded uniform
/// noise: +/-0.1 C on temperature, +/-0.5 %RH on humidity.
WeatherSample synth_weather(double t_seconds, std::uint64_t seed, const Calibration& cal = {});

}  // namespace iotgw::sensors
