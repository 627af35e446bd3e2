#pragma once

// Hand-rolled generators for property tests.

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "iotgw/core_model.hpp"

namespace iotgw::testing {

using Rng = std::mt19937_64;

inline std::string random_token(Rng& rng, std::size_t max_len = 12) {
  static constexpr std::string_view kAlphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-.";
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, kAlphabet.size() - 1);
  std::string s(len(rng), 'x');
  for (auto& c : s) c = kAlphabet[pick(rng)];
  return s;
}

/// Payload bytes biased toward the framing specials (0xC0, 0xDB, 0xDC, 0xDD, 0x7E).
inline Bytes random_payload(Rng& rng, std::size_t min_len, std::size_t max_len) {
  static constexpr std::uint8_t kSpecials[] = {0xC0, 0xDB, 0xDC, 0xDD, 0x7E, 0x00, 0xFF};
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_int_distribution<int> byte(0, 255);
  std::uniform_int_distribution<int> special(0, 9);
  Bytes b(len(rng));
  for (auto& x : b) {
    const int roll = special(rng);
    x = roll < 7 ? kSpecials[roll] : static_cast<std::uint8_t>(byte(rng));
  }
  return b;
}

/// Length distribution that covers both tiny and near-maximal payloads
/// without making every case 64 KiB.
inline std::size_t random_length(Rng& rng, std::size_t max_len) {
  std::uniform_int_distribution<int> bucket(0, 9);
  const int b = bucket(rng);
  if (b < 6) return std::uniform_int_distribution<std::size_t>(1, 64)(rng);
  if (b < 9) return std::uniform_int_distribution<std::size_t>(1, 4096)(rng);
  return std::uniform_int_distribution<std::size_t>(1, max_len)(rng);
}

inline double random_value(Rng& rng) {
  std::uniform_int_distribution<int> kind(0, 3);
  switch (kind(rng)) {
    case 0: return static_cast<double>(std::uniform_int_distribution<int>(-100, 1000)(rng));
    case 1: return std::round(std::uniform_real_distribution<double>(-50, 2000)(rng) * 10.0) / 10.0;
    case 2: return std::uniform_real_distribution<double>(-1e6, 1e6)(rng);
    default: return std::uniform_real_distribution<double>(-1e-3, 1e-3)(rng);
  }
}

inline NormalizedReading random_reading(Rng& rng) {
  NormalizedReading::Fields f;
  f.node_id = random_token(rng);
  f.gps = GpsCoordinate::from_degrees(std::uniform_real_distribution<double>(-90, 90)(rng),
                                      std::uniform_real_distribution<double>(-180, 180)(rng));
  f.protocol = kAllProtocols[std::uniform_int_distribution<int>(0, 2)(rng)];
  f.date = Timestamp{std::chrono::seconds{std::uniform_int_distribution<std::int64_t>(0, 4102444800)(rng)}};
  f.sensor_id = random_token(rng);
  f.value = random_value(rng);
  f.magnitude = static_cast<Magnitude>(std::uniform_int_distribution<int>(0, 5)(rng));
  f.gate_id = random_token(rng);
  f.network_id = random_token(rng);
  return NormalizedReading(std::move(f));
}

inline NodeDescriptor weather_node(const std::string& id, ProtocolId all_on = ProtocolId::wifi) {
  NodeDescriptor d;
  d.node_id = id;
  d.gps = GpsCoordinate::from_degrees(4.6097, -74.0817);
  d.capture_interval = 6;
  d.sensors = {
      {"temp", Magnitude::celsius, "AM2315"},      {"humidity", Magnitude::percent_rh, "AM2315"},
      {"radiation", Magnitude::w_per_m2, "Davis6450"}, {"rain", Magnitude::mm, "SEN-08942"},
      {"wind_speed", Magnitude::km_per_h, "SEN-08942"}, {"wind_dir", Magnitude::compass_16, "SEN-08942"},
  };
  for (const auto& s : d.sensors) d.protocol_assignment[s.sensor_id] = all_on;
  return d;
}

}  // namespace iotgw::testing

#include "iotgw/transport/codec.hpp"

namespace iotgw::testing {

/// Feeds `wire` to the codec in random-sized chunks the way a socket reader
/// would, returning every decoded payload. Fails the test on decode errors.
inline std::vector<Bytes> decode_chunked(ProtocolId kind, const Bytes& wire, Rng& rng, std::size_t max_chunk) {
  std::vector<Bytes> out;
  Bytes buf;
  std::size_t pos = 0;
  std::uniform_int_distribution<std::size_t> chunk(1, max_chunk);
  while (pos < wire.size() || !buf.empty()) {
    if (pos < wire.size()) {
      const auto n = std::min(chunk(rng), wire.size() - pos);
      buf.insert(buf.end(), wire.begin() + static_cast<std::ptrdiff_t>(pos),
                 wire.begin() + static_cast<std::ptrdiff_t>(pos + n));
      pos += n;
    }
    for (;;) {
      auto r = transport::decode_frame(kind, buf);
      if (r.status == transport::DecodeStatus::need_more_data) {
        if (r.consumed != 0) throw std::logic_error("consumed on need_more_data");
        break;
      }
      if (r.status == transport::DecodeStatus::error) throw std::logic_error("unexpected decode error");
      buf.erase(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(r.consumed));
      if (r.status == transport::DecodeStatus::frame) out.push_back(r.frame->payload());
    }
    if (pos >= wire.size() && !buf.empty()) {
      // Leftover bytes with no more input can only be an incomplete frame.
      throw std::logic_error("trailing undecodable bytes");
    }
  }
  return out;
}

}  // namespace iotgw::testing
