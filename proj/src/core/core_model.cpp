#include "iotgw/core_model.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <set>

#include "iotgw/error.hpp"
#include "iotgw/json_codec.hpp"

namespace iotgw {

Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

std::string_view to_string(ProtocolId p) noexcept {
  switch (p) {
    case ProtocolId::wifi: return "wifi";
    case ProtocolId::bluetooth: return "bluetooth";
    case ProtocolId::zigbee: return "zigbee";
  }
  return "?";
}

ProtocolId parse_protocol(std::string_view s) {
  for (auto p : kAllProtocols) {
    if (to_string(p) == s) return p;
  }
  fail(Errc::BadProtocol, std::string(s));
}

namespace {
constexpr std::array<Magnitude, 6> kAllMagnitudes{Magnitude::celsius,  Magnitude::percent_rh,
                                                  Magnitude::w_per_m2, Magnitude::mm,
                                                  Magnitude::km_per_h, Magnitude::compass_16};
}

std::string_view to_string(Magnitude m) noexcept {
  switch (m) {
    case Magnitude::celsius: return "celsius";
    case Magnitude::percent_rh: return "percent_rh";
    case Magnitude::w_per_m2: return "w_per_m2";
    case Magnitude::mm: return "mm";
    case Magnitude::km_per_h: return "km_per_h";
    case Magnitude::compass_16: return "compass_16";
  }
  return "?";
}

Magnitude parse_magnitude(std::string_view s) {
  for (auto m : kAllMagnitudes) {
    if (to_string(m) == s) return m;
  }
  fail(Errc::InvalidValue, "magnitude '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

std::string format_timestamp(Timestamp t) {
  const std::time_t secs = t.time_since_epoch().count();
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

Timestamp parse_timestamp(std::string_view s) {
  // Layout: YYYY-MM-DDThh:mm:ssZ
  static constexpr std::string_view kShape = "dddd-dd-ddTdd:dd:ddZ";
  if (s.size() != kShape.size()) fail(Errc::BadTimestamp, std::string(s));
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool ok = kShape[i] == 'd' ? (s[i] >= '0' && s[i] <= '9') : s[i] == kShape[i];
    if (!ok) fail(Errc::BadTimestamp, std::string(s));
  }
  auto num = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) v = v * 10 + (s[i] - '0');
    return v;
  };
  std::tm tm{};
  tm.tm_year = num(0, 4) - 1900;
  tm.tm_mon = num(5, 2) - 1;
  tm.tm_mday = num(8, 2);
  tm.tm_hour = num(11, 2);
  tm.tm_min = num(14, 2);
  tm.tm_sec = num(17, 2);
  const Timestamp t{std::chrono::seconds{timegm(&tm)}};
  // timegm normalizes out-of-range fields (Feb 30 -> Mar 2); reject those.
  if (format_timestamp(t) != s) fail(Errc::BadTimestamp, std::string(s));
  return t;
}

bool is_token(std::string_view s) noexcept {
  if (s.empty() || s.size() > 64) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

GpsCoordinate GpsCoordinate::from_degrees(double latitude, double longitude) {
  if (!std::isfinite(latitude) || latitude < -90.0 || latitude > 90.0)
    fail(Errc::InvalidValue, "latitude out of range");
  if (!std::isfinite(longitude) || longitude < -180.0 || longitude > 180.0)
    fail(Errc::InvalidValue, "longitude out of range");
  GpsCoordinate g;
  g.lat_micro_ = static_cast<std::int32_t>(std::llround(latitude * 1e6));
  g.lon_micro_ = static_cast<std::int32_t>(std::llround(longitude * 1e6));
  return g;
}

namespace {

double parse_decimal(std::string_view text) {
  // Plain decimal only: optional sign, digits, optional fraction.
  std::size_t i = 0;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) ++i;
  const std::size_t int_start = i;
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
  if (i == int_start) fail(Errc::InvalidValue, "gps '" + std::string(text) + "'");
  if (i < text.size() && text[i] == '.') {
    ++i;
    const std::size_t frac_start = i;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') ++i;
    if (i == frac_start) fail(Errc::InvalidValue, "gps '" + std::string(text) + "'");
  }
  if (i != text.size()) fail(Errc::InvalidValue, "gps '" + std::string(text) + "'");
  return std::strtod(std::string(text).c_str(), nullptr);
}

std::string format_micro(std::int32_t micro) {
  const std::int64_t v = micro;
  const std::int64_t a = v < 0 ? -v : v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%lld.%06lld", v < 0 ? "-" : "", static_cast<long long>(a / 1000000),
                static_cast<long long>(a % 1000000));
  return buf;
}

}  // namespace

GpsCoordinate GpsCoordinate::parse(std::string_view text) {
  const auto comma = text.find(',');
  if (comma == std::string_view::npos) fail(Errc::InvalidValue, "gps '" + std::string(text) + "'");
  return from_degrees(parse_decimal(text.substr(0, comma)), parse_decimal(text.substr(comma + 1)));
}

std::string GpsCoordinate::to_string() const {
  return format_micro(lat_micro_) + "," + format_micro(lon_micro_);
}

// ---------------------------------------------------------------------------

const SensorDescriptor* NodeDescriptor::find_sensor(std::string_view sensor_id) const noexcept {
  for (const auto& s : sensors) {
    if (s.sensor_id == sensor_id) return &s;
  }
  return nullptr;
}

void NodeDescriptor::validate() const {
  if (!is_token(node_id)) fail(Errc::InvalidDescriptor, "node_id '" + node_id + "'");
  if (capture_interval < 1) fail(Errc::InvalidDescriptor, "capture_interval must be >= 1");
  std::set<std::string_view> seen;
  for (const auto& s : sensors) {
    // Leading underscore is reserved for control records such as "_announce".
    if (!is_token(s.sensor_id) || s.sensor_id.front() == '_')
      fail(Errc::InvalidDescriptor, "sensor_id '" + s.sensor_id + "'");
    if (!seen.insert(s.sensor_id).second)
      fail(Errc::InvalidDescriptor, "duplicate sensor_id '" + s.sensor_id + "'");
  }
  for (const auto& [sensor_id, proto] : protocol_assignment) {
    if (!seen.contains(sensor_id))
      fail(Errc::InvalidDescriptor, "protocol_assignment names unknown sensor '" + sensor_id + "'");
  }
}

void GatewayIdentity::validate() const {
  if (!is_token(gate_id)) fail(Errc::InvalidValue, "gate_id '" + gate_id + "'");
  if (!is_token(network_id)) fail(Errc::InvalidValue, "network_id '" + network_id + "'");
}

// ---------------------------------------------------------------------------

NormalizedReading::NormalizedReading(Fields f) : f_(std::move(f)) {
  if (f_.node_id.empty()) fail(Errc::InvalidValue, "node-id");
  if (f_.sensor_id.empty()) fail(Errc::InvalidValue, "sensor-id");
  if (f_.gate_id.empty()) fail(Errc::InvalidValue, "gate-id");
  if (f_.network_id.empty()) fail(Errc::InvalidValue, "network-id");
  if (!std::isfinite(f_.value)) fail(Errc::InvalidValue, "value");
}

bool operator==(const NormalizedReading& a, const NormalizedReading& b) noexcept {
  const auto& x = a.f_;
  const auto& y = b.f_;
  return x.node_id == y.node_id && x.gps == y.gps && x.protocol == y.protocol && x.date == y.date &&
         x.sensor_id == y.sensor_id && x.value == y.value && x.magnitude == y.magnitude &&
         x.gate_id == y.gate_id && x.network_id == y.network_id;
}

std::string serialize_reading(const NormalizedReading& r) {
  Json j;
  j["node-id"] = r.node_id();
  j["gps"] = r.gps().to_string();
  j["protocol"] = to_string(r.protocol());
  j["date"] = format_timestamp(r.date());
  j["sensor-id"] = r.sensor_id();
  j["value"] = r.value();
  j["magnitude"] = to_string(r.magnitude());
  j["gate-id"] = r.gate_id();
  j["network-id"] = r.network_id();
  return j.dump();
}

namespace {

const Json& require(const Json& obj, std::string_view key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(Errc::MissingField, std::string(key));
  return *it;
}

std::string require_string(const Json& obj, std::string_view key) {
  const Json& v = require(obj, key);
  if (!v.is_string()) fail(Errc::TypeMismatch, std::string(key));
  auto s = v.get<std::string>();
  if (s.empty()) fail(Errc::TypeMismatch, std::string(key));
  return s;
}

}  // namespace

NormalizedReading parse_reading(std::string_view json) {
  Json j = Json::parse(json.begin(), json.end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) fail(Errc::TypeMismatch, "<document>");

  // Check presence of every key first so the reported key is the missing one.
  for (auto key : kReadingKeys) require(j, key);

  NormalizedReading::Fields f;
  f.node_id = require_string(j, "node-id");
  try {
    f.gps = GpsCoordinate::parse(require_string(j, "gps"));
  } catch (const Error&) {
    fail(Errc::TypeMismatch, "gps");
  }
  f.protocol = parse_protocol(require_string(j, "protocol"));
  {
    const auto text = require_string(j, "date");
    f.date = parse_timestamp(text);
  }
  f.sensor_id = require_string(j, "sensor-id");
  const Json& value = require(j, "value");
  if (!value.is_number()) fail(Errc::TypeMismatch, "value");
  f.value = value.get<double>();
  try {
    f.magnitude = parse_magnitude(require_string(j, "magnitude"));
  } catch (const Error& e) {
    if (e.code() != Errc::InvalidValue) throw;
    fail(Errc::TypeMismatch, "magnitude");
  }
  f.gate_id = require_string(j, "gate-id");
  f.network_id = require_string(j, "network-id");
  if (!std::isfinite(f.value)) fail(Errc::TypeMismatch, "value");
  return NormalizedReading(std::move(f));
}

// ---------------------------------------------------------------------------

std::string_view to_string(Comparator c) noexcept {
  switch (c) {
    case Comparator::lt: return "<";
    case Comparator::le: return "<=";
    case Comparator::gt: return ">";
    case Comparator::ge: return ">=";
    case Comparator::eq: return "=";
  }
  return "?";
}

Comparator parse_comparator(std::string_view s) {
  if (s == "<") return Comparator::lt;
  if (s == "<=" || s == "≤") return Comparator::le;
  if (s == ">") return Comparator::gt;
  if (s == ">=" || s == "≥") return Comparator::ge;
  if (s == "=" || s == "==") return Comparator::eq;
  fail(Errc::InvalidValue, "comparator '" + std::string(s) + "'");
}

void AlarmRule::validate() const {
  if (!is_token(rule_id)) fail(Errc::InvalidValue, "rule_id '" + rule_id + "'");
  if (node_pattern != "*" && !is_token(node_pattern))
    fail(Errc::InvalidValue, "node pattern '" + node_pattern + "'");
  if (sensor_pattern != "*" && !is_token(sensor_pattern))
    fail(Errc::InvalidValue, "sensor pattern '" + sensor_pattern + "'");
  if (!std::isfinite(threshold)) fail(Errc::InvalidValue, "threshold");
}

bool rule_matches(const AlarmRule& rule, const NormalizedReading& r) noexcept {
  auto selects = [](const std::string& pattern, const std::string& id) {
    return pattern == "*" || pattern == id;
  };
  if (!selects(rule.node_pattern, r.node_id()) || !selects(rule.sensor_pattern, r.sensor_id()))
    return false;
  const double v = r.value();
  switch (rule.comparator) {
    case Comparator::lt: return v < rule.threshold;
    case Comparator::le: return v <= rule.threshold;
    case Comparator::gt: return v > rule.threshold;
    case Comparator::ge: return v >= rule.threshold;
    case Comparator::eq: return v == rule.threshold;
  }
  return false;
}

}  // namespace iotgw
