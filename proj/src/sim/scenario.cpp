#include "iotgw/sim/scenario.hpp"

#include <fstream>
#include <set>

#include "iotgw/error.hpp"

namespace iotgw::sim {

namespace {

[[noreturn]] void invalid(std::string what) { fail(Errc::InvalidScenario, std::move(what)); }

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    invalid(key);
  }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? get<T>(j, key) : fallback;
}

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) invalid(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) invalid(where + "." + key);
  }
}

NodeDescriptor node_from_json(const Json& j) {
  try {
    if (j.contains("sensors")) return descriptor_from_json(j);
    check_keys(j, {"node_id", "gps", "capture_interval", "protocol_assignment"}, "node");
    auto d = weather_station(get<std::string>(j, "node_id"), GpsCoordinate::parse(get<std::string>(j, "gps")),
                             get_or<std::uint32_t>(j, "capture_interval", 6));
    if (j.contains("protocol_assignment")) {
      for (const auto& [sensor, p] : j["protocol_assignment"].items()) {
        if (!d.find_sensor(sensor)) invalid("protocol_assignment." + sensor);
        d.protocol_assignment[sensor] = parse_protocol(p.get<std::string>());
      }
    }
    d.validate();
    return d;
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidScenario) throw;
    invalid(std::string("nodes: ") + e.what());
  } catch (const Json::exception& e) {
    invalid(std::string("nodes: ") + e.what());
  }
}

ScenarioAction action_from_json(const Json& j) {
  ScenarioAction a;
  const auto op = get<std::string>(j, "op");
  a.at_s = get<std::int64_t>(j, "at_s");
  a.node_id = get<std::string>(j, "node");
  if (op == "set_capture_interval") {
    check_keys(j, {"op", "at_s", "node", "seconds"}, "action");
    a.kind = ScenarioAction::Kind::set_capture_interval;
    a.seconds = get<std::int64_t>(j, "seconds");
  } else if (op == "assign_protocol") {
    check_keys(j, {"op", "at_s", "node", "sensor", "protocol"}, "action");
    a.kind = ScenarioAction::Kind::assign_protocol;
    a.sensor_id = get<std::string>(j, "sensor");
    try {
      a.protocol = parse_protocol(get<std::string>(j, "protocol"));
    } catch (const Error&) {
      invalid("action.protocol");
    }
  } else if (op == "force_value") {
    check_keys(j, {"op", "at_s", "node", "sensor", "value"}, "action");
    a.kind = ScenarioAction::Kind::force_value;
    a.sensor_id = get<std::string>(j, "sensor");
    a.value = get<double>(j, "value");
  } else {
    invalid("action.op '" + op + "'");
  }
  return a;
}

std::string_view kind_name(ScenarioAction::Kind k) {
  switch (k) {
    case ScenarioAction::Kind::set_capture_interval: return "set_capture_interval";
    case ScenarioAction::Kind::assign_protocol: return "assign_protocol";
    case ScenarioAction::Kind::force_value: return "force_value";
  }
  return "?";
}

}  // namespace

std::map<std::string, ProtocolId> default_assignment() {
  return {
      {"temp", ProtocolId::wifi},         {"humidity", ProtocolId::wifi},
      {"radiation", ProtocolId::zigbee},  {"rain", ProtocolId::zigbee},
      {"wind_speed", ProtocolId::bluetooth}, {"wind_dir", ProtocolId::bluetooth},
  };
}

NodeDescriptor weather_station(const std::string& node_id, GpsCoordinate gps, std::uint32_t capture_interval) {
  NodeDescriptor d;
  d.node_id = node_id;
  d.gps = gps;
  d.capture_interval = capture_interval;
  d.sensors = {
      {"temp", Magnitude::celsius, "AM2315"},
      {"humidity", Magnitude::percent_rh, "AM2315"},
      {"radiation", Magnitude::w_per_m2, "Davis6450"},
      {"rain", Magnitude::mm, "SEN-08942"},
      {"wind_speed", Magnitude::km_per_h, "SEN-08942"},
      {"wind_dir", Magnitude::compass_16, "SEN-08942"},
  };
  d.protocol_assignment = default_assignment();
  return d;
}

void ScenarioSpec::validate() const {
  if (duration_s <= 0) invalid("duration_s must be positive");
  if (nodes.empty()) invalid("no nodes");
  if (throughput_window_s == 0) invalid("throughput_window_s must be positive");
  if (series_period_s == 0) invalid("series_period_s must be positive");
  try {
    identity.validate();
  } catch (const Error& e) {
    invalid(e.what());
  }
  std::set<std::string> ids;
  for (const auto& n : nodes) {
    try {
      n.validate();
    } catch (const Error& e) {
      invalid(e.what());
    }
    if (!ids.insert(n.node_id).second) invalid("duplicate node " + n.node_id);
  }
  std::set<std::string> rule_ids;
  for (const auto& r : alarms) {
    try {
      r.validate();
    } catch (const Error& e) {
      invalid(e.what());
    }
    if (!rule_ids.insert(r.rule_id).second) invalid("duplicate alarm " + r.rule_id);
  }
  for (const auto& a : actions) {
    if (a.at_s < 0 || a.at_s > duration_s) invalid("action at " + std::to_string(a.at_s) + " s outside the run");
    auto it = std::find_if(nodes.begin(), nodes.end(), [&](const auto& n) { return n.node_id == a.node_id; });
    if (it == nodes.end()) invalid("action names unknown node " + a.node_id);
    if (a.kind == ScenarioAction::Kind::set_capture_interval && (a.seconds < 1 || a.seconds > 86400)) {
      invalid("action interval " + std::to_string(a.seconds) + " outside 1..86400");
    }
    if (a.kind != ScenarioAction::Kind::set_capture_interval && !it->find_sensor(a.sensor_id)) {
      invalid("action names unknown sensor " + a.sensor_id);
    }
  }
}

ScenarioSpec reference_scenario() {
  ScenarioSpec s;
  s.nodes = {weather_station("node1", GpsCoordinate::from_degrees(4.7110, -74.0302)),
             weather_station("node2", GpsCoordinate::from_degrees(4.7111, -74.0300))};
  return s;
}

ScenarioSpec scenario_from_json(const Json& j) {
  check_keys(j,
             {"duration_s", "seed", "gate_id", "network_id", "nodes", "alarms", "actions", "throughput_window_s",
              "series_period_s"},
             "scenario");
  ScenarioSpec s;
  s.duration_s = get<std::int64_t>(j, "duration_s");
  s.seed = get_or<std::uint64_t>(j, "seed", s.seed);
  s.identity.gate_id = get_or<std::string>(j, "gate_id", s.identity.gate_id);
  s.identity.network_id = get_or<std::string>(j, "network_id", s.identity.network_id);
  s.throughput_window_s = get_or<std::uint32_t>(j, "throughput_window_s", s.throughput_window_s);
  s.series_period_s = get_or<std::uint32_t>(j, "series_period_s", s.series_period_s);
  if (!j.contains("nodes") || !j["nodes"].is_array()) invalid("nodes");
  for (const auto& n : j["nodes"]) s.nodes.push_back(node_from_json(n));
  if (j.contains("alarms")) {
    for (const auto& r : j["alarms"]) {
      try {
        s.alarms.push_back(rule_from_json(r));
      } catch (const Error& e) {
        invalid(std::string("alarms: ") + e.what());
      }
    }
  }
  if (j.contains("actions")) {
    for (const auto& a : j["actions"]) s.actions.push_back(action_from_json(a));
  }
  s.validate();
  return s;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    invalid(path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

Json to_json(const ScenarioSpec& s) {
  Json nodes = Json::array();
  for (const auto& n : s.nodes) nodes.push_back(to_json(n));
  Json alarms = Json::array();
  for (const auto& r : s.alarms) alarms.push_back(to_json(r));
  Json actions = Json::array();
  for (const auto& a : s.actions) {
    Json o = {{"op", kind_name(a.kind)}, {"at_s", a.at_s}, {"node", a.node_id}};
    switch (a.kind) {
      case ScenarioAction::Kind::set_capture_interval: o["seconds"] = a.seconds; break;
      case ScenarioAction::Kind::assign_protocol:
        o["sensor"] = a.sensor_id;
        o["protocol"] = to_string(a.protocol);
        break;
      case ScenarioAction::Kind::force_value:
        o["sensor"] = a.sensor_id;
        o["value"] = a.value;
        break;
    }
    actions.push_back(std::move(o));
  }
  return {{"duration_s", s.duration_s},
          {"seed", s.seed},
          {"gate_id", s.identity.gate_id},
          {"network_id", s.identity.network_id},
          {"throughput_window_s", s.throughput_window_s},
          {"series_period_s", s.series_period_s},
          {"nodes", nodes},
          {"alarms", alarms},
          {"actions", actions}};
}

}  // namespace iotgw::sim
