#pragma once

// Scenario description: which nodes run, for how long, and what the operator
// does to them along the way. Loaded from a JSON document.

#include <filesystem>
#include <string>
#include <vector>

#include "iotgw/json_codec.hpp"

namespace iotgw::sim {

/// temp+humidity on wifi, radiation+rain on zigbee, wind speed+direction on bluetooth.
std::map<std::string, ProtocolId> default_assignment();

/// The six-sensor station with the default assignment.
NodeDescriptor weather_station(const std::string& node_id, GpsCoordinate gps, std::uint32_t capture_interval = 6);

/// Operator step applied at `at_s` seconds into the run.
struct ScenarioAction {
  enum class Kind { set_capture_interval, assign_protocol, force_value };

  std::int64_t at_s = 0;
  Kind kind = Kind::set_capture_interval;
  std::string node_id;
  std::string sensor_id;          // assign_protocol, force_value
  std::int64_t seconds = 0;       // set_capture_interval
  ProtocolId protocol = ProtocolId::wifi;
  double value = 0.0;             // force_value
};

struct ScenarioSpec {
  std::int64_t duration_s = 480;
  std::uint64_t seed = 1;
  GatewayIdentity identity{"gw1", "net1"};
  std::vector<NodeDescriptor> nodes;
  std::vector<AlarmRule> alarms;
  std::vector<ScenarioAction> actions;
  std::uint32_t throughput_window_s = 6;
  std::uint32_t series_period_s = 6;  // spacing of throughput samples in the report

  /// Throws Error(InvalidScenario) naming the problem.
  void validate() const;
};

/// Two stations, 6 s interval, 480 s.
ScenarioSpec reference_scenario();

/// Node entries may be full descriptors or {"node_id", "gps"} plus optional
/// "capture_interval" and partial "protocol_assignment" over the default
/// station. Throws Error(InvalidScenario) naming the key.
ScenarioSpec scenario_from_json(const Json& j);
ScenarioSpec load_scenario(const std::filesystem::path& path);
Json to_json(const ScenarioSpec& s);

}  // namespace iotgw::sim
