#pragma once

// Boots cloud-sink broker, gateway and nodes (in that order), runs a
// scenario on a virtual or real clock, and collects the report.

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>

#include "iotgw/gateway/api.hpp"
#include "iotgw/gateway/gateway.hpp"
#include "iotgw/sim/node.hpp"
#include "iotgw/sim/scenario.hpp"

namespace iotgw::sim {

struct TracePoint {
  std::int64_t t_s = 0;  // seconds from the start of the run
  double value = 0.0;
  ProtocolId protocol = ProtocolId::wifi;
};

struct ChannelCount {
  std::uint64_t sent = 0;       // records the node wrote
  std::uint64_t bytes = 0;      // their wire bytes
  std::uint64_t persisted = 0;  // readings the gateway logged
};

struct NodeReport {
  std::string node_id;
  std::map<ProtocolId, ChannelCount> counts;
  std::map<std::string, std::vector<TracePoint>> traces;  // per sensor
  std::vector<std::string> diagnostics;
};

struct SeriesPoint {
  std::int64_t t_s = 0;
  ProtocolId protocol = ProtocolId::wifi;
  std::string node;  // "all" for the aggregate
  double kbps = 0.0;
};

struct ScenarioReport {
  std::int64_t duration_s = 0;
  std::uint64_t seed = 0;
  Timestamp start{};
  std::vector<NodeReport> nodes;
  std::map<ProtocolId, std::uint64_t> sink_by_protocol;
  std::uint64_t sink_total = 0;
  gateway::GatewayCounters gateway;
  std::uint64_t persisted = 0;
  std::uint64_t uplink_acknowledged = 0;
  std::uint64_t uplink_dropped = 0;
  std::uint32_t throughput_window_s = 0;
  std::vector<SeriesPoint> throughput;
  std::vector<Json> alarms;
  double wall_seconds = 0.0;  // not part of the JSON form, which is deterministic

  const NodeReport& node(const std::string& id) const;
};

Json to_json(const ScenarioReport& r);
/// timestamp,protocol,node,kbps
std::string throughput_csv(const ScenarioReport& r);
/// Writes report.json and throughput.csv into `dir`.
void write_report(const ScenarioReport& r, const std::filesystem::path& dir);

/// Tabulates a stored report: "throughput" (CSV), "counts" or "readings".
/// Throws Error(UnknownMetric).
std::string render_metric(const Json& report, std::string_view metric);

struct RunOptions {
  bool virtual_clock = true;
  std::filesystem::path work_dir;  // reading log lives here; required
  std::optional<int> api_port;     // 0 picks a free port
  std::string api_host = "127.0.0.1";
  std::string api_token = "sim-token";
  /// Virtual runs start here; real runs start at the next whole second.
  TimePoint virtual_start = TimePoint{std::chrono::sys_days{std::chrono::year{2024} / 6 / 1}};
  Millis startup_timeout{10'000};  // real clock only
};

class ScenarioRunner {
 public:
  using Hook = std::function<void(ScenarioRunner&)>;

  ScenarioRunner(ScenarioSpec spec, RunOptions options);
  ~ScenarioRunner();
  ScenarioRunner(const ScenarioRunner&) = delete;
  ScenarioRunner& operator=(const ScenarioRunner&) = delete;

  /// Runs `hook` at `offset_s` into the run, before nodes emit at that instant.
  /// In virtual mode the clock is paused while the hook runs.
  void at(std::int64_t offset_s, Hook hook);

  /// Throws Error(ScenarioTimeout) if the nodes never come up.
  ScenarioReport run();

  // Valid while run() executes, i.e. from hooks.
  gateway::Gateway& gateway();
  SimNode& node(const std::string& node_id);
  std::optional<int> api_port() const;
  const ScenarioSpec& spec() const noexcept { return spec_; }
  TimePoint now() const;

 private:
  struct Impl;

  ScenarioSpec spec_;
  RunOptions options_;
  std::vector<std::pair<std::int64_t, Hook>> hooks_;
  std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper: a fresh runner without hooks.
ScenarioReport run_scenario(const ScenarioSpec& spec, const RunOptions& options);

}  // namespace iotgw::sim
