#pragma once

// A simulated weather-station node: one persistent link per assigned
// protocol plus an MQTT session to the gateway's broker for its cfg topic.
// Driven by pump(now) like every other component.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "iotgw/clock.hpp"
#include "iotgw/mqtt/client.hpp"
#include "iotgw/sensors.hpp"
#include "iotgw/transport/link.hpp"

namespace iotgw::sim {

struct SimNodeOptions {
  std::string gate_id = "gw1";
  std::uint64_t seed = 0;
  TimePoint epoch{};               // t = 0 of the synthetic weather
  std::optional<TimePoint> until;  // no emissions at or after this
  Millis reconnect_min{500};
  Millis reconnect_max{30'000};
  std::uint16_t keep_alive = 60;
  sensors::Calibration calibration;
};

/// One record sent by the node.
struct Emission {
  TimePoint at{};
  std::string sensor_id;
  ProtocolId protocol = ProtocolId::wifi;
  double value = 0.0;
  std::size_t wire_bytes = 0;
};

/// Engineering value a sensor of this magnitude reports for `w`, after the
/// sensor's own encoding (AM2315 register frame, pyranometer voltage, ...).
double measure(Magnitude m, const sensors::WeatherSample& w, const sensors::Calibration& cal);

class SimNode {
 public:
  /// `links` holds one connector per protocol the node's radios support.
  SimNode(NodeDescriptor descriptor, std::map<ProtocolId, transport::Connector> links, transport::Connector broker,
          SimNodeOptions options);
  ~SimNode();
  SimNode(const SimNode&) = delete;
  SimNode& operator=(const SimNode&) = delete;

  bool pump(TimePoint now);
  std::optional<TimePoint> next_deadline() const;

  /// Replaces the next emitted value of `sensor_id`.
  void force_next(const std::string& sensor_id, double value);

  /// Connected and holding a configuration from the gateway.
  bool ready() const;
  NodeDescriptor descriptor() const;
  std::vector<Emission> emissions() const;
  std::vector<std::string> diagnostics() const;
  std::uint64_t connect_failures() const;
  std::shared_ptr<transport::Notifier> notifier() const { return notifier_; }
  const std::string& id() const noexcept { return id_; }
  void close();

 private:
  bool connect_locked(TimePoint now);
  void drop_session_locked(TimePoint now, const std::string& why);
  transport::LinkEndpoint& link_locked(ProtocolId p);
  void apply_config_locked(const Bytes& payload, TimePoint now);
  void emit_locked(TimePoint at);
  bool session_broken_locked() const;

  const std::string id_;
  const std::vector<SensorDescriptor> sensors_;
  std::map<ProtocolId, transport::Connector> connectors_;
  transport::Connector broker_;
  SimNodeOptions options_;
  std::shared_ptr<transport::Notifier> notifier_;

  mutable std::mutex mu_;
  NodeDescriptor desc_;
  std::unique_ptr<mqtt::Client> client_;
  std::map<ProtocolId, std::unique_ptr<transport::LinkEndpoint>> links_;
  bool configured_ = false;
  std::optional<TimePoint> next_attempt_;  // set while disconnected
  Millis backoff_;
  std::optional<TimePoint> last_emit_;
  std::optional<TimePoint> next_emit_;
  std::map<std::string, double> forced_;
  std::vector<Emission> emissions_;
  std::vector<std::string> diagnostics_;
  std::uint64_t connect_failures_ = 0;
  bool closed_ = false;
};

}  // namespace iotgw::sim
