#pragma once

// The gateway service: three transport listeners feed one ordered ingest
// stage that normalizes, persists, evaluates alarms and publishes uplink.
// Runs either single-threaded via pump(now) (virtual clock) or with one
// thread per stage via start()/stop().

#include <array>
#include <deque>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "iotgw/clock.hpp"
#include "iotgw/gateway/alarms.hpp"
#include "iotgw/gateway/config.hpp"
#include "iotgw/gateway/event_bus.hpp"
#include "iotgw/gateway/host_stats.hpp"
#include "iotgw/gateway/reading_log.hpp"
#include "iotgw/gateway/registry.hpp"
#include "iotgw/gateway/throughput.hpp"
#include "iotgw/gateway/uplink.hpp"
#include "iotgw/mqtt/broker.hpp"
#include "iotgw/pump_thread.hpp"
#include "iotgw/transport/link.hpp"

namespace iotgw::gateway {

std::string data_topic(const GatewayIdentity& gw, const std::string& node_id, const std::string& sensor_id);
std::string config_topic(const GatewayIdentity& gw, const std::string& node_id);

/// A frame (or a framing error) tagged with the listener it entered through.
struct IngestItem {
  ProtocolId protocol = ProtocolId::wifi;
  std::optional<transport::RawFrame> frame;
  transport::FrameError error = transport::FrameError::none;
  std::size_t wire_bytes = 0;
  std::string peer;
};

/// Many producers, one consumer.
class IngestQueue {
 public:
  IngestQueue() : notifier_(std::make_shared<transport::Notifier>()) {}
  void push(IngestItem item);
  std::deque<IngestItem> take_all();
  std::shared_ptr<transport::Notifier> notifier() const { return notifier_; }

 private:
  std::mutex mu_;
  std::deque<IngestItem> items_;
  std::shared_ptr<transport::Notifier> notifier_;
};

/// Accepts node links for one protocol and turns their bytes into IngestItems.
class ListenerStage {
 public:
  ListenerStage(ProtocolId protocol, std::shared_ptr<transport::Acceptor> acceptor);
  bool poll(IngestQueue& queue);
  std::size_t link_count() const;
  ProtocolId protocol() const noexcept { return protocol_; }
  std::shared_ptr<transport::Notifier> notifier() const { return notifier_; }
  void close();

 private:
  ProtocolId protocol_;
  std::shared_ptr<transport::Acceptor> acceptor_;
  std::shared_ptr<transport::Notifier> notifier_;
  mutable std::mutex mu_;
  std::vector<std::unique_ptr<transport::LinkEndpoint>> links_;
};

struct GatewayCounters {
  std::uint64_t frames_ingested = 0;  // data frames that became readings
  std::uint64_t announces = 0;
  std::uint64_t uplink_publishes = 0;
  std::uint64_t alarms_fired = 0;
  std::array<std::uint64_t, 3> received{};  // frames per protocol, including bad ones
  std::array<std::uint64_t, 3> errors{};    // per protocol
};

class Gateway {
 public:
  Gateway(GatewayConfig config, const Clock& clock);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Wiring, before start() or the first pump().
  void add_transport_listener(ProtocolId p, std::shared_ptr<transport::Acceptor> acceptor);
  void add_broker_listener(std::shared_ptr<transport::Acceptor> acceptor);
  void set_uplink(transport::Connector connector);

  /// One single-threaded step of every stage. Returns true if anything happened.
  bool pump(TimePoint now);
  std::optional<TimePoint> next_deadline() const;

  void start();
  void stop();

  // Registry operations; each republishes the node's retained cfg message.
  NodeDescriptor register_node(const NodeDescriptor& d);
  NodeDescriptor set_capture_interval(const std::string& node_id, std::int64_t seconds);
  NodeDescriptor assign_protocol(const std::string& node_id, const std::string& sensor_id, ProtocolId p);

  /// Runs one frame through the pipeline. Failures are counted, never thrown.
  void ingest(const IngestItem& item, TimePoint now);

  const GatewayConfig& config() const noexcept { return config_; }
  const Clock& clock() const noexcept { return clock_; }
  Registry& registry() noexcept { return registry_; }
  AlarmTable& alarms() noexcept { return alarms_; }
  ThroughputMeter& throughput() noexcept { return throughput_; }
  const ThroughputMeter& throughput() const noexcept { return throughput_; }
  ReadingLog& log() noexcept { return log_; }
  EventBus& events() noexcept { return events_; }
  HostStatsSampler& host_stats() noexcept { return host_stats_; }
  mqtt::Broker& broker() noexcept { return broker_; }
  const UplinkPublisher* uplink() const noexcept { return uplink_.get(); }
  GatewayCounters counters() const;
  std::vector<AlarmEvent> fired_alarms() const;

 private:
  void publish_config(const NodeDescriptor& d);
  void diagnostic(ProtocolId p, const std::string& kind, const std::string& detail);
  bool drain_ingest(TimePoint now);

  GatewayConfig config_;
  const Clock& clock_;
  Registry registry_;
  AlarmTable alarms_;
  ThroughputMeter throughput_;
  ReadingLog log_;
  EventBus events_;
  HostStatsSampler host_stats_;
  mqtt::Broker broker_;
  std::unique_ptr<UplinkPublisher> uplink_;
  IngestQueue queue_;
  std::vector<std::unique_ptr<ListenerStage>> listeners_;

  std::mutex config_mu_;  // orders registry mutations with their cfg publishes
  std::mutex ingest_mu_;  // the single ingest stage
  mutable std::mutex counters_mu_;
  GatewayCounters counters_;
  std::deque<AlarmEvent> fired_;

  std::vector<std::unique_ptr<PumpThread>> threads_;
  bool running_ = false;
};

}  // namespace iotgw::gateway
