#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <mutex>

#include "iotgw/mqtt/client.hpp"
#include "iotgw/transport/stream.hpp"

namespace iotgw::gateway {

struct UplinkOptions {
  mqtt::ClientOptions client;
  std::size_t buffer = 10'000;  // queued publishes while the cloud is unreachable
  std::size_t window = 64;      // unacknowledged qos 1 publishes
  Millis reconnect_min{500};
  Millis reconnect_max{30'000};
};

struct UplinkStats {
  std::uint64_t submitted = 0;
  std::uint64_t acknowledged = 0;
  std::uint64_t dropped = 0;
  std::uint64_t requeued = 0;
  std::uint64_t connects = 0;
  std::uint64_t connect_failures = 0;
  std::size_t buffered = 0;
  std::size_t inflight = 0;
  bool connected = false;
};

/// Qos 1 publisher to the cloud broker that survives outages: publishes wait
/// in a bounded buffer while disconnected, unacknowledged ones are resent
/// after reconnecting, and the oldest are dropped once the buffer is full.
class UplinkPublisher {
 public:
  using Diagnostic = std::function<void(const std::string&)>;

  UplinkPublisher(transport::Connector connector, UplinkOptions options, Diagnostic diagnostic = {});

  void publish(std::string topic, Bytes payload);
  bool pump(TimePoint now);
  std::optional<TimePoint> next_deadline() const;
  UplinkStats stats() const;
  std::shared_ptr<transport::Notifier> notifier() const { return notifier_; }
  void close();

 private:
  struct Item {
    std::string topic;
    Bytes payload;
  };
  struct Sent {
    Item item;
    mqtt::TokenPtr token;
  };

  void requeue_front(std::vector<Item> items);
  void push_back(Item item);

  transport::Connector connector_;
  UplinkOptions options_;
  Diagnostic diagnostic_;
  std::shared_ptr<transport::Notifier> notifier_;
  mutable std::mutex mu_;
  std::unique_ptr<mqtt::Client> client_;
  std::deque<Item> buffer_;
  std::deque<Sent> inflight_;
  Millis backoff_;
  std::optional<TimePoint> next_attempt_;
  bool failing_ = false;
  bool closed_ = false;
  UplinkStats stats_;
};

}  // namespace iotgw::gateway
