#pragma once

// MQTT 3.1.1 client session, QoS 0/1. Driven by pump(now) from one activity;
// publish/subscribe may be called from others and tokens awaited anywhere.

#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "iotgw/clock.hpp"
#include "iotgw/error.hpp"
#include "iotgw/mqtt/channel.hpp"

namespace iotgw::mqtt {

struct ClientOptions {
  std::string client_id;
  std::uint16_t keep_alive = 60;  // seconds; 0 disables pings
  Millis retry_interval{2000};
  int retry_budget = 5;  // resends before a qos 1 publish fails with Timeout
  std::size_t max_pending = 10'000;
};

/// Completion handle for a publish or subscribe.
class DeliveryToken {
 public:
  bool done() const;
  /// Set once the operation failed (NotConnected or Timeout).
  std::optional<Errc> error() const;
  /// Waits up to `timeout`; true once done, successfully or not.
  bool wait(std::chrono::milliseconds timeout) const;
  /// Granted qos per filter, for subscribe tokens.
  std::vector<std::uint8_t> granted() const;

  void resolve(std::vector<std::uint8_t> granted = {});
  void reject(Errc code);

 private:
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  bool done_ = false;
  std::optional<Errc> error_;
  std::vector<std::uint8_t> granted_;
};
using TokenPtr = std::shared_ptr<DeliveryToken>;

struct ClientStats {
  std::uint64_t published = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t received = 0;
  std::uint64_t duplicates_dropped = 0;
};

class Client {
 public:
  /// `notifier` is signalled on incoming bytes; one is created if null.
  Client(transport::StreamPtr stream, ClientOptions options, std::shared_ptr<transport::Notifier> notifier = nullptr);
  ~Client();
  Client(const Client&) = delete;
  Client& operator=(const Client&) = delete;

  /// Sends CONNECT. Publishes issued before CONNACK are held and flushed then.
  void connect(TimePoint now);
  /// Throws Error(NotConnected) once the session closed.
  TokenPtr publish(const std::string& topic, Bytes payload, std::uint8_t qos, bool retain, TimePoint now);
  TokenPtr subscribe(const std::string& filter, std::uint8_t qos, TimePoint now);

  /// Reads, acknowledges, retries and pings. Returns true if anything happened.
  bool pump(TimePoint now);
  /// Received messages in arrival order; drains the queue.
  std::vector<Publish> poll();

  void disconnect();
  bool connected() const;
  bool closed() const;
  std::size_t unacknowledged() const;
  ClientStats stats() const;
  std::optional<TimePoint> next_deadline() const;
  std::shared_ptr<transport::Notifier> notifier() const { return notifier_; }
  const std::string& client_id() const noexcept { return options_.client_id; }

 private:
  struct Inflight {
    Packet packet;  // Publish or Subscribe
    TokenPtr token;
    TimePoint last_sent{};
    int resends = 0;
  };

  void send_locked(const Packet& p, TimePoint now);
  void start_locked(std::uint16_t id, Inflight entry, TimePoint now);
  void close_locked();
  std::uint16_t allocate_id();
  void check_open() const;

  ClientOptions options_;
  std::shared_ptr<transport::Notifier> notifier_;
  mutable std::mutex mu_;
  PacketChannel channel_;
  bool connect_sent_ = false;
  bool connacked_ = false;
  bool closed_ = false;
  TimePoint last_sent_{};
  std::optional<TimePoint> ping_sent_;
  std::map<std::uint16_t, Inflight> inflight_;
  std::deque<std::pair<std::uint16_t, Inflight>> held_;  // waiting for CONNACK
  std::set<std::uint16_t> seen_ids_;
  std::deque<Publish> inbox_;
  std::uint16_t next_id_ = 1;
  ClientStats stats_;
};

}  // namespace iotgw::mqtt
