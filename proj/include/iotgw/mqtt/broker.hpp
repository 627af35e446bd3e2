#pragma once

// Embedded MQTT 3.1.1 broker, QoS 0/1. All state sits behind one mutex so
// every observable change is totally ordered. The broker is passive: callers
// drive it with pump(now), either from a PumpThread or from a simulation loop.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "iotgw/clock.hpp"
#include "iotgw/mqtt/channel.hpp"
#include "iotgw/transport/stream.hpp"

namespace iotgw::mqtt {

struct BrokerOptions {
  Millis retry_interval{2000};
  /// Unacknowledged qos 1 deliveries per session; further messages queue.
  std::size_t max_inflight = 256;
  /// Queued deliveries per session beyond the inflight window. Oldest dropped.
  std::size_t max_queued = 100'000;
};

struct BrokerStats {
  std::uint64_t publishes_received = 0;  // from sessions and publish_local
  std::uint64_t deliveries = 0;          // first transmissions to sessions
  std::uint64_t retransmissions = 0;
  std::uint64_t dup_suppressed = 0;
  std::uint64_t queue_dropped = 0;
  std::uint64_t sessions_accepted = 0;
  std::uint64_t sessions_closed = 0;
  std::uint64_t protocol_violations = 0;
};

struct Message {
  std::string topic;
  Bytes payload;
  std::uint8_t qos = 0;
  bool retain = false;
};

class Broker {
 public:
  using Observer = std::function<void(const Message&)>;

  explicit Broker(BrokerOptions options = {});
  ~Broker();
  Broker(const Broker&) = delete;
  Broker& operator=(const Broker&) = delete;

  /// Adopts an already-connected stream as a new session.
  void attach(transport::StreamPtr stream);
  void add_listener(std::shared_ptr<transport::Acceptor> acceptor);

  /// Accepts, reads, routes, retransmits and enforces keep-alive once.
  /// Returns true if anything happened.
  bool pump(TimePoint now);

  /// In-process publish, routed exactly like one arriving from a session.
  void publish_local(const std::string& topic, Bytes payload, std::uint8_t qos, bool retain, TimePoint now);
  /// In-process subscriber. Called outside the broker lock, in routing order.
  void observe(std::string filter, Observer callback);

  std::optional<Message> retained(const std::string& topic) const;
  BrokerStats stats() const;
  std::size_t session_count() const;
  std::vector<std::string> client_ids() const;
  /// Earliest time a retransmission or keep-alive check falls due.
  std::optional<TimePoint> next_deadline() const;

  std::shared_ptr<transport::Notifier> notifier() const { return notifier_; }
  /// Closes every session and listener.
  void close();

 private:
  struct Outgoing {
    Publish packet;
    TimePoint last_sent{};
  };
  struct Session {
    std::uint64_t serial = 0;
    std::unique_ptr<PacketChannel> channel;
    std::string client_id;
    bool connected = false;
    std::uint16_t keep_alive = 0;
    TimePoint last_heard{};
    std::map<std::string, std::uint8_t> subscriptions;
    std::map<std::uint16_t, Outgoing> inflight;
    std::deque<Message> queued;
    std::set<std::uint16_t> seen_ids;
    std::uint16_t next_id = 1;
    bool dead = false;
  };
  using Pending = std::vector<std::pair<Observer, Message>>;

  bool read_session(Session& s, TimePoint now, Pending& pending);
  void handle(Session& s, Packet&& p, TimePoint now, Pending& pending);
  void route(const Message& m, TimePoint now, Pending& pending);
  void deliver(Session& s, Message m, TimePoint now);
  void transmit(Session& s, const Message& m, TimePoint now);
  void flush_queue(Session& s, TimePoint now);
  void send(Session& s, const Packet& p);
  void kill(Session& s);
  std::uint16_t allocate_id(Session& s);
  void reap();

  BrokerOptions options_;
  std::shared_ptr<transport::Notifier> notifier_;
  mutable std::mutex mu_;
  std::vector<std::shared_ptr<transport::Acceptor>> listeners_;
  std::map<std::uint64_t, Session> sessions_;
  std::uint64_t next_serial_ = 1;
  std::map<std::string, Message> retained_;
  std::vector<std::pair<std::string, Observer>> observers_;
  BrokerStats stats_;
  bool closed_ = false;
};

}  // namespace iotgw::mqtt
