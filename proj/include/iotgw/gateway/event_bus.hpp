#pragma once

#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "iotgw/json_codec.hpp"

namespace iotgw::gateway {

/// Fan-out of gateway events ({"type": "reading" | "alarm" | "diagnostic" | "config", ...})
/// to live subscribers such as the /events stream.
class EventBus {
 public:
  class Subscription {
   public:
    /// Next event, or nullopt after the timeout or once the bus closed.
    std::optional<Json> next(std::chrono::milliseconds timeout);
    std::uint64_t dropped() const;

   private:
    friend class EventBus;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Json> queue_;
    std::size_t capacity_ = 0;
    std::uint64_t dropped_ = 0;
    bool closed_ = false;
  };
  using SubscriptionPtr = std::shared_ptr<Subscription>;

  /// Slow subscribers lose their oldest events beyond `capacity`.
  SubscriptionPtr subscribe(std::size_t capacity = 10'000);
  void unsubscribe(const SubscriptionPtr& s);
  /// Adds a monotonically increasing "seq" field and delivers to all subscribers.
  void publish(Json event);
  void close();
  std::size_t subscriber_count() const;

 private:
  mutable std::mutex mu_;
  std::vector<SubscriptionPtr> subs_;
  std::uint64_t seq_ = 0;
  bool closed_ = false;
};

}  // namespace iotgw::gateway
