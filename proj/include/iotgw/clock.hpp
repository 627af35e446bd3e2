#pragma once

#include <atomic>
#include <chrono>

namespace iotgw {

using Millis = std::chrono::milliseconds;
using TimePoint = std::chrono::sys_time<Millis>;

class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimePoint now() const = 0;
};

class SystemClock final : public Clock {
 public:
  TimePoint now() const override {
    return std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now());
  }
};

/// Manually advanced clock for simulations and timer tests. Never goes back.
class VirtualClock final : public Clock {
 public:
  explicit VirtualClock(TimePoint start = TimePoint{}) : now_ms_(start.time_since_epoch().count()) {}

  TimePoint now() const override { return TimePoint{Millis{now_ms_.load()}}; }

  void set(TimePoint t) {
    auto target = t.time_since_epoch().count();
    auto cur = now_ms_.load();
    while (target > cur && !now_ms_.compare_exchange_weak(cur, target)) {
    }
  }
  void advance(Millis d) { now_ms_ += d.count(); }

 private:
  std::atomic<Millis::rep> now_ms_;
};

inline std::chrono::sys_seconds floor_seconds(TimePoint t) {
  return std::chrono::floor<std::chrono::seconds>(t);
}

}  // namespace iotgw
