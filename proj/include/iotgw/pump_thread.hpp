#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <thread>

#include "iotgw/clock.hpp"
#include "iotgw/transport/stream.hpp"

namespace iotgw {

/// Drives a pump(now) component from its own thread: pump, then sleep until
/// the notifier fires or `tick` passes. Used in real-clock mode.
class PumpThread {
 public:
  using PumpFn = std::function<void(TimePoint)>;

  PumpThread(PumpFn fn, const Clock& clock, std::shared_ptr<transport::Notifier> notifier,
             Millis tick = Millis{50})
      : fn_(std::move(fn)), clock_(clock), notifier_(std::move(notifier)), tick_(tick) {
    thread_ = std::thread([this] { loop(); });
  }
  PumpThread(const PumpThread&) = delete;
  PumpThread& operator=(const PumpThread&) = delete;
  ~PumpThread() { stop(); }

  void stop() {
    if (stop_.exchange(true)) return;
    notifier_->notify();
    if (thread_.joinable()) thread_.join();
  }

 private:
  void loop() {
    while (!stop_) {
      const auto seen = notifier_->sequence();
      fn_(clock_.now());
      if (stop_) break;
      notifier_->wait_for(seen, tick_);
    }
  }

  PumpFn fn_;
  const Clock& clock_;
  std::shared_ptr<transport::Notifier> notifier_;
  Millis tick_;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

}  // namespace iotgw
