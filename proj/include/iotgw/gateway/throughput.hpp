#pragma once

#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "iotgw/clock.hpp"
#include "iotgw/core_model.hpp"

namespace iotgw::gateway {

/// Received-byte accounting per (protocol, node). A window of w seconds ending
/// at `now` covers samples with now - w < t <= now.
class ThroughputMeter {
 public:
  /// Samples older than `retention` are discarded on record().
  explicit ThroughputMeter(Millis retention = std::chrono::hours(1)) : retention_(retention) {}

  void record(ProtocolId p, const std::string& node_id, std::uint64_t bytes, TimePoint t);

  /// Bytes in the window; node_id absent aggregates over nodes.
  std::uint64_t window_bytes(ProtocolId p, const std::optional<std::string>& node_id, Millis window,
                             TimePoint now) const;
  /// (bytes * 8 / 1000) / window_seconds. Empty window gives 0.0.
  double kbps(ProtocolId p, const std::optional<std::string>& node_id, Millis window, TimePoint now) const;

  std::vector<std::string> nodes(ProtocolId p) const;
  std::uint64_t total_bytes(ProtocolId p) const;

 private:
  struct Sample {
    TimePoint t;
    std::uint64_t bytes;
  };
  using Key = std::pair<ProtocolId, std::string>;

  static std::uint64_t sum(const std::deque<Sample>& q, Millis window, TimePoint now);

  Millis retention_;
  mutable std::mutex mu_;
  std::map<Key, std::deque<Sample>> samples_;
  std::map<ProtocolId, std::uint64_t> totals_;
};

}  // namespace iotgw::gateway
