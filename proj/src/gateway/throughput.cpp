#include "iotgw/gateway/throughput.hpp"

namespace iotgw::gateway {

void ThroughputMeter::record(ProtocolId p, const std::string& node_id, std::uint64_t bytes, TimePoint t) {
  std::lock_guard lk(mu_);
  auto& q = samples_[{p, node_id}];
  q.push_back({t, bytes});
  while (!q.empty() && q.front().t + retention_ < t) q.pop_front();
  totals_[p] += bytes;
}

std::uint64_t ThroughputMeter::sum(const std::deque<Sample>& q, Millis window, TimePoint now) {
  std::uint64_t total = 0;
  for (const auto& s : q) {
    if (s.t > now - window && s.t <= now) total += s.bytes;
  }
  return total;
}

std::uint64_t ThroughputMeter::window_bytes(ProtocolId p, const std::optional<std::string>& node_id, Millis window,
                                            TimePoint now) const {
  std::lock_guard lk(mu_);
  if (node_id) {
    const auto it = samples_.find({p, *node_id});
    return it == samples_.end() ? 0 : sum(it->second, window, now);
  }
  std::uint64_t total = 0;
  for (const auto& [key, q] : samples_) {
    if (key.first == p) total += sum(q, window, now);
  }
  return total;
}

double ThroughputMeter::kbps(ProtocolId p, const std::optional<std::string>& node_id, Millis window,
                             TimePoint now) const {
  if (window <= Millis::zero()) return 0.0;
  const auto bytes = window_bytes(p, node_id, window, now);
  const double seconds = static_cast<double>(window.count()) / 1000.0;
  return (static_cast<double>(bytes) * 8.0 / 1000.0) / seconds;
}

std::vector<std::string> ThroughputMeter::nodes(ProtocolId p) const {
  std::lock_guard lk(mu_);
  std::vector<std::string> out;
  for (const auto& [key, q] : samples_) {
    if (key.first == p) out.push_back(key.second);
  }
  return out;
}

std::uint64_t ThroughputMeter::total_bytes(ProtocolId p) const {
  std::lock_guard lk(mu_);
  const auto it = totals_.find(p);
  return it == totals_.end() ? 0 : it->second;
}

}  // namespace iotgw::gateway
