#include "iotgw/gateway/registry.hpp"

#include "iotgw/error.hpp"

namespace iotgw::gateway {

NodeDescriptor Registry::upsert(const NodeDescriptor& d) {
  d.validate();
  std::lock_guard lk(mu_);
  auto& e = nodes_[d.node_id];
  e.descriptor = d;
  return d;
}

NodeDescriptor Registry::set_capture_interval(const std::string& node_id, std::int64_t seconds) {
  std::lock_guard lk(mu_);
  const auto it = nodes_.find(node_id);
  if (it == nodes_.end()) fail(Errc::UnknownNode, node_id);
  if (seconds < 1 || seconds > 86400) fail(Errc::InvalidInterval, std::to_string(seconds));
  it->second.descriptor.capture_interval = static_cast<std::uint32_t>(seconds);
  return it->second.descriptor;
}

NodeDescriptor Registry::assign_protocol(const std::string& node_id, const std::string& sensor_id, ProtocolId p) {
  std::lock_guard lk(mu_);
  const auto it = nodes_.find(node_id);
  if (it == nodes_.end()) fail(Errc::UnknownNode, node_id);
  if (!it->second.descriptor.find_sensor(sensor_id)) fail(Errc::UnknownSensor, sensor_id);
  it->second.descriptor.protocol_assignment[sensor_id] = p;
  return it->second.descriptor;
}

void Registry::touch(const std::string& node_id, Timestamp seen) {
  std::lock_guard lk(mu_);
  const auto it = nodes_.find(node_id);
  if (it == nodes_.end()) return;
  auto& last = it->second.last_seen;
  if (!last || seen > *last) last = seen;
}

std::optional<NodeDescriptor> Registry::find(const std::string& node_id) const {
  std::lock_guard lk(mu_);
  const auto it = nodes_.find(node_id);
  if (it == nodes_.end()) return std::nullopt;
  return it->second.descriptor;
}

std::vector<RegistryEntry> Registry::list() const {
  std::lock_guard lk(mu_);
  std::vector<RegistryEntry> out;
  for (const auto& [id, e] : nodes_) out.push_back(e);
  return out;
}

std::size_t Registry::size() const {
  std::lock_guard lk(mu_);
  return nodes_.size();
}

}  // namespace iotgw::gateway
