#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "iotgw/core_model.hpp"

namespace iotgw::gateway {

struct RegistryEntry {
  NodeDescriptor descriptor;
  std::optional<Timestamp> last_seen;
};

/// node_id -> descriptor. Every mutation validates the resulting descriptor
/// and returns the stored copy.
class Registry {
 public:
  /// Inserts or replaces. Throws Error(InvalidDescriptor).
  NodeDescriptor upsert(const NodeDescriptor& d);
  /// Throws Error(UnknownNode) / Error(InvalidInterval).
  NodeDescriptor set_capture_interval(const std::string& node_id, std::int64_t seconds);
  /// Throws Error(UnknownNode) / Error(UnknownSensor).
  NodeDescriptor assign_protocol(const std::string& node_id, const std::string& sensor_id, ProtocolId p);
  void touch(const std::string& node_id, Timestamp seen);

  std::optional<NodeDescriptor> find(const std::string& node_id) const;
  std::vector<RegistryEntry> list() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, RegistryEntry> nodes_;
};

}  // namespace iotgw::gateway
