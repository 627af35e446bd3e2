#pragma once

#include <mutex>
#include <vector>

#include "iotgw/core_model.hpp"
#include "iotgw/json_codec.hpp"

namespace iotgw::gateway {

struct AlarmEvent {
  std::string rule_id;
  std::string message;
  NormalizedReading reading;
};

Json to_json(const AlarmEvent& e);

class AlarmTable {
 public:
  /// Throws Error(InvalidValue) / Error(DuplicateRule).
  void add(const AlarmRule& rule);
  /// Throws Error(UnknownRule).
  void remove(const std::string& rule_id);
  std::vector<AlarmRule> list() const;
  /// One event per matching rule, in insertion order.
  std::vector<AlarmEvent> evaluate(const NormalizedReading& r) const;

 private:
  mutable std::mutex mu_;
  std::vector<AlarmRule> rules_;
};

}  // namespace iotgw::gateway
