#include "iotgw/gateway/alarms.hpp"

#include <algorithm>

#include "iotgw/error.hpp"

namespace iotgw::gateway {

Json to_json(const AlarmEvent& e) {
  return Json{{"rule_id", e.rule_id}, {"message", e.message}, {"reading", Json::parse(serialize_reading(e.reading))}};
}

void AlarmTable::add(const AlarmRule& rule) {
  rule.validate();
  std::lock_guard lk(mu_);
  for (const auto& r : rules_) {
    if (r.rule_id == rule.rule_id) fail(Errc::DuplicateRule, rule.rule_id);
  }
  rules_.push_back(rule);
}

void AlarmTable::remove(const std::string& rule_id) {
  std::lock_guard lk(mu_);
  const auto n = std::erase_if(rules_, [&](const AlarmRule& r) { return r.rule_id == rule_id; });
  if (n == 0) fail(Errc::UnknownRule, rule_id);
}

std::vector<AlarmRule> AlarmTable::list() const {
  std::lock_guard lk(mu_);
  return rules_;
}

std::vector<AlarmEvent> AlarmTable::evaluate(const NormalizedReading& r) const {
  std::lock_guard lk(mu_);
  std::vector<AlarmEvent> out;
  for (const auto& rule : rules_) {
    if (rule_matches(rule, r)) out.push_back(AlarmEvent{rule.rule_id, rule.message, r});
  }
  return out;
}

}  // namespace iotgw::gateway
