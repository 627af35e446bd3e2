#pragma once

// JSON forms of the registry and rule types. These are the bodies of the
// REST API, the downlink cfg messages and the node announce record.

#include <json.hpp>

#include "iotgw/core_model.hpp"

namespace iotgw {

using Json = nlohmann::ordered_json;

Json to_json(const SensorDescriptor& s);
Json to_json(const NodeDescriptor& d);
Json to_json(const AlarmRule& r);

/// Throw Error(InvalidDescriptor) with the offending key.
SensorDescriptor sensor_from_json(const Json& j);
NodeDescriptor descriptor_from_json(const Json& j);

/// Throws Error(InvalidValue) with the offending key.
AlarmRule rule_from_json(const Json& j);

}  // namespace iotgw
