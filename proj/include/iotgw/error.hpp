#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iotgw {

enum class Errc {
  // core-model
  InvalidValue,
  MissingField,
  TypeMismatch,
  BadTimestamp,
  BadProtocol,
  // transports
  EmptyPayload,
  PayloadTooLarge,
  KindMismatch,
  LinkClosed,
  // sensor-models
  CrcMismatch,
  HumidityOutOfRange,
  VoltageOutOfRange,
  ZeroWindow,
  // normalization
  MalformedRecord,
  UnknownKey,
  UnknownSensor,
  NodeMismatch,
  // mqtt
  ValueTooLarge,
  MalformedVarint,
  UnsupportedPacketType,
  ProtocolViolation,
  NotConnected,
  Timeout,
  // gateway-service
  InvalidDescriptor,
  UnknownNode,
  InvalidInterval,
  DuplicateRule,
  UnknownRule,
  SamplingUnavailable,
  StorageFull,
  InvalidConfig,
  BindFailed,
  // node-sim / cli
  GatewayUnreachable,
  InvalidScenario,
  ScenarioTimeout,
  UnknownMetric,
};

std::string_view errc_name(Errc code) noexcept;

/// Exception carrying a machine-checkable code plus the offending item
/// (a JSON key, a sensor id, a port...). what() renders both.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string detail);

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

[[noreturn]] inline void fail(Errc code, std::string detail = {}) {
  throw Error(code, std::move(detail));
}

}  // namespace iotgw
