#include "iotgw/error.hpp"

namespace iotgw {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidValue: return "InvalidValue";
    case Errc::MissingField: return "MissingField";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::BadTimestamp: return "BadTimestamp";
    case Errc::BadProtocol: return "BadProtocol";
    case Errc::EmptyPayload: return "EmptyPayload";
    case Errc::PayloadTooLarge: return "PayloadTooLarge";
    case Errc::KindMismatch: return "KindMismatch";
    case Errc::LinkClosed: return "LinkClosed";
    case Errc::CrcMismatch: return "CrcMismatch";
    case Errc::HumidityOutOfRange: return "HumidityOutOfRange";
    case Errc::VoltageOutOfRange: return "VoltageOutOfRange";
    case Errc::ZeroWindow: return "ZeroWindow";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::UnknownKey: return "UnknownKey";
    case Errc::UnknownSensor: return "UnknownSensor";
    case Errc::NodeMismatch: return "NodeMismatch";
    case Errc::ValueTooLarge: return "ValueTooLarge";
    case Errc::MalformedVarint: return "MalformedVarint";
    case Errc::UnsupportedPacketType: return "UnsupportedPacketType";
    case Errc::ProtocolViolation: return "ProtocolViolation";
    case Errc::NotConnected: return "NotConnected";
    case Errc::Timeout: return "Timeout";
    case Errc::InvalidDescriptor: return "InvalidDescriptor";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::InvalidInterval: return "InvalidInterval";
    case Errc::DuplicateRule: return "DuplicateRule";
    case Errc::UnknownRule: return "UnknownRule";
    case Errc::SamplingUnavailable: return "SamplingUnavailable";
    case Errc::StorageFull: return "StorageFull";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::BindFailed: return "BindFailed";
    case Errc::GatewayUnreachable: return "GatewayUnreachable";
    case Errc::InvalidScenario: return "InvalidScenario";
    case Errc::ScenarioTimeout: return "ScenarioTimeout";
    case Errc::UnknownMetric: return "UnknownMetric";
  }
  return "Unknown";
}

namespace {
std::string render(Errc code, const std::string& detail) {
  std::string out(errc_name(code));
  if (!detail.empty()) {
    out += ": ";
    out += detail;
  }
  return out;
}
}  // namespace

Error::Error(Errc code, std::string detail)
    : std::runtime_error(render(code, detail)), code_(code), detail_(std::move(detail)) {}

}  // namespace iotgw
