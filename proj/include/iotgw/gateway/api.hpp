#pragma once

#include <memory>
#include <string>

#include "iotgw/gateway/gateway.hpp"

namespace iotgw::gateway {

/// REST + server-sent-events API over a Gateway. Every route requires
/// "Authorization: Bearer <token>"; /events also accepts ?access_token=
/// because browser EventSource cannot set headers.
///
///   GET    /nodes                      POST /nodes          PATCH /nodes/{id}
///   GET    /readings?since&node&sensor
///   GET    /metrics/throughput?protocol&window&node
///   GET    /metrics/host
///   GET    /alarms   POST /alarms   DELETE /alarms/{id}
///   GET    /events
class ApiServer {
 public:
  ApiServer(Gateway& gateway, std::string token);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds and serves on a background thread. Port 0 picks a free port.
  /// Returns the bound port; throws Error(BindFailed) naming the port.
  int start(const std::string& host, int port);
  void stop();
  int port() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace iotgw::gateway
