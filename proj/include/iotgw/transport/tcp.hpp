#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "iotgw/transport/stream.hpp"

namespace iotgw::transport {

/// Opens a TCP connection. Throws Error(GatewayUnreachable).
StreamPtr tcp_connect(const std::string& host, std::uint16_t port);
Connector tcp_connector(std::string host, std::uint16_t port);

/// "host:port" -> (host, port). Throws Error(InvalidConfig).
std::pair<std::string, std::uint16_t> split_host_port(const std::string& address);

/// Listening socket with a background accept thread. Port 0 picks a free port.
class TcpAcceptor final : public Acceptor {
 public:
  /// Throws Error(BindFailed) naming the port.
  TcpAcceptor(const std::string& host, std::uint16_t port);
  ~TcpAcceptor() override;

  TcpAcceptor(const TcpAcceptor&) = delete;
  TcpAcceptor& operator=(const TcpAcceptor&) = delete;

  std::uint16_t port() const noexcept { return port_; }

  StreamPtr try_accept() override;
  void set_notifier(std::shared_ptr<Notifier> n) override;
  void close() override;
  std::string address() const override;

 private:
  void accept_loop();

  std::string host_;
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> closing_{false};
  std::mutex mu_;
  std::deque<StreamPtr> pending_;
  std::shared_ptr<Notifier> notifier_;
  std::thread thread_;
};

}  // namespace iotgw::transport
