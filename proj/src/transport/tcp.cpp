#include "iotgw/transport/tcp.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>

#include "iotgw/error.hpp"

namespace iotgw::transport {

namespace {

class TcpStream final : public ByteStream {
 public:
  TcpStream(int fd, std::string peer) : fd_(fd), peer_(std::move(peer)) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    reader_ = std::thread([this] { read_loop(); });
  }

  ~TcpStream() override {
    close();
    if (reader_.joinable()) reader_.join();
    ::close(fd_);
  }

  void write(ByteView bytes) override {
    std::lock_guard wl(write_mu_);
    if (closed()) fail(Errc::LinkClosed, peer_);
    std::size_t off = 0;
    while (off < bytes.size()) {
      const auto n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        mark_closed();
        fail(Errc::LinkClosed, peer_ + ": " + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::size_t read_some(Bytes& out) override {
    std::lock_guard lk(mu_);
    const auto n = buf_.size();
    out.insert(out.end(), buf_.begin(), buf_.end());
    buf_.clear();
    return n;
  }

  bool wait_readable(std::chrono::milliseconds timeout) override {
    std::unique_lock lk(mu_);
    return cv_.wait_for(lk, timeout, [&] { return !buf_.empty() || closed_; }) && !buf_.empty();
  }

  void close() override {
    {
      std::lock_guard lk(mu_);
      if (shut_) return;
      shut_ = true;
    }
    ::shutdown(fd_, SHUT_RDWR);
    mark_closed();
  }

  bool closed() const override {
    std::lock_guard lk(mu_);
    return closed_;
  }

  void set_notifier(std::shared_ptr<Notifier> n) override {
    {
      std::lock_guard lk(mu_);
      notifier_ = n;
    }
    if (n) n->notify();
  }

  std::string peer() const override { return peer_; }

 private:
  void read_loop() {
    std::uint8_t chunk[4096];
    for (;;) {
      const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      std::shared_ptr<Notifier> notifier;
      {
        std::lock_guard lk(mu_);
        buf_.insert(buf_.end(), chunk, chunk + n);
        notifier = notifier_;
      }
      cv_.notify_all();
      if (notifier) notifier->notify();
    }
    mark_closed();
  }

  void mark_closed() {
    std::shared_ptr<Notifier> notifier;
    {
      std::lock_guard lk(mu_);
      closed_ = true;
      notifier = notifier_;
    }
    cv_.notify_all();
    if (notifier) notifier->notify();
  }

  int fd_;
  std::string peer_;
  mutable std::mutex mu_;
  std::mutex write_mu_;
  std::condition_variable cv_;
  Bytes buf_;
  bool closed_ = false;
  bool shut_ = false;
  std::shared_ptr<Notifier> notifier_;
  std::thread reader_;
};

std::string describe(const sockaddr_storage& addr) {
  char host[INET6_ADDRSTRLEN] = "?";
  std::uint16_t port = 0;
  if (addr.ss_family == AF_INET) {
    const auto* a = reinterpret_cast<const sockaddr_in*>(&addr);
    ::inet_ntop(AF_INET, &a->sin_addr, host, sizeof host);
    port = ntohs(a->sin_port);
  } else if (addr.ss_family == AF_INET6) {
    const auto* a = reinterpret_cast<const sockaddr_in6*>(&addr);
    ::inet_ntop(AF_INET6, &a->sin6_addr, host, sizeof host);
    port = ntohs(a->sin6_port);
  }
  return std::string(host) + ":" + std::to_string(port);
}

}  // namespace

std::pair<std::string, std::uint16_t> split_host_port(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size())
    fail(Errc::InvalidConfig, "expected host:port, got '" + address + "'");
  const auto port_text = address.substr(colon + 1);
  unsigned long port = 0;
  try {
    std::size_t used = 0;
    port = std::stoul(port_text, &used);
    if (used != port_text.size()) throw std::invalid_argument(port_text);
  } catch (const std::exception&) {
    fail(Errc::InvalidConfig, "bad port in '" + address + "'");
  }
  if (port > 65535) fail(Errc::InvalidConfig, "bad port in '" + address + "'");
  return {address.substr(0, colon), static_cast<std::uint16_t>(port)};
}

StreamPtr tcp_connect(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const auto where = host + ":" + std::to_string(port);
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 || !res)
    fail(Errc::GatewayUnreachable, where + ": cannot resolve");
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);
  for (auto* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) return std::make_shared<TcpStream>(fd, where);
    ::close(fd);
  }
  fail(Errc::GatewayUnreachable, where);
}

Connector tcp_connector(std::string host, std::uint16_t port) {
  return [host = std::move(host), port] { return tcp_connect(host, port); };
}

// ---------------------------------------------------------------------------

TcpAcceptor::TcpAcceptor(const std::string& host, std::uint16_t port) : host_(host) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const auto where = host + ":" + std::to_string(port);
  if (::getaddrinfo(host.empty() ? nullptr : host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0 ||
      !res)
    fail(Errc::BindFailed, "port " + std::to_string(port) + " (" + where + "): cannot resolve");
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res, &::freeaddrinfo);

  int err = 0;
  for (auto* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
      fd_ = fd;
      break;
    }
    err = errno;
    ::close(fd);
  }
  if (fd_ < 0)
    fail(Errc::BindFailed, "port " + std::to_string(port) + ": " + std::strerror(err ? err : EADDRINUSE));

  sockaddr_storage bound{};
  socklen_t len = sizeof bound;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = bound.ss_family == AF_INET6 ? ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port)
                                      : ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
  thread_ = std::thread([this] { accept_loop(); });
}

TcpAcceptor::~TcpAcceptor() {
  close();
  if (thread_.joinable()) thread_.join();
  ::close(fd_);
}

void TcpAcceptor::accept_loop() {
  while (!closing_) {
    sockaddr_storage addr{};
    socklen_t len = sizeof addr;
    const int fd = ::accept4(fd_, reinterpret_cast<sockaddr*>(&addr), &len, SOCK_CLOEXEC);
    if (fd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) continue;
      break;
    }
    auto stream = std::make_shared<TcpStream>(fd, describe(addr));
    std::shared_ptr<Notifier> n;
    {
      std::lock_guard lk(mu_);
      pending_.push_back(std::move(stream));
      n = notifier_;
    }
    if (n) n->notify();
  }
}

StreamPtr TcpAcceptor::try_accept() {
  std::lock_guard lk(mu_);
  if (pending_.empty()) return nullptr;
  auto s = pending_.front();
  pending_.pop_front();
  return s;
}

void TcpAcceptor::set_notifier(std::shared_ptr<Notifier> n) {
  std::lock_guard lk(mu_);
  notifier_ = std::move(n);
}

void TcpAcceptor::close() {
  if (closing_.exchange(true)) return;
  ::shutdown(fd_, SHUT_RDWR);
}

std::string TcpAcceptor::address() const {
  return (host_.empty() ? std::string("0.0.0.0") : host_) + ":" + std::to_string(port_);
}

}  // namespace iotgw::transport
