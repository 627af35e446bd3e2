#pragma once

// Ordered, reliable byte streams. Two realizations: in-process pipes (used by
// the virtual-clock simulation and tests) and TCP sockets (tcp.hpp).

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>

#include "iotgw/core_model.hpp"

namespace iotgw::transport {

/// Wakes an event loop when any stream or acceptor it watches has activity.
class Notifier {
 public:
  void notify();
  std::uint64_t sequence() const;
  /// Returns once the sequence moved past `seen` or the timeout elapsed.
  void wait_for(std::uint64_t seen, std::chrono::milliseconds timeout) const;

 private:
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  std::uint64_t seq_ = 0;
};

class ByteStream {
 public:
  virtual ~ByteStream() = default;

  /// Throws Error(LinkClosed) once either side closed.
  virtual void write(ByteView bytes) = 0;
  /// Appends whatever is buffered to `out` without blocking; returns the count.
  virtual std::size_t read_some(Bytes& out) = 0;
  /// Blocks until data is buffered, the stream closes, or the timeout elapses.
  virtual bool wait_readable(std::chrono::milliseconds timeout) = 0;
  virtual void close() = 0;
  /// True once either side closed. Buffered bytes remain readable.
  virtual bool closed() const = 0;
  virtual void set_notifier(std::shared_ptr<Notifier> n) = 0;
  virtual std::string peer() const = 0;
};

using StreamPtr = std::shared_ptr<ByteStream>;
/// Opens a new stream to some fixed address; throws Error(GatewayUnreachable).
using Connector = std::function<StreamPtr()>;

/// Both ends of an in-process duplex pipe.
std::pair<StreamPtr, StreamPtr> make_pipe(std::string a_name = "a", std::string b_name = "b");

class Acceptor {
 public:
  virtual ~Acceptor() = default;
  /// Non-blocking; null when no connection is pending.
  virtual StreamPtr try_accept() = 0;
  virtual void set_notifier(std::shared_ptr<Notifier> n) = 0;
  virtual void close() = 0;
  virtual std::string address() const = 0;
};

/// Acceptor whose clients live in the same process.
class MemoryAcceptor final : public Acceptor, public std::enable_shared_from_this<MemoryAcceptor> {
 public:
  explicit MemoryAcceptor(std::string name);

  /// Client side of a new connection. Throws Error(GatewayUnreachable) when closed.
  StreamPtr connect(const std::string& peer_name);
  Connector connector(std::string peer_name);

  StreamPtr try_accept() override;
  void set_notifier(std::shared_ptr<Notifier> n) override;
  void close() override;
  std::string address() const override { return name_; }

 private:
  std::string name_;
  mutable std::mutex mu_;
  std::deque<StreamPtr> pending_;
  std::shared_ptr<Notifier> notifier_;
  bool closed_ = false;
  std::uint64_t counter_ = 0;
};

}  // namespace iotgw::transport
