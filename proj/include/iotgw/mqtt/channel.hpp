#pragma once

#include <optional>

#include "iotgw/mqtt/packet.hpp"
#include "iotgw/transport/stream.hpp"

namespace iotgw::mqtt {

/// A byte stream seen as a sequence of MQTT control packets.
class PacketChannel {
 public:
  explicit PacketChannel(transport::StreamPtr stream) : stream_(std::move(stream)) {}

  /// Throws Error(LinkClosed).
  void send(const Packet& p);
  /// Next complete packet, if one is buffered. Decode errors propagate.
  std::optional<Packet> next();
  /// Stream closed and no complete packet left.
  bool finished();
  void close() { stream_->close(); }

  transport::ByteStream& stream() noexcept { return *stream_; }
  std::uint64_t bytes_in() const noexcept { return bytes_in_; }
  std::uint64_t bytes_out() const noexcept { return bytes_out_; }

 private:
  transport::StreamPtr stream_;
  Bytes rx_;
  std::uint64_t bytes_in_ = 0;
  std::uint64_t bytes_out_ = 0;
};

}  // namespace iotgw::mqtt
