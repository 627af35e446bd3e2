#pragma once

#include <optional>

#include "iotgw/transport/codec.hpp"
#include "iotgw/transport/stream.hpp"

namespace iotgw::transport {

/// What one step of incremental receive produced.
struct LinkEvent {
  std::optional<RawFrame> frame;   // set on success
  FrameError error = FrameError::none;
  std::size_t wire_bytes = 0;      // bytes the frame (or the dropped garbage) occupied
  std::uint8_t expected_checksum = 0;
  std::uint8_t got_checksum = 0;
};

/// One protocol-tagged side of a node<->gateway link: a byte stream plus the
/// codec for its protocol. One sender and one receiver may use it concurrently.
class LinkEndpoint {
 public:
  LinkEndpoint(ProtocolId kind, StreamPtr stream);

  ProtocolId kind() const noexcept { return kind_; }
  std::string peer() const { return stream_->peer(); }
  ByteStream& stream() noexcept { return *stream_; }

  /// Throws Error(KindMismatch) / Error(LinkClosed). Returns bytes written.
  std::size_t send(const RawFrame& frame);
  /// Blocks until a frame decodes. Malformed frames are dropped and counted.
  /// Throws Error(LinkClosed) when the stream ends, Error(Timeout) on timeout.
  RawFrame recv(std::chrono::milliseconds timeout = std::chrono::hours(24));
  /// Non-blocking: the next complete frame or decode error, if any.
  std::optional<LinkEvent> try_recv();

  /// Stream closed and nothing decodable left.
  bool finished();
  void close() { stream_->close(); }
  std::uint64_t dropped_frames() const noexcept { return dropped_; }

 private:
  ProtocolId kind_;
  StreamPtr stream_;
  Bytes rx_;
  std::uint64_t dropped_ = 0;
};

}  // namespace iotgw::transport
