#include "iotgw/transport/link.hpp"

#include "iotgw/error.hpp"

namespace iotgw::transport {

LinkEndpoint::LinkEndpoint(ProtocolId kind, StreamPtr stream) : kind_(kind), stream_(std::move(stream)) {
  if (!stream_) fail(Errc::LinkClosed, "null stream");
}

std::size_t LinkEndpoint::send(const RawFrame& frame) {
  if (frame.kind() != kind_)
    fail(Errc::KindMismatch, std::string(to_string(frame.kind())) + " frame on " +
                                 std::string(to_string(kind_)) + " endpoint");
  const auto wire = encode_frame(kind_, frame.payload());
  stream_->write(wire);
  return wire.size();
}

std::optional<LinkEvent> LinkEndpoint::try_recv() {
  stream_->read_some(rx_);
  while (!rx_.empty()) {
    auto r = decode_frame(kind_, rx_);
    if (r.status == DecodeStatus::need_more_data) break;
    rx_.erase(rx_.begin(), rx_.begin() + static_cast<std::ptrdiff_t>(r.consumed));
    if (r.status == DecodeStatus::skip) continue;
    LinkEvent ev;
    ev.wire_bytes = r.consumed;
    if (r.status == DecodeStatus::frame) {
      ev.frame = std::move(r.frame);
    } else {
      ++dropped_;
      ev.error = r.error;
      ev.expected_checksum = r.expected_checksum;
      ev.got_checksum = r.got_checksum;
    }
    return ev;
  }
  return std::nullopt;
}

RawFrame LinkEndpoint::recv(std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    // Sample before draining so bytes written just ahead of a close are seen.
    const bool was_closed = stream_->closed();
    while (auto ev = try_recv()) {
      if (ev->frame) return std::move(*ev->frame);
    }
    if (was_closed) fail(Errc::LinkClosed, peer());
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) fail(Errc::Timeout, "link recv " + peer());
    stream_->wait_readable(std::min<std::chrono::milliseconds>(
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now) + std::chrono::milliseconds(1),
        std::chrono::milliseconds(200)));
  }
}

bool LinkEndpoint::finished() {
  if (!stream_->closed()) return false;
  stream_->read_some(rx_);
  return decode_frame(kind_, rx_).status == DecodeStatus::need_more_data;
}

}  // namespace iotgw::transport
