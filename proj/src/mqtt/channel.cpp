#include "iotgw/mqtt/channel.hpp"

namespace iotgw::mqtt {

void PacketChannel::send(const Packet& p) {
  const auto wire = encode_packet(p);
  stream_->write(wire);
  bytes_out_ += wire.size();
}

std::optional<Packet> PacketChannel::next() {
  bytes_in_ += stream_->read_some(rx_);
  auto d = decode_packet(rx_);
  if (!d) return std::nullopt;
  rx_.erase(rx_.begin(), rx_.begin() + static_cast<std::ptrdiff_t>(d->consumed));
  return std::move(d->packet);
}

bool PacketChannel::finished() {
  if (!stream_->closed()) return false;
  bytes_in_ += stream_->read_some(rx_);
  try {
    return !decode_packet(rx_).has_value();
  } catch (const std::exception&) {
    return false;  // let next() surface the error
  }
}

}  // namespace iotgw::mqtt
