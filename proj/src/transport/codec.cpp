#include "iotgw/transport/codec.hpp"

#include <algorithm>

#include "iotgw/error.hpp"

namespace iotgw::transport {

namespace {

void check_payload(ByteView payload) {
  if (payload.empty()) fail(Errc::EmptyPayload);
  if (payload.size() > kMaxPayload) fail(Errc::PayloadTooLarge, std::to_string(payload.size()));
}

DecodeResult need_more() { return {}; }

DecodeResult skip(std::size_t n) {
  DecodeResult r;
  r.status = DecodeStatus::skip;
  r.consumed = n;
  return r;
}

DecodeResult error(FrameError e, std::size_t consumed) {
  DecodeResult r;
  r.status = DecodeStatus::error;
  r.error = e;
  r.consumed = consumed;
  return r;
}

DecodeResult decoded(ProtocolId kind, Bytes payload, std::size_t consumed) {
  DecodeResult r;
  r.status = DecodeStatus::frame;
  r.frame.emplace(kind, std::move(payload));
  r.consumed = consumed;
  return r;
}

}  // namespace

RawFrame::RawFrame(ProtocolId kind, Bytes payload) : kind_(kind), payload_(std::move(payload)) {
  check_payload(payload_);
}

std::string_view to_string(FrameError e) noexcept {
  switch (e) {
    case FrameError::none: return "none";
    case FrameError::length_out_of_range: return "LengthOutOfRange";
    case FrameError::bad_escape: return "BadEscape";
    case FrameError::checksum_mismatch: return "ChecksumMismatch";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// wifi

Bytes wifi_encode(ByteView payload) {
  check_payload(payload);
  const auto n = static_cast<std::uint32_t>(payload.size());
  Bytes out;
  out.reserve(payload.size() + 4);
  out.push_back(static_cast<std::uint8_t>(n >> 24));
  out.push_back(static_cast<std::uint8_t>(n >> 16));
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

DecodeResult wifi_decode(ByteView stream) {
  if (stream.size() < 4) return need_more();
  const std::uint32_t n = (std::uint32_t{stream[0]} << 24) | (std::uint32_t{stream[1]} << 16) |
                          (std::uint32_t{stream[2]} << 8) | std::uint32_t{stream[3]};
  // The prefix itself is the only thing we can drop; there is no resync marker.
  if (n == 0 || n > kMaxPayload) return error(FrameError::length_out_of_range, 4);
  if (stream.size() < 4 + std::size_t{n}) return need_more();
  return decoded(ProtocolId::wifi, Bytes(stream.begin() + 4, stream.begin() + 4 + n), 4 + n);
}

// ---------------------------------------------------------------------------
// bluetooth (SLIP)

Bytes bt_encode(ByteView payload) {
  check_payload(payload);
  Bytes out;
  out.reserve(payload.size() + payload.size() / 8 + 2);
  out.push_back(kSlipEnd);
  for (auto b : payload) {
    if (b == kSlipEnd) {
      out.push_back(kSlipEsc);
      out.push_back(kSlipEscEnd);
    } else if (b == kSlipEsc) {
      out.push_back(kSlipEsc);
      out.push_back(kSlipEscEsc);
    } else {
      out.push_back(b);
    }
  }
  out.push_back(kSlipEnd);
  return out;
}

DecodeResult bt_decode(ByteView stream) {
  if (stream.empty()) return need_more();
  std::size_t start = 0;
  if (stream[0] == kSlipEnd) {
    if (stream.size() >= 2 && stream[1] == kSlipEnd) return skip(1);  // keep-alive
    start = 1;
  }
  const auto end_it = std::find(stream.begin() + start, stream.end(), kSlipEnd);
  if (end_it == stream.end()) {
    // Worst case every byte is escaped.
    if (stream.size() - start > 2 * kMaxPayload) return error(FrameError::length_out_of_range, stream.size());
    return need_more();
  }
  const auto end = static_cast<std::size_t>(end_it - stream.begin());
  Bytes payload;
  payload.reserve(end - start);
  for (std::size_t i = start; i < end; ++i) {
    const auto b = stream[i];
    if (b != kSlipEsc) {
      payload.push_back(b);
      continue;
    }
    if (i + 1 >= end) return error(FrameError::bad_escape, end + 1);
    const auto next = stream[++i];
    if (next == kSlipEscEnd) {
      payload.push_back(kSlipEnd);
    } else if (next == kSlipEscEsc) {
      payload.push_back(kSlipEsc);
    } else {
      return error(FrameError::bad_escape, end + 1);
    }
  }
  if (payload.size() > kMaxPayload) return error(FrameError::length_out_of_range, end + 1);
  return decoded(ProtocolId::bluetooth, std::move(payload), end + 1);
}

// ---------------------------------------------------------------------------
// zigbee (API frame)

std::uint8_t zb_checksum(ByteView payload) noexcept {
  unsigned sum = 0;
  for (auto b : payload) sum += b;
  return static_cast<std::uint8_t>(0xFF - (sum & 0xFF));
}

Bytes zb_encode(ByteView payload) {
  check_payload(payload);
  const auto n = static_cast<std::uint16_t>(payload.size());
  Bytes out;
  out.reserve(payload.size() + 4);
  out.push_back(kZigbeeStart);
  out.push_back(static_cast<std::uint8_t>(n >> 8));
  out.push_back(static_cast<std::uint8_t>(n));
  out.insert(out.end(), payload.begin(), payload.end());
  out.push_back(zb_checksum(payload));
  return out;
}

DecodeResult zb_decode(ByteView stream) {
  const auto start_it = std::find(stream.begin(), stream.end(), kZigbeeStart);
  if (start_it == stream.end()) return stream.empty() ? need_more() : skip(stream.size());
  const auto i = static_cast<std::size_t>(start_it - stream.begin());
  if (stream.size() < i + 3) return need_more();
  const std::size_t n = (std::size_t{stream[i + 1]} << 8) | std::size_t{stream[i + 2]};
  if (n == 0) return error(FrameError::length_out_of_range, i + 1);
  const std::size_t total = 3 + n + 1;
  if (stream.size() < i + total) return need_more();

  const auto payload = stream.subspan(i + 3, n);
  const auto expected = zb_checksum(payload);
  const auto got = stream[i + 3 + n];
  if (expected != got) {
    auto r = error(FrameError::checksum_mismatch, i + 1);
    r.expected_checksum = expected;
    r.got_checksum = got;
    return r;
  }
  return decoded(ProtocolId::zigbee, Bytes(payload.begin(), payload.end()), i + total);
}

// ---------------------------------------------------------------------------

Bytes encode_frame(ProtocolId kind, ByteView payload) {
  switch (kind) {
    case ProtocolId::wifi: return wifi_encode(payload);
    case ProtocolId::bluetooth: return bt_encode(payload);
    case ProtocolId::zigbee: return zb_encode(payload);
  }
  fail(Errc::BadProtocol);
}

DecodeResult decode_frame(ProtocolId kind, ByteView stream) {
  switch (kind) {
    case ProtocolId::wifi: return wifi_decode(stream);
    case ProtocolId::bluetooth: return bt_decode(stream);
    case ProtocolId::zigbee: return zb_decode(stream);
  }
  fail(Errc::BadProtocol);
}

}  // namespace iotgw::transport
