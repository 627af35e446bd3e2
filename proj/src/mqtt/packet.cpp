#include "iotgw/mqtt/packet.hpp"

#include "iotgw/error.hpp"
#include "iotgw/mqtt/topic.hpp"

namespace iotgw::mqtt {

namespace {

enum PacketType : std::uint8_t {
  kConnect = 1,
  kConnack = 2,
  kPublish = 3,
  kPuback = 4,
  kPubrec = 5,
  kPubrel = 6,
  kPubcomp = 7,
  kSubscribe = 8,
  kSuback = 9,
  kUnsubscribe = 10,
  kUnsuback = 11,
  kPingreq = 12,
  kPingresp = 13,
  kDisconnect = 14,
};

constexpr std::uint8_t kCleanSession = 0x02;

[[noreturn]] void violation(std::string why) { fail(Errc::ProtocolViolation, std::move(why)); }

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
    out_.push_back(static_cast<std::uint8_t>(v));
  }
  void str(std::string_view s) {
    if (s.size() > UINT16_MAX) violation("string longer than 65535 bytes");
    u16(static_cast<std::uint16_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void raw(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(ByteView b) : b_(b) {}
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>((b_[pos_] << 8) | b_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  std::string str() {
    const auto n = u16();
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    if (s.find('\0') != std::string::npos) violation("NUL in UTF-8 string");
    return s;
  }
  Bytes rest() {
    Bytes r(b_.begin() + static_cast<std::ptrdiff_t>(pos_), b_.end());
    pos_ = b_.size();
    return r;
  }
  bool done() const { return pos_ == b_.size(); }
  void expect_done(std::string_view what) const {
    if (!done()) violation(std::string("trailing bytes in ") + std::string(what));
  }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) violation("packet shorter than its fields");
  }
  ByteView b_;
  std::size_t pos_ = 0;
};

Bytes frame(std::uint8_t first_byte, const Bytes& body) {
  Bytes out;
  out.reserve(body.size() + 5);
  out.push_back(first_byte);
  const auto len = encode_remaining_length(static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), len.begin(), len.end());
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

void check_publish(const Publish& p) {
  if (!valid_topic_name(p.topic)) violation("invalid publish topic '" + p.topic + "'");
  if (p.qos > 1) violation("publish qos " + std::to_string(p.qos) + " outside the supported subset");
  if (p.qos == 1 && (!p.packet_id || *p.packet_id == 0)) violation("qos 1 publish without packet id");
  if (p.qos == 0 && p.packet_id) violation("qos 0 publish with packet id");
  if (p.qos == 0 && p.dup) violation("dup flag on qos 0 publish");
}

struct Encoder {
  Bytes operator()(const Connect& c) const {
    Writer w;
    w.str("MQTT");
    w.u8(4);  // protocol level 3.1.1
    w.u8(kCleanSession);
    w.u16(c.keep_alive);
    w.str(c.client_id);
    return frame(kConnect << 4, w.take());
  }
  Bytes operator()(const Connack& c) const {
    Writer w;
    w.u8(0);  // session present: never, sessions are not persisted
    w.u8(c.return_code);
    return frame(kConnack << 4, w.take());
  }
  Bytes operator()(const Publish& p) const {
    check_publish(p);
    Writer w;
    w.str(p.topic);
    if (p.qos > 0) w.u16(*p.packet_id);
    w.raw(p.payload);
    const auto flags =
        static_cast<std::uint8_t>((p.dup ? 0x08 : 0) | (p.qos << 1) | (p.retain ? 0x01 : 0));
    return frame(static_cast<std::uint8_t>(kPublish << 4 | flags), w.take());
  }
  Bytes operator()(const Puback& p) const {
    Writer w;
    w.u16(p.packet_id);
    return frame(kPuback << 4, w.take());
  }
  Bytes operator()(const Subscribe& s) const {
    if (s.packet_id == 0) violation("subscribe packet id 0");
    if (s.subscriptions.empty()) violation("subscribe without filters");
    Writer w;
    w.u16(s.packet_id);
    for (const auto& sub : s.subscriptions) {
      if (!valid_topic_filter(sub.filter)) violation("invalid topic filter '" + sub.filter + "'");
      if (sub.qos > 2) violation("requested qos > 2");
      w.str(sub.filter);
      w.u8(sub.qos);
    }
    return frame(kSubscribe << 4 | 0x02, w.take());
  }
  Bytes operator()(const Suback& s) const {
    Writer w;
    w.u16(s.packet_id);
    for (auto rc : s.return_codes) w.u8(rc);
    return frame(kSuback << 4, w.take());
  }
  Bytes operator()(const Pingreq&) const { return {kPingreq << 4, 0x00}; }
  Bytes operator()(const Pingresp&) const { return {kPingresp << 4, 0x00}; }
  Bytes operator()(const Disconnect&) const { return {kDisconnect << 4, 0x00}; }
};

Packet decode_body(std::uint8_t first, ByteView body) {
  const std::uint8_t type = first >> 4;
  const std::uint8_t flags = first & 0x0F;
  Reader r(body);

  auto expect_flags = [&](std::uint8_t want, const char* name) {
    if (flags != want) violation(std::string("bad fixed-header flags on ") + name);
  };

  switch (type) {
    case kConnect: {
      expect_flags(0, "CONNECT");
      if (r.str() != "MQTT") violation("protocol name is not MQTT");
      if (r.u8() != 4) violation("unsupported protocol level");
      const auto connect_flags = r.u8();
      if (connect_flags & 0x01) violation("reserved connect flag set");
      if (connect_flags & 0xFC) violation("will, username and password are not supported");
      Connect c;
      c.keep_alive = r.u16();
      c.client_id = r.str();
      r.expect_done("CONNECT");
      return c;
    }
    case kConnack: {
      expect_flags(0, "CONNACK");
      if (body.size() != 2) violation("CONNACK length");
      const auto ack_flags = r.u8();
      if (ack_flags & 0xFE) violation("reserved CONNACK flags");
      return Connack{r.u8()};
    }
    case kPublish: {
      const std::uint8_t qos = (flags >> 1) & 0x03;
      if (qos == 2) fail(Errc::UnsupportedPacketType, "PUBLISH qos 2");
      if (qos == 3) violation("PUBLISH qos 3");
      Publish p;
      p.qos = qos;
      p.dup = flags & 0x08;
      p.retain = flags & 0x01;
      p.topic = r.str();
      if (!valid_topic_name(p.topic)) violation("invalid publish topic");
      if (qos > 0) {
        p.packet_id = r.u16();
        if (*p.packet_id == 0) violation("packet id 0");
      } else if (p.dup) {
        violation("dup flag on qos 0 publish");
      }
      p.payload = r.rest();
      return p;
    }
    case kPuback: {
      expect_flags(0, "PUBACK");
      if (body.size() != 2) violation("PUBACK length");
      return Puback{r.u16()};
    }
    case kSubscribe: {
      expect_flags(0x02, "SUBSCRIBE");
      Subscribe s;
      s.packet_id = r.u16();
      if (s.packet_id == 0) violation("packet id 0");
      while (!r.done()) {
        Subscription sub;
        sub.filter = r.str();
        if (!valid_topic_filter(sub.filter)) violation("invalid topic filter '" + sub.filter + "'");
        sub.qos = r.u8();
        if (sub.qos > 2) violation("requested qos byte out of range");
        s.subscriptions.push_back(std::move(sub));
      }
      if (s.subscriptions.empty()) violation("SUBSCRIBE without filters");
      return s;
    }
    case kSuback: {
      expect_flags(0, "SUBACK");
      Suback s;
      s.packet_id = r.u16();
      while (!r.done()) {
        const auto rc = r.u8();
        if (rc > 2 && rc != kSubackFailure) violation("bad SUBACK return code");
        s.return_codes.push_back(rc);
      }
      return s;
    }
    case kPingreq:
    case kPingresp:
    case kDisconnect: {
      expect_flags(0, "control packet");
      if (!body.empty()) violation("nonzero remaining length");
      if (type == kPingreq) return Pingreq{};
      if (type == kPingresp) return Pingresp{};
      return Disconnect{};
    }
    case kPubrec:
    case kPubrel:
    case kPubcomp:
    case kUnsubscribe:
    case kUnsuback:
      fail(Errc::UnsupportedPacketType, "packet type " + std::to_string(type));
    default:
      violation("reserved packet type " + std::to_string(type));
  }
}

}  // namespace

std::string_view packet_name(const Packet& p) noexcept {
  static constexpr std::string_view kNames[] = {"CONNECT", "CONNACK",  "PUBLISH",  "PUBACK",    "SUBSCRIBE",
                                                "SUBACK",  "PINGREQ", "PINGRESP", "DISCONNECT"};
  return kNames[p.index()];
}

Bytes encode_remaining_length(std::uint32_t n) {
  if (n > kMaxRemainingLength) fail(Errc::ValueTooLarge, std::to_string(n));
  Bytes out;
  do {
    std::uint8_t digit = n % 128;
    n /= 128;
    if (n > 0) digit |= 0x80;
    out.push_back(digit);
  } while (n > 0);
  return out;
}

std::optional<VarintDecode> decode_remaining_length(ByteView bytes) {
  std::uint32_t value = 0;
  std::uint32_t multiplier = 1;
  for (std::size_t i = 0; i < 4; ++i) {
    if (i >= bytes.size()) return std::nullopt;
    const auto b = bytes[i];
    value += (b & 0x7F) * multiplier;
    if (!(b & 0x80)) return VarintDecode{value, i + 1};
    multiplier *= 128;
  }
  fail(Errc::MalformedVarint, "continuation bit set on fourth length byte");
}

Bytes encode_packet(const Packet& p) { return std::visit(Encoder{}, p); }

std::optional<PacketDecode> decode_packet(ByteView stream) {
  if (stream.empty()) return std::nullopt;
  const auto len = decode_remaining_length(stream.subspan(1));
  if (!len) return std::nullopt;
  const std::size_t header = 1 + len->consumed;
  if (stream.size() < header + len->value) return std::nullopt;
  return PacketDecode{decode_body(stream[0], stream.subspan(header, len->value)), header + len->value};
}

}  // namespace iotgw::mqtt
