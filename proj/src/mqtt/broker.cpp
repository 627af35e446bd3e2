#include "iotgw/mqtt/broker.hpp"

#include <algorithm>

#include "iotgw/error.hpp"
#include "iotgw/mqtt/topic.hpp"

namespace iotgw::mqtt {

Broker::Broker(BrokerOptions options)
    : options_(options), notifier_(std::make_shared<transport::Notifier>()) {}

Broker::~Broker() { close(); }

void Broker::attach(transport::StreamPtr stream) {
  stream->set_notifier(notifier_);
  std::lock_guard lk(mu_);
  if (closed_) {
    stream->close();
    return;
  }
  Session s;
  s.serial = next_serial_++;
  s.channel = std::make_unique<PacketChannel>(std::move(stream));
  ++stats_.sessions_accepted;
  sessions_.emplace(s.serial, std::move(s));
  notifier_->notify();
}

void Broker::add_listener(std::shared_ptr<transport::Acceptor> acceptor) {
  acceptor->set_notifier(notifier_);
  std::lock_guard lk(mu_);
  listeners_.push_back(std::move(acceptor));
}

bool Broker::pump(TimePoint now) {
  Pending pending;
  bool progress = false;
  {
    std::unique_lock lk(mu_);
    if (closed_) return false;

    for (auto& l : listeners_) {
      while (auto stream = l->try_accept()) {
        stream->set_notifier(notifier_);
        Session s;
        s.serial = next_serial_++;
        s.channel = std::make_unique<PacketChannel>(std::move(stream));
        ++stats_.sessions_accepted;
        sessions_.emplace(s.serial, std::move(s));
        progress = true;
      }
    }

    for (auto& [serial, s] : sessions_) {
      if (!s.dead) progress |= read_session(s, now, pending);
    }

    for (auto& [serial, s] : sessions_) {
      if (s.dead || !s.connected) continue;
      for (auto& [id, out] : s.inflight) {
        if (now - out.last_sent < options_.retry_interval) continue;
        out.packet.dup = true;
        out.last_sent = now;
        ++stats_.retransmissions;
        send(s, out.packet);
        progress = true;
        if (s.dead) break;
      }
      if (!s.dead && s.keep_alive > 0 && now - s.last_heard > Millis{s.keep_alive * 1500}) {
        kill(s);
        progress = true;
      }
    }

    for (auto& [serial, s] : sessions_) {
      if (!s.dead && s.channel->finished()) {
        kill(s);
        progress = true;
      }
    }
    reap();
  }
  for (auto& [cb, m] : pending) cb(m);
  return progress;
}

bool Broker::read_session(Session& s, TimePoint now, Pending& pending) {
  bool progress = false;
  while (!s.dead) {
    std::optional<Packet> p;
    try {
      p = s.channel->next();
    } catch (const Error&) {
      ++stats_.protocol_violations;
      kill(s);
      return true;
    }
    if (!p) break;
    progress = true;
    s.last_heard = now;
    handle(s, std::move(*p), now, pending);
  }
  return progress;
}

void Broker::handle(Session& s, Packet&& packet, TimePoint now, Pending& pending) {
  auto violation = [&] {
    ++stats_.protocol_violations;
    kill(s);
  };

  if (!s.connected) {
    auto* c = std::get_if<Connect>(&packet);
    if (!c) return violation();
    s.client_id = c->client_id.empty() ? "auto-" + std::to_string(s.serial) : c->client_id;
    for (auto& [serial, other] : sessions_) {
      if (serial != s.serial && !other.dead && other.connected && other.client_id == s.client_id) kill(other);
    }
    s.connected = true;
    s.keep_alive = c->keep_alive;
    send(s, Connack{0});
    return;
  }

  std::visit(
      [&](auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Publish>) {
          ++stats_.publishes_received;
          if (p.qos == 1) {
            const auto id = *p.packet_id;
            send(s, Puback{id});
            if (p.dup && s.seen_ids.contains(id)) {
              ++stats_.dup_suppressed;
              return;
            }
            s.seen_ids.insert(id);
          }
          route(Message{std::move(p.topic), std::move(p.payload), p.qos, p.retain}, now, pending);
        } else if constexpr (std::is_same_v<T, Puback>) {
          s.inflight.erase(p.packet_id);
          flush_queue(s, now);
        } else if constexpr (std::is_same_v<T, Subscribe>) {
          Suback ack{p.packet_id, {}};
          for (const auto& sub : p.subscriptions) {
            const auto granted = std::min<std::uint8_t>(sub.qos, 1);
            s.subscriptions[sub.filter] = granted;
            ack.return_codes.push_back(granted);
          }
          send(s, ack);
          for (const auto& [topic, m] : retained_) {
            int best = -1;
            for (const auto& sub : p.subscriptions) {
              if (topic_matches(sub.filter, topic)) best = std::max<int>(best, std::min<std::uint8_t>(sub.qos, 1));
            }
            if (best < 0) continue;
            deliver(s, Message{topic, m.payload, std::min<std::uint8_t>(m.qos, static_cast<std::uint8_t>(best)), true},
                    now);
          }
        } else if constexpr (std::is_same_v<T, Pingreq>) {
          send(s, Pingresp{});
        } else if constexpr (std::is_same_v<T, Disconnect>) {
          kill(s);
        } else {
          violation();
        }
      },
      packet);
}

void Broker::route(const Message& m, TimePoint now, Pending& pending) {
  if (m.retain) {
    if (m.payload.empty()) {
      retained_.erase(m.topic);
    } else {
      retained_[m.topic] = m;
    }
  }
  for (auto& [serial, s] : sessions_) {
    if (s.dead || !s.connected) continue;
    int best = -1;
    for (const auto& [filter, qos] : s.subscriptions) {
      if (topic_matches(filter, m.topic)) best = std::max<int>(best, qos);
    }
    if (best < 0) continue;
    deliver(s, Message{m.topic, m.payload, std::min<std::uint8_t>(m.qos, static_cast<std::uint8_t>(best)), false},
            now);
  }
  for (const auto& [filter, cb] : observers_) {
    if (topic_matches(filter, m.topic)) pending.emplace_back(cb, m);
  }
}

void Broker::deliver(Session& s, Message m, TimePoint now) {
  const bool window_full = m.qos == 1 && s.inflight.size() >= options_.max_inflight;
  if (!s.queued.empty() || window_full) {
    if (s.queued.size() >= options_.max_queued) {
      s.queued.pop_front();
      ++stats_.queue_dropped;
    }
    s.queued.push_back(std::move(m));
    return;
  }
  transmit(s, m, now);
}

void Broker::transmit(Session& s, const Message& m, TimePoint now) {
  Publish p{m.topic, m.payload, m.qos, std::nullopt, m.retain, false};
  if (m.qos == 1) {
    p.packet_id = allocate_id(s);
    s.inflight[*p.packet_id] = Outgoing{p, now};
  }
  ++stats_.deliveries;
  send(s, p);
}

void Broker::flush_queue(Session& s, TimePoint now) {
  while (!s.dead && !s.queued.empty() &&
         (s.queued.front().qos == 0 || s.inflight.size() < options_.max_inflight)) {
    transmit(s, s.queued.front(), now);
    s.queued.pop_front();
  }
}

void Broker::send(Session& s, const Packet& p) {
  if (s.dead) return;
  try {
    s.channel->send(p);
  } catch (const Error&) {
    kill(s);
  }
}

void Broker::kill(Session& s) {
  if (s.dead) return;
  s.dead = true;
  s.channel->close();
  ++stats_.sessions_closed;
}

std::uint16_t Broker::allocate_id(Session& s) {
  for (;;) {
    const auto id = s.next_id;
    s.next_id = static_cast<std::uint16_t>(s.next_id == 65535 ? 1 : s.next_id + 1);
    if (!s.inflight.contains(id)) return id;
  }
}

void Broker::reap() { std::erase_if(sessions_, [](const auto& kv) { return kv.second.dead; }); }

void Broker::publish_local(const std::string& topic, Bytes payload, std::uint8_t qos, bool retain, TimePoint now) {
  if (!valid_topic_name(topic)) fail(Errc::ProtocolViolation, "invalid topic '" + topic + "'");
  if (qos > 1) fail(Errc::UnsupportedPacketType, "qos " + std::to_string(qos));
  Pending pending;
  {
    std::lock_guard lk(mu_);
    if (closed_) return;
    ++stats_.publishes_received;
    route(Message{topic, std::move(payload), qos, retain}, now, pending);
    reap();
  }
  for (auto& [cb, m] : pending) cb(m);
}

void Broker::observe(std::string filter, Observer callback) {
  if (!valid_topic_filter(filter)) fail(Errc::ProtocolViolation, "invalid filter '" + filter + "'");
  std::lock_guard lk(mu_);
  observers_.emplace_back(std::move(filter), std::move(callback));
}

std::optional<Message> Broker::retained(const std::string& topic) const {
  std::lock_guard lk(mu_);
  const auto it = retained_.find(topic);
  if (it == retained_.end()) return std::nullopt;
  return it->second;
}

BrokerStats Broker::stats() const {
  std::lock_guard lk(mu_);
  return stats_;
}

std::size_t Broker::session_count() const {
  std::lock_guard lk(mu_);
  return static_cast<std::size_t>(
      std::count_if(sessions_.begin(), sessions_.end(), [](const auto& kv) { return kv.second.connected; }));
}

std::vector<std::string> Broker::client_ids() const {
  std::lock_guard lk(mu_);
  std::vector<std::string> ids;
  for (const auto& [serial, s] : sessions_) {
    if (s.connected) ids.push_back(s.client_id);
  }
  return ids;
}

std::optional<TimePoint> Broker::next_deadline() const {
  std::lock_guard lk(mu_);
  std::optional<TimePoint> best;
  auto consider = [&](TimePoint t) {
    if (!best || t < *best) best = t;
  };
  for (const auto& [serial, s] : sessions_) {
    if (!s.connected) continue;
    for (const auto& [id, out] : s.inflight) consider(out.last_sent + options_.retry_interval);
    if (s.keep_alive > 0) consider(s.last_heard + Millis{s.keep_alive * 1500 + 1});
  }
  return best;
}

void Broker::close() {
  std::lock_guard lk(mu_);
  if (closed_) return;
  closed_ = true;
  for (auto& [serial, s] : sessions_) kill(s);
  sessions_.clear();
  for (auto& l : listeners_) l->close();
  listeners_.clear();
}

}  // namespace iotgw::mqtt
