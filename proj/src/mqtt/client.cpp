#include "iotgw/mqtt/client.hpp"

#include "iotgw/mqtt/topic.hpp"

namespace iotgw::mqtt {

bool DeliveryToken::done() const {
  std::lock_guard lk(mu_);
  return done_;
}

std::optional<Errc> DeliveryToken::error() const {
  std::lock_guard lk(mu_);
  return error_;
}

bool DeliveryToken::wait(std::chrono::milliseconds timeout) const {
  std::unique_lock lk(mu_);
  return cv_.wait_for(lk, timeout, [&] { return done_; });
}

std::vector<std::uint8_t> DeliveryToken::granted() const {
  std::lock_guard lk(mu_);
  return granted_;
}

void DeliveryToken::resolve(std::vector<std::uint8_t> granted) {
  {
    std::lock_guard lk(mu_);
    if (done_) return;
    done_ = true;
    granted_ = std::move(granted);
  }
  cv_.notify_all();
}

void DeliveryToken::reject(Errc code) {
  {
    std::lock_guard lk(mu_);
    if (done_) return;
    done_ = true;
    error_ = code;
  }
  cv_.notify_all();
}

Client::Client(transport::StreamPtr stream, ClientOptions options, std::shared_ptr<transport::Notifier> notifier)
    : options_(std::move(options)),
      notifier_(notifier ? std::move(notifier) : std::make_shared<transport::Notifier>()),
      channel_(stream) {
  stream->set_notifier(notifier_);
}

Client::~Client() {
  std::lock_guard lk(mu_);
  close_locked();
}

void Client::connect(TimePoint now) {
  std::lock_guard lk(mu_);
  check_open();
  if (connect_sent_) return;
  connect_sent_ = true;
  send_locked(Connect{options_.client_id, options_.keep_alive}, now);
}

void Client::check_open() const {
  if (closed_) fail(Errc::NotConnected, options_.client_id);
}

TokenPtr Client::publish(const std::string& topic, Bytes payload, std::uint8_t qos, bool retain, TimePoint now) {
  if (!valid_topic_name(topic)) fail(Errc::ProtocolViolation, "invalid topic '" + topic + "'");
  if (qos > 1) fail(Errc::UnsupportedPacketType, "qos " + std::to_string(qos));
  std::lock_guard lk(mu_);
  check_open();
  auto token = std::make_shared<DeliveryToken>();
  Publish p{topic, std::move(payload), qos, std::nullopt, retain, false};
  if (qos == 0) {
    if (connacked_) {
      send_locked(p, now);
      ++stats_.published;
    } else {
      held_.emplace_back(0, Inflight{std::move(p), token});
    }
    token->resolve();
    return token;
  }
  if (inflight_.size() + held_.size() >= options_.max_pending) fail(Errc::Timeout, "pending publish limit reached");
  const auto id = allocate_id();
  p.packet_id = id;
  start_locked(id, Inflight{std::move(p), token}, now);
  return token;
}

TokenPtr Client::subscribe(const std::string& filter, std::uint8_t qos, TimePoint now) {
  if (!valid_topic_filter(filter)) fail(Errc::ProtocolViolation, "invalid filter '" + filter + "'");
  std::lock_guard lk(mu_);
  check_open();
  auto token = std::make_shared<DeliveryToken>();
  const auto id = allocate_id();
  start_locked(id, Inflight{Subscribe{id, {{filter, std::min<std::uint8_t>(qos, 1)}}}, token}, now);
  return token;
}

void Client::start_locked(std::uint16_t id, Inflight entry, TimePoint now) {
  if (!connacked_) {
    held_.emplace_back(id, std::move(entry));
    return;
  }
  entry.last_sent = now;
  send_locked(entry.packet, now);
  if (std::holds_alternative<Publish>(entry.packet)) ++stats_.published;
  inflight_.emplace(id, std::move(entry));
}

std::uint16_t Client::allocate_id() {
  auto in_use = [&](std::uint16_t id) {
    if (inflight_.contains(id)) return true;
    for (const auto& [held, e] : held_) {
      if (held == id) return true;
    }
    return false;
  };
  for (;;) {
    const auto id = next_id_;
    next_id_ = static_cast<std::uint16_t>(next_id_ == 65535 ? 1 : next_id_ + 1);
    if (!in_use(id)) return id;
  }
}

void Client::send_locked(const Packet& p, TimePoint now) {
  try {
    channel_.send(p);
    last_sent_ = now;
  } catch (const Error&) {
    close_locked();
  }
}

bool Client::pump(TimePoint now) {
  std::lock_guard lk(mu_);
  if (closed_) return false;
  bool progress = false;

  for (;;) {
    std::optional<Packet> packet;
    try {
      packet = channel_.next();
    } catch (const Error&) {
      close_locked();
      return true;
    }
    if (!packet) break;
    progress = true;
    ping_sent_.reset();

    if (auto* ack = std::get_if<Connack>(&*packet)) {
      if (ack->return_code != 0 || connacked_) {
        close_locked();
        return true;
      }
      connacked_ = true;
      auto held = std::move(held_);
      held_.clear();
      for (auto& [id, e] : held) {
        if (id == 0) {
          send_locked(e.packet, now);
          ++stats_.published;
        } else {
          start_locked(id, std::move(e), now);
        }
      }
    } else if (auto* pub = std::get_if<Publish>(&*packet)) {
      if (pub->qos == 1) {
        const auto id = *pub->packet_id;
        send_locked(Puback{id}, now);
        if (pub->dup && seen_ids_.contains(id)) {
          ++stats_.duplicates_dropped;
          continue;
        }
        seen_ids_.insert(id);
      }
      ++stats_.received;
      inbox_.push_back(std::move(*pub));
    } else if (auto* puback = std::get_if<Puback>(&*packet)) {
      auto it = inflight_.find(puback->packet_id);
      if (it != inflight_.end() && std::holds_alternative<Publish>(it->second.packet)) {
        it->second.token->resolve();
        inflight_.erase(it);
      }
    } else if (auto* suback = std::get_if<Suback>(&*packet)) {
      auto it = inflight_.find(suback->packet_id);
      if (it != inflight_.end() && std::holds_alternative<Subscribe>(it->second.packet)) {
        it->second.token->resolve(suback->return_codes);
        inflight_.erase(it);
      }
    } else if (std::holds_alternative<Pingresp>(*packet)) {
      // liveness only
    } else {
      close_locked();
      return true;
    }
    if (closed_) return true;
  }

  if (connacked_) {
    for (auto it = inflight_.begin(); it != inflight_.end();) {
      auto& e = it->second;
      if (now - e.last_sent < options_.retry_interval) {
        ++it;
        continue;
      }
      progress = true;
      if (e.resends >= options_.retry_budget) {
        e.token->reject(Errc::Timeout);
        it = inflight_.erase(it);
        continue;
      }
      if (auto* p = std::get_if<Publish>(&e.packet)) p->dup = true;
      ++e.resends;
      ++stats_.retransmissions;
      e.last_sent = now;
      send_locked(e.packet, now);
      if (closed_) return true;
      ++it;
    }

    const auto keep_alive = Millis{options_.keep_alive * 1000};
    if (options_.keep_alive > 0) {
      if (ping_sent_ && now - *ping_sent_ > keep_alive) {
        close_locked();
        return true;
      }
      if (!ping_sent_ && now - last_sent_ >= keep_alive) {
        send_locked(Pingreq{}, now);
        ping_sent_ = now;
        progress = true;
      }
    }
  }

  if (!closed_ && channel_.finished()) {
    close_locked();
    progress = true;
  }
  return progress;
}

std::vector<Publish> Client::poll() {
  std::lock_guard lk(mu_);
  std::vector<Publish> out(std::make_move_iterator(inbox_.begin()), std::make_move_iterator(inbox_.end()));
  inbox_.clear();
  return out;
}

void Client::disconnect() {
  std::lock_guard lk(mu_);
  if (closed_) return;
  try {
    channel_.send(Disconnect{});
  } catch (const Error&) {
  }
  close_locked();
}

void Client::close_locked() {
  if (closed_) return;
  closed_ = true;
  channel_.close();
  for (auto& [id, e] : inflight_) e.token->reject(Errc::NotConnected);
  for (auto& [id, e] : held_) e.token->reject(Errc::NotConnected);
  inflight_.clear();
  held_.clear();
}

bool Client::connected() const {
  std::lock_guard lk(mu_);
  return connacked_ && !closed_;
}

bool Client::closed() const {
  std::lock_guard lk(mu_);
  return closed_;
}

std::size_t Client::unacknowledged() const {
  std::lock_guard lk(mu_);
  return inflight_.size() + held_.size();
}

ClientStats Client::stats() const {
  std::lock_guard lk(mu_);
  return stats_;
}

std::optional<TimePoint> Client::next_deadline() const {
  std::lock_guard lk(mu_);
  if (closed_ || !connacked_) return std::nullopt;
  std::optional<TimePoint> best;
  auto consider = [&](TimePoint t) {
    if (!best || t < *best) best = t;
  };
  for (const auto& [id, e] : inflight_) consider(e.last_sent + options_.retry_interval);
  if (options_.keep_alive > 0) {
    const auto keep_alive = Millis{options_.keep_alive * 1000};
    consider(ping_sent_ ? *ping_sent_ + keep_alive + Millis{1} : last_sent_ + keep_alive);
  }
  return best;
}

}  // namespace iotgw::mqtt
