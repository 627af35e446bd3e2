#include "iotgw/gateway/uplink.hpp"

#include <algorithm>

namespace iotgw::gateway {

UplinkPublisher::UplinkPublisher(transport::Connector connector, UplinkOptions options, Diagnostic diagnostic)
    : connector_(std::move(connector)),
      options_(std::move(options)),
      diagnostic_(std::move(diagnostic)),
      notifier_(std::make_shared<transport::Notifier>()),
      backoff_(options_.reconnect_min) {}

void UplinkPublisher::push_back(Item item) {
  buffer_.push_back(std::move(item));
  if (buffer_.size() > options_.buffer) {
    buffer_.pop_front();
    ++stats_.dropped;
    if (diagnostic_) diagnostic_("uplink buffer full, dropped oldest reading");
  }
}

void UplinkPublisher::publish(std::string topic, Bytes payload) {
  {
    std::lock_guard lk(mu_);
    if (closed_) return;
    ++stats_.submitted;
    push_back(Item{std::move(topic), std::move(payload)});
  }
  notifier_->notify();
}

void UplinkPublisher::requeue_front(std::vector<Item> items) {
  stats_.requeued += items.size();
  for (auto it = items.rbegin(); it != items.rend(); ++it) buffer_.push_front(std::move(*it));
  while (buffer_.size() > options_.buffer) {
    buffer_.pop_back();
    ++stats_.dropped;
  }
}

bool UplinkPublisher::pump(TimePoint now) {
  std::lock_guard lk(mu_);
  if (closed_) return false;
  bool progress = false;

  if (client_ && client_->closed()) {
    std::vector<Item> back;
    for (auto& s : inflight_) back.push_back(std::move(s.item));
    inflight_.clear();
    requeue_front(std::move(back));
    client_.reset();
    next_attempt_ = now + backoff_;
    if (diagnostic_) diagnostic_("uplink connection lost");
    progress = true;
  }

  if (!client_ && (!next_attempt_ || now >= *next_attempt_)) {
    try {
      auto stream = connector_();
      client_ = std::make_unique<mqtt::Client>(std::move(stream), options_.client, notifier_);
      client_->connect(now);
      ++stats_.connects;
      failing_ = false;
    } catch (const Error& e) {
      ++stats_.connect_failures;
      if (!failing_ && diagnostic_) diagnostic_(std::string("cloud broker unreachable: ") + e.what());
      failing_ = true;
      next_attempt_ = now + backoff_;
      backoff_ = std::min(backoff_ * 2, options_.reconnect_max);
    }
    progress = true;
  }
  if (!client_) return progress;

  progress |= client_->pump(now);
  if (client_->connected()) backoff_ = options_.reconnect_min;

  std::vector<Item> retry;
  for (auto it = inflight_.begin(); it != inflight_.end();) {
    if (!it->token->done()) {
      ++it;
      continue;
    }
    if (it->token->error()) {
      retry.push_back(std::move(it->item));
    } else {
      ++stats_.acknowledged;
    }
    it = inflight_.erase(it);
    progress = true;
  }
  if (!retry.empty()) requeue_front(std::move(retry));

  while (client_->connected() && inflight_.size() < options_.window && !buffer_.empty()) {
    auto item = std::move(buffer_.front());
    buffer_.pop_front();
    auto token = client_->publish(item.topic, item.payload, 1, false, now);
    inflight_.push_back(Sent{std::move(item), std::move(token)});
    progress = true;
  }
  return progress;
}

std::optional<TimePoint> UplinkPublisher::next_deadline() const {
  std::lock_guard lk(mu_);
  if (closed_) return std::nullopt;
  if (!client_) return next_attempt_;
  return client_->next_deadline();
}

UplinkStats UplinkPublisher::stats() const {
  std::lock_guard lk(mu_);
  auto s = stats_;
  s.buffered = buffer_.size();
  s.inflight = inflight_.size();
  s.connected = client_ && client_->connected();
  return s;
}

void UplinkPublisher::close() {
  std::lock_guard lk(mu_);
  closed_ = true;
  if (client_) client_->disconnect();
}

}  // namespace iotgw::gateway
