#include "iotgw/gateway/event_bus.hpp"

#include <algorithm>

namespace iotgw::gateway {

std::optional<Json> EventBus::Subscription::next(std::chrono::milliseconds timeout) {
  std::unique_lock lk(mu_);
  cv_.wait_for(lk, timeout, [&] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  auto e = std::move(queue_.front());
  queue_.pop_front();
  return e;
}

std::uint64_t EventBus::Subscription::dropped() const {
  std::lock_guard lk(mu_);
  return dropped_;
}

EventBus::SubscriptionPtr EventBus::subscribe(std::size_t capacity) {
  auto s = std::make_shared<Subscription>();
  s->capacity_ = capacity;
  std::lock_guard lk(mu_);
  s->closed_ = closed_;
  subs_.push_back(s);
  return s;
}

void EventBus::unsubscribe(const SubscriptionPtr& s) {
  std::lock_guard lk(mu_);
  std::erase(subs_, s);
}

void EventBus::publish(Json event) {
  std::lock_guard lk(mu_);
  if (closed_) return;
  event["seq"] = ++seq_;
  for (const auto& s : subs_) {
    {
      std::lock_guard slk(s->mu_);
      s->queue_.push_back(event);
      while (s->queue_.size() > s->capacity_) {
        s->queue_.pop_front();
        ++s->dropped_;
      }
    }
    s->cv_.notify_all();
  }
}

void EventBus::close() {
  std::lock_guard lk(mu_);
  closed_ = true;
  for (const auto& s : subs_) {
    {
      std::lock_guard slk(s->mu_);
      s->closed_ = true;
    }
    s->cv_.notify_all();
  }
}

std::size_t EventBus::subscriber_count() const {
  std::lock_guard lk(mu_);
  return subs_.size();
}

}  // namespace iotgw::gateway
