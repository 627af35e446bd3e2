#include "iotgw/gateway/gateway.hpp"

#include "iotgw/error.hpp"
#include "iotgw/normalization.hpp"

namespace iotgw::gateway {

namespace {

constexpr std::size_t kFiredAlarmHistory = 10'000;
const std::string kUnattributed = "_unattributed";

std::size_t index_of(ProtocolId p) { return static_cast<std::size_t>(p); }

}  // namespace

std::string data_topic(const GatewayIdentity& gw, const std::string& node_id, const std::string& sensor_id) {
  return "dat/" + gw.gate_id + "/" + node_id + "/" + sensor_id;
}

std::string config_topic(const GatewayIdentity& gw, const std::string& node_id) {
  return "cfg/" + gw.gate_id + "/" + node_id;
}

void IngestQueue::push(IngestItem item) {
  {
    std::lock_guard lk(mu_);
    items_.push_back(std::move(item));
  }
  notifier_->notify();
}

std::deque<IngestItem> IngestQueue::take_all() {
  std::lock_guard lk(mu_);
  return std::exchange(items_, {});
}

ListenerStage::ListenerStage(ProtocolId protocol, std::shared_ptr<transport::Acceptor> acceptor)
    : protocol_(protocol), acceptor_(std::move(acceptor)), notifier_(std::make_shared<transport::Notifier>()) {
  acceptor_->set_notifier(notifier_);
}

bool ListenerStage::poll(IngestQueue& queue) {
  std::lock_guard lk(mu_);
  bool progress = false;
  while (auto stream = acceptor_->try_accept()) {
    stream->set_notifier(notifier_);
    links_.push_back(std::make_unique<transport::LinkEndpoint>(protocol_, std::move(stream)));
    progress = true;
  }
  for (auto& link : links_) {
    while (auto ev = link->try_recv()) {
      progress = true;
      IngestItem item;
      item.protocol = protocol_;
      item.frame = std::move(ev->frame);
      item.error = ev->error;
      item.wire_bytes = ev->wire_bytes;
      item.peer = link->peer();
      queue.push(std::move(item));
    }
  }
  const auto before = links_.size();
  std::erase_if(links_, [](const auto& l) { return l->finished(); });
  return progress || links_.size() != before;
}

std::size_t ListenerStage::link_count() const {
  std::lock_guard lk(mu_);
  return links_.size();
}

void ListenerStage::close() {
  acceptor_->close();
  std::lock_guard lk(mu_);
  for (auto& l : links_) l->close();
  links_.clear();
}

Gateway::Gateway(GatewayConfig config, const Clock& clock)
    : config_(std::move(config)),
      clock_(clock),
      log_(config_.readings_log, config_.readings_log_max_bytes),
      host_stats_(Millis{config_.stats_period_s * 1000}),
      broker_(mqtt::BrokerOptions{.retry_interval = config_.mqtt_retry_interval}) {
  config_.identity.validate();
}

Gateway::~Gateway() {
  stop();
  for (auto& l : listeners_) l->close();
  if (uplink_) uplink_->close();
  broker_.close();
  events_.close();
}

void Gateway::add_transport_listener(ProtocolId p, std::shared_ptr<transport::Acceptor> acceptor) {
  listeners_.push_back(std::make_unique<ListenerStage>(p, std::move(acceptor)));
}

void Gateway::add_broker_listener(std::shared_ptr<transport::Acceptor> acceptor) {
  broker_.add_listener(std::move(acceptor));
}

void Gateway::set_uplink(transport::Connector connector) {
  UplinkOptions o;
  o.client.client_id = config_.identity.gate_id + "-uplink";
  o.client.retry_interval = config_.mqtt_retry_interval;
  o.client.retry_budget = config_.mqtt_retry_budget;
  o.buffer = config_.uplink_buffer;
  uplink_ = std::make_unique<UplinkPublisher>(std::move(connector), o, [this](const std::string& msg) {
    events_.publish(Json{{"type", "diagnostic"}, {"kind", "uplink"}, {"detail", msg}});
  });
}

bool Gateway::drain_ingest(TimePoint now) {
  auto items = queue_.take_all();
  for (const auto& item : items) ingest(item, now);
  return !items.empty();
}

bool Gateway::pump(TimePoint now) {
  bool progress = false;
  for (auto& l : listeners_) progress |= l->poll(queue_);
  progress |= drain_ingest(now);
  progress |= broker_.pump(now);
  if (uplink_) progress |= uplink_->pump(now);
  progress |= host_stats_.maybe_sample(now);
  return progress;
}

std::optional<TimePoint> Gateway::next_deadline() const {
  std::optional<TimePoint> best = broker_.next_deadline();
  auto consider = [&](std::optional<TimePoint> t) {
    if (t && (!best || *t < *best)) best = t;
  };
  if (uplink_) consider(uplink_->next_deadline());
  consider(host_stats_.next_due());
  return best;
}

void Gateway::start() {
  if (running_) return;
  running_ = true;
  for (auto& l : listeners_) {
    auto* stage = l.get();
    threads_.push_back(std::make_unique<PumpThread>([this, stage](TimePoint) { stage->poll(queue_); }, clock_,
                                                    stage->notifier()));
  }
  threads_.push_back(std::make_unique<PumpThread>([this](TimePoint now) { drain_ingest(now); }, clock_,
                                                  queue_.notifier()));
  threads_.push_back(
      std::make_unique<PumpThread>([this](TimePoint now) { broker_.pump(now); }, clock_, broker_.notifier(), Millis{100}));
  if (uplink_) {
    threads_.push_back(std::make_unique<PumpThread>([this](TimePoint now) { uplink_->pump(now); }, clock_,
                                                    uplink_->notifier(), Millis{100}));
  }
  threads_.push_back(std::make_unique<PumpThread>([this](TimePoint now) { host_stats_.maybe_sample(now); }, clock_,
                                                  std::make_shared<transport::Notifier>(), Millis{250}));
}

void Gateway::stop() {
  if (!running_) return;
  for (auto& t : threads_) t->stop();
  threads_.clear();
  running_ = false;
}

void Gateway::publish_config(const NodeDescriptor& d) {
  broker_.publish_local(config_topic(config_.identity, d.node_id), to_bytes(to_json(d).dump()), 1, true, clock_.now());
  events_.publish(Json{{"type", "config"}, {"node", to_json(d)}});
}

NodeDescriptor Gateway::register_node(const NodeDescriptor& d) {
  std::lock_guard lk(config_mu_);
  auto stored = registry_.upsert(d);
  publish_config(stored);
  return stored;
}

NodeDescriptor Gateway::set_capture_interval(const std::string& node_id, std::int64_t seconds) {
  std::lock_guard lk(config_mu_);
  auto stored = registry_.set_capture_interval(node_id, seconds);
  publish_config(stored);
  return stored;
}

NodeDescriptor Gateway::assign_protocol(const std::string& node_id, const std::string& sensor_id, ProtocolId p) {
  std::lock_guard lk(config_mu_);
  auto stored = registry_.assign_protocol(node_id, sensor_id, p);
  publish_config(stored);
  return stored;
}

void Gateway::diagnostic(ProtocolId p, const std::string& kind, const std::string& detail) {
  events_.publish(Json{{"type", "diagnostic"}, {"protocol", to_string(p)}, {"kind", kind}, {"detail", detail}});
}

void Gateway::ingest(const IngestItem& item, TimePoint now) {
  std::lock_guard stage(ingest_mu_);
  const auto pi = index_of(item.protocol);
  auto count_error = [&] {
    std::lock_guard lk(counters_mu_);
    ++counters_.errors[pi];
  };
  {
    std::lock_guard lk(counters_mu_);
    ++counters_.received[pi];
  }

  if (!item.frame) {
    throughput_.record(item.protocol, kUnattributed, item.wire_bytes, now);
    count_error();
    diagnostic(item.protocol, "frame_error", std::string(to_string(item.error)) + " from " + item.peer);
    return;
  }

  std::string node_for_bytes = kUnattributed;
  try {
    auto uplink = normalization::extract_uplink(*item.frame);

    if (auto* announce = std::get_if<normalization::NodeAnnounce>(&uplink)) {
      node_for_bytes = announce->descriptor.node_id;
      throughput_.record(item.protocol, node_for_bytes, item.wire_bytes, now);
      register_node(announce->descriptor);
      registry_.touch(announce->descriptor.node_id, announce->capture_time);
      std::lock_guard lk(counters_mu_);
      ++counters_.announces;
      return;
    }

    const auto& rec = std::get<normalization::NodeUplinkRecord>(uplink);
    node_for_bytes = rec.node_id;
    throughput_.record(item.protocol, node_for_bytes, item.wire_bytes, now);
    const auto node = registry_.find(rec.node_id);
    if (!node) fail(Errc::UnknownNode, rec.node_id);
    const auto reading = normalization::build_normalized(rec, item.protocol, *node, config_.identity);

    log_.append(reading);
    registry_.touch(rec.node_id, reading.date());
    const auto body = serialize_reading(reading);
    events_.publish(Json{{"type", "reading"}, {"reading", Json::parse(body)}});

    const auto fired = alarms_.evaluate(reading);
    for (const auto& a : fired) events_.publish(Json{{"type", "alarm"}, {"alarm", to_json(a)}});

    if (uplink_) uplink_->publish(data_topic(config_.identity, rec.node_id, rec.sensor_id), to_bytes(body));

    std::lock_guard lk(counters_mu_);
    ++counters_.frames_ingested;
    if (uplink_) ++counters_.uplink_publishes;
    counters_.alarms_fired += fired.size();
    for (const auto& a : fired) {
      fired_.push_back(a);
      if (fired_.size() > kFiredAlarmHistory) fired_.pop_front();
    }
  } catch (const Error& e) {
    if (node_for_bytes == kUnattributed) throughput_.record(item.protocol, kUnattributed, item.wire_bytes, now);
    count_error();
    diagnostic(item.protocol, std::string(errc_name(e.code())), e.what());
  }
}

GatewayCounters Gateway::counters() const {
  std::lock_guard lk(counters_mu_);
  return counters_;
}

std::vector<AlarmEvent> Gateway::fired_alarms() const {
  std::lock_guard lk(counters_mu_);
  return {fired_.begin(), fired_.end()};
}

}  // namespace iotgw::gateway
