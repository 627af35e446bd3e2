#include "iotgw/sim/node.hpp"

#include <algorithm>

#include "iotgw/error.hpp"
#include "iotgw/json_codec.hpp"
#include "iotgw/normalization.hpp"

namespace iotgw::sim {

double measure(Magnitude m, const sensors::WeatherSample& w, const sensors::Calibration& cal) {
  switch (m) {
    case Magnitude::celsius:
      return sensors::am2315_decode(sensors::am2315_encode(w.temperature_c, w.humidity_rh)).temperature_c;
    case Magnitude::percent_rh:
      return sensors::am2315_decode(sensors::am2315_encode(w.temperature_c, w.humidity_rh)).humidity_rh;
    case Magnitude::w_per_m2:
      return sensors::davis6450_convert(w.irradiance_wm2 * cal.pyranometer_volts_per_wm2, cal);
    case Magnitude::mm:
      return sensors::rain_tips_to_mm(w.rain_tips, cal);
    case Magnitude::km_per_h:
      return sensors::anemometer_to_kmh(w.wind_closures, cal.anemometer_window_s, cal);
    case Magnitude::compass_16:
      return static_cast<double>(sensors::vane_direction(w.vane_volts, cal.vane_vref));
  }
  fail(Errc::InvalidValue, "magnitude");
}

SimNode::SimNode(NodeDescriptor descriptor, std::map<ProtocolId, transport::Connector> links,
                 transport::Connector broker, SimNodeOptions options)
    : id_(descriptor.node_id),
      sensors_(descriptor.sensors),
      connectors_(std::move(links)),
      broker_(std::move(broker)),
      options_(std::move(options)),
      notifier_(std::make_shared<transport::Notifier>()),
      desc_(std::move(descriptor)),
      backoff_(options_.reconnect_min) {
  desc_.validate();
  for (const auto& [sensor, p] : desc_.protocol_assignment) {
    if (!connectors_.contains(p)) fail(Errc::BadProtocol, sensor + " assigned to " + std::string(to_string(p)));
  }
}

SimNode::~SimNode() { close(); }

bool SimNode::pump(TimePoint now) {
  std::lock_guard lk(mu_);
  if (closed_) return false;
  bool progress = false;
  if (!client_) {
    if (next_attempt_ && now < *next_attempt_) return false;
    if (!connect_locked(now)) return true;
    progress = true;
  }
  progress |= client_->pump(now);
  for (const auto& msg : client_->poll()) {
    apply_config_locked(msg.payload, now);
    progress = true;
  }
  if (client_ && session_broken_locked()) {
    drop_session_locked(now, "connection lost");
    return true;
  }
  while (client_ && configured_ && next_emit_ && *next_emit_ <= now &&
         (!options_.until || *next_emit_ < *options_.until)) {
    emit_locked(*next_emit_);
    progress = true;
  }
  if (client_) {
    // Records just written may have closed a link under us.
    if (session_broken_locked()) drop_session_locked(now, "connection lost");
  }
  return progress;
}

std::optional<TimePoint> SimNode::next_deadline() const {
  std::lock_guard lk(mu_);
  if (closed_) return std::nullopt;
  if (!client_) return next_attempt_.value_or(TimePoint{});
  auto deadline = client_->next_deadline();
  if (configured_ && next_emit_ && (!options_.until || *next_emit_ < *options_.until)) {
    deadline = deadline ? std::min(*deadline, *next_emit_) : *next_emit_;
  }
  return deadline;
}

void SimNode::force_next(const std::string& sensor_id, double value) {
  std::lock_guard lk(mu_);
  forced_[sensor_id] = value;
}

bool SimNode::ready() const {
  std::lock_guard lk(mu_);
  return client_ && client_->connected() && configured_;
}

NodeDescriptor SimNode::descriptor() const {
  std::lock_guard lk(mu_);
  return desc_;
}

std::vector<Emission> SimNode::emissions() const {
  std::lock_guard lk(mu_);
  return emissions_;
}

std::vector<std::string> SimNode::diagnostics() const {
  std::lock_guard lk(mu_);
  return diagnostics_;
}

std::uint64_t SimNode::connect_failures() const {
  std::lock_guard lk(mu_);
  return connect_failures_;
}

void SimNode::close() {
  std::lock_guard lk(mu_);
  if (closed_) return;
  closed_ = true;
  if (client_) client_->disconnect();
  client_.reset();
  for (auto& [p, link] : links_) link->close();
  links_.clear();
  notifier_->notify();
}

bool SimNode::connect_locked(TimePoint now) {
  try {
    auto stream = broker_();
    client_ = std::make_unique<mqtt::Client>(
        stream, mqtt::ClientOptions{.client_id = "node-" + id_, .keep_alive = options_.keep_alive}, notifier_);
    client_->connect(now);
    client_->subscribe("cfg/" + options_.gate_id + "/" + id_, 1, now);
    for (const auto& [sensor, p] : desc_.protocol_assignment) link_locked(p);
    // Self-configuration: the descriptor goes out over WiFi when the node uses it.
    const auto announce_on = links_.contains(ProtocolId::wifi) ? ProtocolId::wifi : links_.begin()->first;
    link_locked(announce_on).send(transport::RawFrame(
        announce_on, to_bytes(normalization::serialize_announce(desc_, floor_seconds(now)))));
  } catch (const Error& e) {
    ++connect_failures_;
    drop_session_locked(now, e.what());
    return false;
  }
  next_attempt_.reset();
  backoff_ = options_.reconnect_min;
  return true;
}

void SimNode::drop_session_locked(TimePoint now, const std::string& why) {
  if (client_) client_->disconnect();
  client_.reset();
  for (auto& [p, link] : links_) link->close();
  links_.clear();
  diagnostics_.push_back(format_timestamp(floor_seconds(now)) + " disconnected: " + why);
  next_attempt_ = now + backoff_;
  backoff_ = std::min(backoff_ * 2, options_.reconnect_max);
}

transport::LinkEndpoint& SimNode::link_locked(ProtocolId p) {
  auto it = links_.find(p);
  if (it != links_.end()) return *it->second;
  auto stream = connectors_.at(p)();
  stream->set_notifier(notifier_);
  return *links_.emplace(p, std::make_unique<transport::LinkEndpoint>(p, std::move(stream))).first->second;
}

bool SimNode::session_broken_locked() const {
  if (client_->closed()) return true;
  return std::any_of(links_.begin(), links_.end(), [](const auto& kv) { return kv.second->stream().closed(); });
}

void SimNode::apply_config_locked(const Bytes& payload, TimePoint now) {
  auto reject = [&](const std::string& why) {
    diagnostics_.push_back(format_timestamp(floor_seconds(now)) + " rejected config: " + why);
  };
  NodeDescriptor d;
  try {
    d = descriptor_from_json(Json::parse(to_string(payload)));
  } catch (const Error& e) {
    return reject(e.what());
  } catch (const Json::exception& e) {
    return reject(e.what());
  }
  if (d.node_id != id_) return reject("addressed to " + d.node_id);
  for (const auto& [sensor, p] : d.protocol_assignment) {
    if (!connectors_.contains(p)) return reject("no " + std::string(to_string(p)) + " radio for " + sensor);
  }

  desc_.capture_interval = d.capture_interval;
  for (const auto& s : sensors_) {
    if (auto it = d.protocol_assignment.find(s.sensor_id); it != d.protocol_assignment.end()) {
      desc_.protocol_assignment[s.sensor_id] = it->second;
    }
  }
  configured_ = true;
  const Millis interval = std::chrono::seconds(desc_.capture_interval);
  if (last_emit_) {
    next_emit_ = *last_emit_ + interval;
  } else if (!next_emit_) {
    next_emit_ = std::max(options_.epoch, now);
  }
  try {
    for (const auto& [sensor, p] : desc_.protocol_assignment) link_locked(p);
  } catch (const Error& e) {
    ++connect_failures_;
    drop_session_locked(now, e.what());
  }
}

void SimNode::emit_locked(TimePoint at) {
  last_emit_ = at;
  next_emit_ = at + std::chrono::seconds(desc_.capture_interval);
  const double t = std::chrono::duration<double>(at - options_.epoch).count();
  const auto weather = sensors::synth_weather(t, options_.seed, options_.calibration);
  for (const auto& s : sensors_) {
    const auto p = desc_.protocol_assignment.at(s.sensor_id);
    double value = 0.0;
    if (auto f = forced_.find(s.sensor_id); f != forced_.end()) {
      value = f->second;
      forced_.erase(f);
    } else {
      value = measure(s.magnitude, weather, options_.calibration);
    }
    const normalization::NodeUplinkRecord rec{id_, s.sensor_id, value, floor_seconds(at)};
    std::size_t bytes = 0;
    try {
      bytes = link_locked(p).send(transport::RawFrame(p, to_bytes(normalization::serialize_record(rec))));
    } catch (const Error& e) {
      ++connect_failures_;
      drop_session_locked(at, e.what());
      return;
    }
    emissions_.push_back({at, s.sensor_id, p, value, bytes});
  }
}

}  // namespace iotgw::sim
