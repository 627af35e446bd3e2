#include "iotgw/sim/runner.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include "iotgw/error.hpp"

namespace iotgw::sim {

namespace {

using std::chrono::seconds;

std::int64_t offset_s(TimePoint t, TimePoint t0) {
  return std::chrono::floor<seconds>(t - t0).count();
}

std::string fmt_kbps(double v) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

struct ScenarioRunner::Impl {
  VirtualClock vclock;
  SystemClock sclock;
  const Clock* clock = nullptr;
  bool virtual_clock = true;
  TimePoint t0{};

  std::shared_ptr<transport::MemoryAcceptor> cloud_acceptor;
  std::shared_ptr<transport::MemoryAcceptor> broker_acceptor;
  std::map<ProtocolId, std::shared_ptr<transport::MemoryAcceptor>> link_acceptors;
  std::unique_ptr<mqtt::Broker> cloud;
  std::unique_ptr<gateway::Gateway> gw;
  std::unique_ptr<gateway::ApiServer> api;
  std::vector<std::unique_ptr<SimNode>> nodes;
  std::vector<std::unique_ptr<PumpThread>> node_threads;
  std::unique_ptr<PumpThread> cloud_thread;

  std::mutex sink_mu;
  std::map<ProtocolId, std::uint64_t> sink_by_protocol;
  std::uint64_t sink_total = 0;

  std::vector<SeriesPoint> series;

  bool pump_all(TimePoint now) {
    bool progress = cloud->pump(now);
    progress |= gw->pump(now);
    for (auto& n : nodes) progress |= n->pump(now);
    return progress;
  }

  void settle(TimePoint now) {
    for (int i = 0; i < 1'000'000; ++i) {
      if (!pump_all(now)) return;
    }
    fail(Errc::ScenarioTimeout, "components never went idle");
  }

  std::optional<TimePoint> next_deadline() const {
    std::optional<TimePoint> d;
    auto merge = [&](std::optional<TimePoint> t) {
      if (t && (!d || *t < *d)) d = t;
    };
    merge(cloud->next_deadline());
    merge(gw->next_deadline());
    for (const auto& n : nodes) merge(n->next_deadline());
    return d;
  }

  bool uplink_drained() const {
    const auto* up = gw->uplink();
    if (!up) return true;
    const auto s = up->stats();
    return s.buffered == 0 && s.inflight == 0;
  }

  bool all_ready() const {
    return std::all_of(nodes.begin(), nodes.end(), [](const auto& n) { return n->ready(); });
  }

  void sample_series(std::int64_t t_s, std::uint32_t window_s) {
    const auto at = t0 + seconds(t_s);
    const Millis window = seconds(window_s);
    for (auto p : kAllProtocols) {
      series.push_back({t_s, p, "all", gw->throughput().kbps(p, std::nullopt, window, at)});
      for (const auto& n : nodes) series.push_back({t_s, p, n->id(), gw->throughput().kbps(p, n->id(), window, at)});
    }
  }
};

ScenarioRunner::ScenarioRunner(ScenarioSpec spec, RunOptions options)
    : spec_(std::move(spec)), options_(std::move(options)) {
  spec_.validate();
  if (options_.work_dir.empty()) fail(Errc::InvalidScenario, "work_dir is required");
}

ScenarioRunner::~ScenarioRunner() = default;

void ScenarioRunner::at(std::int64_t offset, Hook hook) { hooks_.emplace_back(offset, std::move(hook)); }

gateway::Gateway& ScenarioRunner::gateway() {
  if (!impl_ || !impl_->gw) fail(Errc::NotConnected, "scenario not running");
  return *impl_->gw;
}

SimNode& ScenarioRunner::node(const std::string& node_id) {
  if (impl_) {
    for (auto& n : impl_->nodes) {
      if (n->id() == node_id) return *n;
    }
  }
  fail(Errc::UnknownNode, node_id);
}

std::optional<int> ScenarioRunner::api_port() const {
  if (!impl_ || !impl_->api) return std::nullopt;
  return impl_->api->port();
}

TimePoint ScenarioRunner::now() const {
  if (!impl_) fail(Errc::NotConnected, "scenario not running");
  return impl_->clock->now();
}

ScenarioReport ScenarioRunner::run() {
  const auto wall_start = std::chrono::steady_clock::now();
  impl_ = std::make_unique<Impl>();
  auto& im = *impl_;
  im.virtual_clock = options_.virtual_clock;
  if (im.virtual_clock) {
    im.t0 = options_.virtual_start;
    im.clock = &im.vclock;
  } else {
    im.t0 = std::chrono::ceil<seconds>(im.sclock.now()) + seconds(1);
    im.clock = &im.sclock;
  }
  const TimePoint end = im.t0 + seconds(spec_.duration_s);

  // Scenario actions become hooks, ahead of caller hooks at the same instant.
  std::vector<std::pair<std::int64_t, Hook>> hooks;
  for (const auto& a : spec_.actions) {
    hooks.emplace_back(a.at_s, [a](ScenarioRunner& r) {
      switch (a.kind) {
        case ScenarioAction::Kind::set_capture_interval: r.gateway().set_capture_interval(a.node_id, a.seconds); break;
        case ScenarioAction::Kind::assign_protocol: r.gateway().assign_protocol(a.node_id, a.sensor_id, a.protocol); break;
        case ScenarioAction::Kind::force_value: r.node(a.node_id).force_next(a.sensor_id, a.value); break;
      }
    });
  }
  hooks.insert(hooks.end(), hooks_.begin(), hooks_.end());
  std::stable_sort(hooks.begin(), hooks.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  // Boot: cloud sink, then gateway, then nodes.
  im.cloud_acceptor = std::make_shared<transport::MemoryAcceptor>("cloud");
  im.cloud = std::make_unique<mqtt::Broker>();
  im.cloud->add_listener(im.cloud_acceptor);
  im.cloud->observe("dat/#", [&im](const mqtt::Message& m) {
    ProtocolId p = ProtocolId::wifi;
    try {
      p = parse_protocol(Json::parse(to_string(m.payload)).at("protocol").get<std::string>());
    } catch (const std::exception&) {
      return;
    }
    std::lock_guard lk(im.sink_mu);
    ++im.sink_by_protocol[p];
    ++im.sink_total;
  });

  gateway::GatewayConfig cfg;
  cfg.identity = spec_.identity;
  cfg.api_token = options_.api_token;
  cfg.throughput_window_s = spec_.throughput_window_s;
  cfg.readings_log = options_.work_dir / "readings.jsonl";
  std::filesystem::create_directories(options_.work_dir);
  std::filesystem::remove(cfg.readings_log);
  im.gw = std::make_unique<gateway::Gateway>(cfg, *im.clock);
  for (auto p : kAllProtocols) {
    auto acc = std::make_shared<transport::MemoryAcceptor>(std::string(to_string(p)));
    im.link_acceptors[p] = acc;
    im.gw->add_transport_listener(p, acc);
  }
  im.broker_acceptor = std::make_shared<transport::MemoryAcceptor>("broker");
  im.gw->add_broker_listener(im.broker_acceptor);
  im.gw->set_uplink(im.cloud_acceptor->connector(spec_.identity.gate_id));
  for (const auto& rule : spec_.alarms) im.gw->alarms().add(rule);
  if (options_.api_port) {
    im.api = std::make_unique<gateway::ApiServer>(*im.gw, options_.api_token);
    im.api->start(options_.api_host, *options_.api_port);
  }

  for (std::size_t i = 0; i < spec_.nodes.size(); ++i) {
    const auto& d = spec_.nodes[i];
    std::map<ProtocolId, transport::Connector> links;
    for (auto& [p, acc] : im.link_acceptors) links[p] = acc->connector(d.node_id);
    SimNodeOptions opts;
    opts.gate_id = spec_.identity.gate_id;
    opts.seed = spec_.seed + i;
    opts.epoch = im.t0;
    opts.until = end;
    im.nodes.push_back(
        std::make_unique<SimNode>(d, std::move(links), im.broker_acceptor->connector(d.node_id), opts));
  }

  if (im.virtual_clock) {
    // Boot a second early so hooks at offset 0 still precede the first emission.
    const auto boot = im.t0 - seconds(1);
    im.vclock.set(boot);
    im.settle(boot);
    if (!im.all_ready()) fail(Errc::ScenarioTimeout, "nodes did not configure at start");
    im.vclock.set(im.t0);
  } else {
    im.cloud_thread = std::make_unique<PumpThread>([&im](TimePoint now) { im.cloud->pump(now); }, *im.clock,
                                                   im.cloud->notifier());
    im.gw->start();
    for (auto& n : im.nodes) {
      auto* node = n.get();
      im.node_threads.push_back(
          std::make_unique<PumpThread>([node](TimePoint now) { node->pump(now); }, *im.clock, node->notifier()));
    }
    const auto give_up = std::chrono::steady_clock::now() + options_.startup_timeout;
    while (!im.all_ready()) {
      if (std::chrono::steady_clock::now() > give_up) {
        im.node_threads.clear();
        im.gw->stop();
        im.cloud_thread.reset();
        fail(Errc::ScenarioTimeout, "nodes did not configure within " +
                                        std::to_string(options_.startup_timeout.count()) + " ms");
      }
      std::this_thread::sleep_for(Millis{10});
    }
  }

  // Throughput is sampled strictly inside the run so every window is full.
  std::vector<std::int64_t> samples;
  for (std::int64_t t = spec_.series_period_s; t < spec_.duration_s; t += spec_.series_period_s) samples.push_back(t);

  std::size_t next_hook = 0;
  std::size_t next_sample = 0;
  TimePoint cur = im.t0;
  for (;;) {
    while (next_hook < hooks.size() && im.t0 + seconds(hooks[next_hook].first) <= cur) {
      hooks[next_hook].second(*this);
      ++next_hook;
    }
    if (im.virtual_clock) im.settle(cur);
    while (next_sample < samples.size() && im.t0 + seconds(samples[next_sample]) <= cur) {
      if (!im.virtual_clock) std::this_thread::sleep_for(Millis{500});  // let in-flight frames land
      im.sample_series(samples[next_sample], spec_.throughput_window_s);
      ++next_sample;
    }
    if (cur >= end) break;

    TimePoint next = end;
    if (next_hook < hooks.size()) next = std::min(next, im.t0 + seconds(hooks[next_hook].first));
    if (next_sample < samples.size()) next = std::min(next, im.t0 + seconds(samples[next_sample]));
    if (im.virtual_clock) {
      if (auto d = im.next_deadline()) next = std::min(next, *d);
      next = std::max(next, cur + Millis{1});
      im.vclock.set(next);
    } else {
      std::this_thread::sleep_until(std::chrono::system_clock::time_point(next.time_since_epoch()));
      next = std::max(next, im.clock->now());
    }
    cur = next;
  }

  // Let the uplink finish acknowledging what the run produced.
  if (im.virtual_clock) {
    const auto limit = end + seconds(60);
    while (!im.uplink_drained() && cur < limit) {
      auto d = im.next_deadline();
      cur = std::max(cur + Millis{1}, d ? std::min(*d, limit) : limit);
      im.vclock.set(cur);
      im.settle(cur);
    }
  } else {
    const auto give_up = std::chrono::steady_clock::now() + seconds(5);
    while (!im.uplink_drained() && std::chrono::steady_clock::now() < give_up) std::this_thread::sleep_for(Millis{10});
    std::this_thread::sleep_for(Millis{100});
    im.node_threads.clear();
  }

  for (auto& n : im.nodes) n->close();
  if (im.api) im.api->stop();
  if (!im.virtual_clock) {
    im.gw->stop();
    im.cloud_thread.reset();
  }

  // Report.
  ScenarioReport r;
  r.duration_s = spec_.duration_s;
  r.seed = spec_.seed;
  r.start = floor_seconds(im.t0);
  r.throughput_window_s = spec_.throughput_window_s;
  r.throughput = im.series;
  const auto logged = im.gw->log().query({});
  for (const auto& n : im.nodes) {
    NodeReport nr;
    nr.node_id = n->id();
    for (const auto& e : n->emissions()) {
      auto& c = nr.counts[e.protocol];
      ++c.sent;
      c.bytes += e.wire_bytes;
      nr.traces[e.sensor_id].push_back({offset_s(e.at, im.t0), e.value, e.protocol});
    }
    for (const auto& reading : logged.readings) {
      if (reading.node_id() == nr.node_id) ++nr.counts[reading.protocol()].persisted;
    }
    nr.diagnostics = n->diagnostics();
    r.nodes.push_back(std::move(nr));
  }
  {
    std::lock_guard lk(im.sink_mu);
    r.sink_by_protocol = im.sink_by_protocol;
    r.sink_total = im.sink_total;
  }
  r.gateway = im.gw->counters();
  r.persisted = im.gw->log().count();
  if (const auto* up = im.gw->uplink()) {
    r.uplink_acknowledged = up->stats().acknowledged;
    r.uplink_dropped = up->stats().dropped;
  }
  for (const auto& a : im.gw->fired_alarms()) r.alarms.push_back(gateway::to_json(a));
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();

  impl_->cloud->close();
  impl_.reset();
  return r;
}

ScenarioReport run_scenario(const ScenarioSpec& spec, const RunOptions& options) {
  ScenarioRunner runner(spec, options);
  return runner.run();
}

// ---------------------------------------------------------------------------

const NodeReport& ScenarioReport::node(const std::string& id) const {
  for (const auto& n : nodes) {
    if (n.node_id == id) return n;
  }
  fail(Errc::UnknownNode, id);
}

Json to_json(const ScenarioReport& r) {
  std::map<ProtocolId, ChannelCount> per_protocol;
  Json nodes = Json::array();
  for (const auto& n : r.nodes) {
    Json counts = Json::object();
    for (const auto& [p, c] : n.counts) {
      counts[std::string(to_string(p))] = {{"sent", c.sent}, {"bytes", c.bytes}, {"persisted", c.persisted}};
      auto& agg = per_protocol[p];
      agg.sent += c.sent;
      agg.bytes += c.bytes;
      agg.persisted += c.persisted;
    }
    Json traces = Json::object();
    for (const auto& [sensor, points] : n.traces) {
      Json arr = Json::array();
      for (const auto& pt : points) arr.push_back({{"t_s", pt.t_s}, {"value", pt.value}, {"protocol", to_string(pt.protocol)}});
      traces[sensor] = std::move(arr);
    }
    nodes.push_back({{"node_id", n.node_id}, {"counts", counts}, {"traces", traces}, {"diagnostics", n.diagnostics}});
  }

  Json protocols = Json::object();
  Json errors = Json::object();
  for (auto p : kAllProtocols) {
    const auto& c = per_protocol[p];
    const auto sink = r.sink_by_protocol.contains(p) ? r.sink_by_protocol.at(p) : 0;
    protocols[std::string(to_string(p))] = {
        {"sent", c.sent}, {"bytes", c.bytes}, {"persisted", c.persisted}, {"sink", sink}};
    errors[std::string(to_string(p))] = r.gateway.errors[static_cast<std::size_t>(p)];
  }

  Json series = Json::array();
  for (const auto& s : r.throughput) {
    series.push_back({{"t_s", s.t_s}, {"protocol", to_string(s.protocol)}, {"node", s.node}, {"kbps", s.kbps}});
  }

  return {{"duration_s", r.duration_s},
          {"seed", r.seed},
          {"start", format_timestamp(r.start)},
          {"totals",
           {{"persisted", r.persisted},
            {"sink_received", r.sink_total},
            {"frames_ingested", r.gateway.frames_ingested},
            {"announces", r.gateway.announces},
            {"uplink_publishes", r.gateway.uplink_publishes},
            {"uplink_acknowledged", r.uplink_acknowledged},
            {"uplink_dropped", r.uplink_dropped},
            {"alarms_fired", r.gateway.alarms_fired},
            {"errors", errors}}},
          {"protocols", protocols},
          {"nodes", nodes},
          {"throughput_window_s", r.throughput_window_s},
          {"throughput", series},
          {"alarms", r.alarms}};
}

std::string throughput_csv(const ScenarioReport& r) { return render_metric(to_json(r), "throughput"); }

void write_report(const ScenarioReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "report.json") << to_json(r).dump(2) << "\n";
  std::ofstream(dir / "throughput.csv") << throughput_csv(r);
}

std::string render_metric(const Json& report, std::string_view metric) {
  std::ostringstream out;
  try {
    const auto start = parse_timestamp(report.at("start").get<std::string>());
    auto stamp = [&](std::int64_t t_s) { return format_timestamp(start + seconds(t_s)); };
    if (metric == "throughput") {
      out << "timestamp,protocol,node,kbps\n";
      for (const auto& s : report.at("throughput")) {
        out << stamp(s.at("t_s").get<std::int64_t>()) << ',' << s.at("protocol").get<std::string>() << ','
            << s.at("node").get<std::string>() << ',' << fmt_kbps(s.at("kbps").get<double>()) << '\n';
      }
    } else if (metric == "counts") {
      out << "protocol,node,sent,persisted,bytes\n";
      for (const auto& n : report.at("nodes")) {
        for (const auto& [p, c] : n.at("counts").items()) {
          out << p << ',' << n.at("node_id").get<std::string>() << ',' << c.at("sent") << ',' << c.at("persisted")
              << ',' << c.at("bytes") << '\n';
        }
      }
      for (const auto& [p, c] : report.at("protocols").items()) {
        out << p << ",all," << c.at("sent") << ',' << c.at("persisted") << ',' << c.at("bytes") << '\n';
      }
    } else if (metric == "readings") {
      out << "timestamp,node,sensor,protocol,value\n";
      for (const auto& n : report.at("nodes")) {
        for (const auto& [sensor, points] : n.at("traces").items()) {
          for (const auto& pt : points) {
            out << stamp(pt.at("t_s").get<std::int64_t>()) << ',' << n.at("node_id").get<std::string>() << ','
                << sensor << ',' << pt.at("protocol").get<std::string>() << ',' << pt.at("value").dump() << '\n';
          }
        }
      }
    } else {
      fail(Errc::UnknownMetric, std::string(metric));
    }
  } catch (const Json::exception& e) {
    fail(Errc::InvalidValue, std::string("report: ") + e.what());
  }
  return out.str();
}

}  // namespace iotgw::sim
