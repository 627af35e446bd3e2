#include "iotgw/gateway/api.hpp"

#include <httplib.h>

#include <atomic>
#include <thread>

#include "iotgw/error.hpp"

namespace iotgw::gateway {

namespace {

constexpr auto kJson = "application/json";

void reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void reply_error(httplib::Response& res, int status, std::string_view code, const std::string& detail) {
  reply(res, status, Json{{"error", code}, {"detail", detail}});
}

int status_for(Errc code) {
  switch (code) {
    case Errc::UnknownNode:
    case Errc::UnknownRule: return 404;
    case Errc::StorageFull: return 507;
    default: return 422;
  }
}

Json parse_body(const httplib::Request& req) {
  try {
    return Json::parse(req.body);
  } catch (const nlohmann::json::exception&) {
    fail(Errc::InvalidValue, "body is not JSON");
  }
}

Json node_json(const RegistryEntry& e) {
  auto j = to_json(e.descriptor);
  j["last_seen"] = e.last_seen ? Json(format_timestamp(*e.last_seen)) : Json(nullptr);
  return j;
}

}  // namespace

struct ApiServer::Impl {
  Gateway& gw;
  std::string token;
  httplib::Server server;
  std::thread thread;
  std::atomic<bool> stopping{false};
  int bound_port = 0;

  Impl(Gateway& g, std::string t) : gw(g), token(std::move(t)) { routes(); }

  bool authorized(const httplib::Request& req) const {
    const auto header = req.get_header_value("Authorization");
    if (header == "Bearer " + token) return true;
    return req.path == "/events" && req.get_param_value("access_token") == token;
  }

  // Runs a handler, mapping iotgw errors onto status codes.
  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        reply_error(res, status_for(e.code()), errc_name(e.code()), e.detail());
      } catch (const nlohmann::json::exception& e) {
        reply_error(res, 422, "InvalidValue", e.what());
      }
    };
  }

  void routes() {
    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (authorized(req)) return httplib::Server::HandlerResponse::Unhandled;
      res.set_header("WWW-Authenticate", "Bearer");
      reply_error(res, 401, "Unauthorized", "missing or bad bearer token");
      return httplib::Server::HandlerResponse::Handled;
    });

    server.Get("/nodes", guarded([this](const httplib::Request&, httplib::Response& res) {
      Json out = Json::array();
      for (const auto& e : gw.registry().list()) out.push_back(node_json(e));
      reply(res, 200, out);
    }));

    server.Post("/nodes", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto stored = gw.register_node(descriptor_from_json(parse_body(req)));
      reply(res, 201, to_json(stored));
    }));

    server.Patch(R"(/nodes/([A-Za-z0-9_.\-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      if (!gw.registry().find(id)) fail(Errc::UnknownNode, id);
      const auto body = parse_body(req);
      if (!body.is_object()) fail(Errc::InvalidValue, "body");
      for (const auto& [key, value] : body.items()) {
        if (key != "capture_interval" && key != "protocol_assignment") fail(Errc::InvalidValue, key);
      }
      // Validate everything before touching the registry.
      std::optional<std::int64_t> interval;
      if (body.contains("capture_interval")) {
        if (!body["capture_interval"].is_number_integer()) fail(Errc::InvalidInterval, "capture_interval");
        interval = body["capture_interval"].get<std::int64_t>();
        if (*interval < 1 || *interval > 86400) fail(Errc::InvalidInterval, std::to_string(*interval));
      }
      std::vector<std::pair<std::string, ProtocolId>> moves;
      if (body.contains("protocol_assignment")) {
        const auto& pa = body["protocol_assignment"];
        if (!pa.is_object()) fail(Errc::InvalidValue, "protocol_assignment");
        const auto node = gw.registry().find(id);
        for (const auto& [sensor, proto] : pa.items()) {
          if (!node->find_sensor(sensor)) fail(Errc::UnknownSensor, sensor);
          if (!proto.is_string()) fail(Errc::BadProtocol, sensor);
          moves.emplace_back(sensor, parse_protocol(proto.get<std::string>()));
        }
      }
      NodeDescriptor stored = *gw.registry().find(id);
      if (interval) stored = gw.set_capture_interval(id, *interval);
      for (const auto& [sensor, proto] : moves) stored = gw.assign_protocol(id, sensor, proto);
      reply(res, 200, to_json(stored));
    }));

    server.Get("/readings", guarded([this](const httplib::Request& req, httplib::Response& res) {
      ReadingQuery q;
      if (req.has_param("since")) q.since = parse_timestamp(req.get_param_value("since"));
      if (req.has_param("node")) q.node_id = req.get_param_value("node");
      if (req.has_param("sensor")) q.sensor_id = req.get_param_value("sensor");
      const auto result = gw.log().query(q);
      Json readings = Json::array();
      for (const auto& r : result.readings) readings.push_back(Json::parse(serialize_reading(r)));
      reply(res, 200, Json{{"readings", readings}, {"corrupt_lines", result.corrupt_lines}});
    }));

    server.Get("/metrics/throughput", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::int64_t window = gw.config().throughput_window_s;
      if (req.has_param("window")) {
        try {
          window = std::stoll(req.get_param_value("window"));
        } catch (const std::exception&) {
          fail(Errc::InvalidValue, "window");
        }
        if (window < 1) fail(Errc::InvalidValue, "window");
      }
      std::vector<ProtocolId> protocols(kAllProtocols.begin(), kAllProtocols.end());
      if (req.has_param("protocol")) protocols = {parse_protocol(req.get_param_value("protocol"))};
      std::optional<std::string> node;
      if (req.has_param("node")) node = req.get_param_value("node");

      const auto now = gw.clock().now();
      const Millis w{window * 1000};
      Json out = Json::array();
      for (auto p : protocols) {
        Json per_node = Json::object();
        for (const auto& n : gw.throughput().nodes(p)) per_node[n] = gw.throughput().kbps(p, n, w, now);
        out.push_back(Json{{"protocol", to_string(p)},
                           {"window", window},
                           {"at", format_timestamp(floor_seconds(now))},
                           {"kbps", gw.throughput().kbps(p, node, w, now)},
                           {"nodes", per_node}});
      }
      reply(res, 200, out);
    }));

    server.Get("/metrics/host", guarded([this](const httplib::Request&, httplib::Response& res) {
      Json series = Json::array();
      for (const auto& e : gw.host_stats().series()) series.push_back(to_json(e));
      reply(res, 200, Json{{"period_s", gw.host_stats().period().count() / 1000}, {"series", series}});
    }));

    server.Get("/alarms", guarded([this](const httplib::Request&, httplib::Response& res) {
      Json out = Json::array();
      for (const auto& r : gw.alarms().list()) out.push_back(to_json(r));
      reply(res, 200, out);
    }));

    server.Post("/alarms", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto rule = rule_from_json(parse_body(req));
      gw.alarms().add(rule);
      reply(res, 201, to_json(rule));
    }));

    server.Delete(R"(/alarms/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      gw.alarms().remove(req.matches[1]);
      res.status = 204;
    }));

    server.Get("/events", [this](const httplib::Request&, httplib::Response& res) {
      auto sub = gw.events().subscribe();
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream",
          [this, sub](std::size_t, httplib::DataSink& sink) {
            // An initial comment flushes headers so clients see the stream open.
            static constexpr std::string_view kHello = ": connected\n\n";
            if (!sink.write(kHello.data(), kHello.size())) return false;
            while (!stopping) {
              auto ev = sub->next(std::chrono::milliseconds(200));
              if (!ev) {
                if (!sink.is_writable()) return false;
                continue;
              }
              const auto type = (*ev)["type"].get<std::string>();
              const auto frame = "event: " + type + "\ndata: " + ev->dump() + "\n\n";
              if (!sink.write(frame.data(), frame.size())) return false;
            }
            sink.done();
            return true;
          },
          [this, sub](bool) { gw.events().unsubscribe(sub); });
    });
  }
};

ApiServer::ApiServer(Gateway& gateway, std::string token) : impl_(std::make_unique<Impl>(gateway, std::move(token))) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start(const std::string& host, int port) {
  // No SO_REUSEPORT: a second server on a taken port must fail.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (port == 0) {
    impl_->bound_port = impl_->server.bind_to_any_port(host);
    if (impl_->bound_port <= 0) fail(Errc::BindFailed, "port 0: no free port on " + host);
  } else {
    if (!impl_->server.bind_to_port(host, port)) fail(Errc::BindFailed, "port " + std::to_string(port) + ": cannot bind " + host);
    impl_->bound_port = port;
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->bound_port;
}

void ApiServer::stop() {
  if (!impl_->thread.joinable()) return;
  impl_->stopping = true;
  impl_->server.stop();
  impl_->thread.join();
}

int ApiServer::port() const noexcept { return impl_->bound_port; }

}  // namespace iotgw::gateway
