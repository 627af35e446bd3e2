// iotgw: run the gateway, a simulated fleet, or tabulate a scenario report.
//
//   iotgw gateway --config PATH
//   iotgw sim --scenario PATH [--virtual-clock|--real-clock] [--out DIR]
//   iotgw report --in PATH --metric throughput|counts|readings
//   iotgw sink --port N
//
// Exit codes: 0 success, 1 usage, 2 runtime failure.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include "iotgw/error.hpp"
#include "iotgw/gateway/api.hpp"
#include "iotgw/gateway/gateway.hpp"
#include "iotgw/sim/runner.hpp"
#include "iotgw/transport/tcp.hpp"

using namespace iotgw;

namespace {

constexpr int kUsage = 1;
constexpr int kFailure = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void wait_for_signal() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

int cmd_gateway(const std::string& config_path) {
  const auto cfg = gateway::load_config(config_path);
  SystemClock clock;
  gateway::Gateway gw(cfg, clock);

  std::map<ProtocolId, std::shared_ptr<transport::TcpAcceptor>> listeners;
  for (auto p : kAllProtocols) {
    auto acc = std::make_shared<transport::TcpAcceptor>(cfg.listen_host, static_cast<std::uint16_t>(cfg.port_for(p)));
    listeners[p] = acc;
    gw.add_transport_listener(p, acc);
  }
  auto broker = std::make_shared<transport::TcpAcceptor>(cfg.listen_host, static_cast<std::uint16_t>(cfg.broker_port));
  gw.add_broker_listener(broker);
  if (!cfg.cloud_broker.empty()) {
    const auto [host, port] = transport::split_host_port(cfg.cloud_broker);
    gw.set_uplink(transport::tcp_connector(host, port));
  }
  gateway::ApiServer api(gw, cfg.api_token);
  const int api_port = api.start(cfg.listen_host, cfg.api_port);
  gw.start();

  std::cout << "iotgw gateway " << cfg.identity.gate_id << " on network " << cfg.identity.network_id << "\n";
  for (auto& [p, acc] : listeners) {
    std::cout << "  " << to_string(p) << " " << cfg.listen_host << ":" << acc->port() << "\n";
  }
  std::cout << "  mqtt " << cfg.listen_host << ":" << broker->port() << "\n";
  std::cout << "  api http://" << cfg.listen_host << ":" << api_port << "\n";
  if (!cfg.cloud_broker.empty()) std::cout << "  uplink " << cfg.cloud_broker << "\n";
  std::cout << std::flush;

  wait_for_signal();
  api.stop();
  gw.stop();
  return 0;
}

int cmd_sim(const std::string& scenario_path, bool real_clock, const std::string& out_dir,
            std::optional<int> api_port, const std::string& api_token) {
  const auto spec = sim::load_scenario(scenario_path);
  sim::RunOptions opts;
  opts.virtual_clock = !real_clock;
  opts.work_dir = out_dir;
  opts.api_port = api_port;
  if (!api_token.empty()) opts.api_token = api_token;

  sim::ScenarioRunner runner(spec, opts);
  if (api_port) {
    runner.at(0, [](sim::ScenarioRunner& r) { std::cout << "api http://127.0.0.1:" << *r.api_port() << std::endl; });
  }
  const auto report = runner.run();
  sim::write_report(report, out_dir);

  std::cout << "readings persisted " << report.persisted << ", at cloud sink " << report.sink_total << "\n";
  for (auto p : kAllProtocols) {
    const auto it = report.sink_by_protocol.find(p);
    std::cout << "  " << to_string(p) << " " << (it == report.sink_by_protocol.end() ? 0 : it->second) << "\n";
  }
  std::cout << "alarms " << report.alarms.size() << ", wall time " << report.wall_seconds << " s\n";
  std::cout << "report written to " << (std::filesystem::path(out_dir) / "report.json").string() << "\n";
  return 0;
}

int cmd_report(const std::string& in, const std::string& metric) {
  std::ifstream f(in);
  if (!f) {
    std::cerr << "error: cannot open " << in << "\n";
    return kFailure;
  }
  Json j;
  try {
    j = Json::parse(f);
  } catch (const Json::exception& e) {
    std::cerr << "error: " << in << ": " << e.what() << "\n";
    return kFailure;
  }
  try {
    std::cout << sim::render_metric(j, metric);
  } catch (const Error& e) {
    if (e.code() != Errc::UnknownMetric) throw;
    std::cerr << "error: unknown metric '" << metric << "' (throughput, counts, readings)\n";
    return kUsage;
  }
  return 0;
}

int cmd_sink(const std::string& host, int port) {
  mqtt::Broker broker;
  auto acc = std::make_shared<transport::TcpAcceptor>(host, static_cast<std::uint16_t>(port));
  broker.add_listener(acc);
  std::mutex out_mu;
  broker.observe("#", [&](const mqtt::Message& m) {
    std::lock_guard lk(out_mu);
    std::cout << m.topic << " " << to_string(m.payload) << std::endl;
  });
  SystemClock clock;
  PumpThread pump([&](TimePoint now) { broker.pump(now); }, clock, broker.notifier());
  std::cerr << "iotgw sink on " << host << ":" << acc->port() << std::endl;
  wait_for_signal();
  pump.stop();
  broker.close();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiprotocol IoT gateway and weather-station fleet simulator"};
  app.require_subcommand(1);

  std::string config_path;
  auto* gw_cmd = app.add_subcommand("gateway", "Run the gateway until interrupted");
  gw_cmd->add_option("--config", config_path, "Gateway configuration (JSON)")->required();

  std::string scenario_path;
  std::string out_dir = "sim-out";
  bool virtual_clock = false;
  bool real_clock = false;
  std::optional<int> api_port;
  std::string api_token;
  auto* sim_cmd = app.add_subcommand("sim", "Run a scenario and write its report");
  sim_cmd->add_option("--scenario", scenario_path, "Scenario specification (JSON)")->required();
  auto* vflag = sim_cmd->add_flag("--virtual-clock", virtual_clock, "Simulated time (default)");
  sim_cmd->add_flag("--real-clock", real_clock, "Wall-clock time")->excludes(vflag);
  sim_cmd->add_option("--out", out_dir, "Report directory")->capture_default_str();
  sim_cmd->add_option("--api-port", api_port, "Serve the REST API during the run (0 picks a port)");
  sim_cmd->add_option("--api-token", api_token, "Bearer token for --api-port");

  std::string report_in;
  std::string metric;
  auto* report_cmd = app.add_subcommand("report", "Tabulate a scenario report");
  report_cmd->add_option("--in", report_in, "report.json written by sim")->required();
  report_cmd->add_option("--metric", metric, "throughput, counts or readings")->required();

  std::string sink_host = "127.0.0.1";
  int sink_port = 1884;
  auto* sink_cmd = app.add_subcommand("sink", "Standalone MQTT broker that prints every message");
  sink_cmd->add_option("--port", sink_port, "Listen port")->capture_default_str();
  sink_cmd->add_option("--host", sink_host, "Listen address")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*gw_cmd) return cmd_gateway(config_path);
    if (*sim_cmd) return cmd_sim(scenario_path, real_clock, out_dir, api_port, api_token);
    if (*report_cmd) return cmd_report(report_in, metric);
    if (*sink_cmd) return cmd_sink(sink_host, sink_port);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
