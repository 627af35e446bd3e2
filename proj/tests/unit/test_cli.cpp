#include <doctest.h>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fstream>
#include <regex>

#include "iotgw/transport/tcp.hpp"
#include "support/temp_dir.hpp"

#ifndef IOTGW_CLI
#error "IOTGW_CLI must name the iotgw binary"
#endif

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

/// Runs the CLI to completion with output captured in files.
Outcome run(const std::vector<std::string>& args, const std::filesystem::path& cwd) {
  const auto out = cwd / "stdout.txt";
  const auto err = cwd / "stderr.txt";
  const pid_t pid = fork();
  if (pid == 0) {
    if (chdir(cwd.c_str()) != 0) _exit(99);
    const int o = open(out.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    const int e = open(err.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    dup2(o, 1);
    dup2(e, 2);
    std::vector<char*> argv{const_cast<char*>(IOTGW_CLI)};
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    execv(IOTGW_CLI, argv.data());
    _exit(98);
  }
  int status = 0;
  waitpid(pid, &status, 0);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

/// Long-running child whose stdout is a pipe.
struct Daemon {
  pid_t pid = -1;
  int out_fd = -1;
  std::string seen;

  Daemon(const std::vector<std::string>& args, const std::filesystem::path& cwd) {
    int fds[2];
    REQUIRE(pipe(fds) == 0);
    pid = fork();
    if (pid == 0) {
      if (chdir(cwd.c_str()) != 0) _exit(99);
      dup2(fds[1], 1);
      close(fds[0]);
      std::vector<char*> argv{const_cast<char*>(IOTGW_CLI)};
      for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
      argv.push_back(nullptr);
      execv(IOTGW_CLI, argv.data());
      _exit(98);
    }
    close(fds[1]);
    out_fd = fds[0];
  }

  /// Reads stdout until `needle` shows up or 10 s pass.
  bool read_until(const std::string& needle) {
    for (int i = 0; i < 100 && seen.find(needle) == std::string::npos; ++i) {
      pollfd p{out_fd, POLLIN, 0};
      if (poll(&p, 1, 100) > 0) {
        char buf[512];
        const auto n = read(out_fd, buf, sizeof buf);
        if (n <= 0) break;
        seen.append(buf, static_cast<std::size_t>(n));
      }
    }
    return seen.find(needle) != std::string::npos;
  }

  int terminate() {
    kill(pid, SIGTERM);
    int status = 0;
    waitpid(pid, &status, 0);
    close(out_fd);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
};

void write_file(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("sim writes a report that report tabulates") {
  iotgw::testing::TempDir dir;
  write_file(dir / "reference.json", R"({"duration_s": 480, "seed": 1, "nodes": [
      {"node_id": "node1", "gps": "4.711,-74.0302"}, {"node_id": "node2", "gps": "4.7111,-74.03"}]})");
  auto r = run({"sim", "--scenario", "reference.json", "--virtual-clock", "--out", "out"}, dir.path());
  REQUIRE(r.code == 0);
  CHECK(r.out.find("readings persisted 960, at cloud sink 960") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "out" / "report.json"));
  CHECK(slurp(dir / "out" / "throughput.csv").starts_with("timestamp,protocol,node,kbps\n"));

  r = run({"report", "--in", "out/report.json", "--metric", "counts"}, dir.path());
  CHECK(r.code == 0);
  for (const char* row : {"wifi,all,320,320,", "bluetooth,all,320,320,", "zigbee,all,320,320,"}) {
    CHECK(r.out.find(row) != std::string::npos);
  }
  r = run({"report", "--in", "out/report.json", "--metric", "throughput"}, dir.path());
  CHECK(r.code == 0);
  CHECK(r.out.find(",kbps\n") != std::string::npos);
  r = run({"report", "--in", "out/report.json", "--metric", "readings"}, dir.path());
  CHECK(r.code == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 961);

  r = run({"report", "--in", "out/report.json", "--metric", "latency"}, dir.path());
  CHECK(r.code == 1);
  CHECK(r.err.find("latency") != std::string::npos);
  r = run({"report", "--in", "missing.json", "--metric", "counts"}, dir.path());
  CHECK(r.code == 2);
}

TEST_CASE("usage and runtime exit codes") {
  iotgw::testing::TempDir dir;
  CHECK(run({}, dir.path()).code == 1);
  CHECK(run({"sim"}, dir.path()).code == 1);
  CHECK(run({"frobnicate"}, dir.path()).code == 1);
  CHECK(run({"sim", "--scenario", "x.json", "--virtual-clock", "--real-clock"}, dir.path()).code == 1);
  CHECK(run({"--help"}, dir.path()).code == 0);

  write_file(dir / "zero.json", R"({"duration_s": 0, "nodes": [{"node_id": "a", "gps": "1,1"}]})");
  auto r = run({"sim", "--scenario", "zero.json"}, dir.path());
  CHECK(r.code == 2);
  CHECK(r.err.find("InvalidScenario") != std::string::npos);
  CHECK(run({"sim", "--scenario", "absent.json"}, dir.path()).code == 2);
  CHECK(run({"gateway", "--config", "absent.json"}, dir.path()).code == 2);
  write_file(dir / "bad.json", R"({"api_token": "t", "wifi_port": "five"})");
  r = run({"gateway", "--config", "bad.json"}, dir.path());
  CHECK(r.code == 2);
  CHECK(r.err.find("wifi_port") != std::string::npos);
}

TEST_CASE("gateway prints its listen addresses and stops on SIGTERM") {
  iotgw::testing::TempDir dir;
  write_file(dir / "gw.json", R"({"api_token": "t", "wifi_port": 0, "bluetooth_port": 0, "zigbee_port": 0,
                                  "broker_port": 0, "api_port": 0})");
  Daemon d({"gateway", "--config", "gw.json"}, dir.path());
  REQUIRE(d.read_until("api http://"));
  d.read_until("\n");
  for (const char* p : {"wifi", "bluetooth", "zigbee", "mqtt"}) {
    CHECK(std::regex_search(d.seen, std::regex(std::string("\\b") + p + " 127\\.0\\.0\\.1:[1-9][0-9]*\\n")));
  }
  CHECK(d.terminate() == 0);
}

TEST_CASE("gateway port conflict names the port") {
  iotgw::testing::TempDir dir;
  iotgw::transport::TcpAcceptor taken("127.0.0.1", 0);
  const auto port = std::to_string(taken.port());
  write_file(dir / "gw.json", R"({"api_token": "t", "wifi_port": 0, "bluetooth_port": )" + port +
                                  R"(, "zigbee_port": 0, "broker_port": 0, "api_port": 0})");
  const auto r = run({"gateway", "--config", "gw.json"}, dir.path());
  CHECK(r.code == 2);
  CHECK(r.err.find(port) != std::string::npos);
}
