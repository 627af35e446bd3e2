#include "iotgw/gateway/host_stats.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "iotgw/error.hpp"

namespace iotgw::gateway {

Json to_json(const HostStatsEntry& e) {
  Json j{{"t", format_timestamp(floor_seconds(e.at))}, {"t_ms", e.at.time_since_epoch().count()}};
  if (e.stats) {
    j["cpu_percent"] = e.stats->cpu_percent;
    j["free_memory_bytes"] = e.stats->free_memory_bytes;
  } else {
    j["gap"] = e.gap_reason;
  }
  return j;
}

CpuTimes parse_proc_stat(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string label;
  in >> label;
  if (label != "cpu") fail(Errc::SamplingUnavailable, "no aggregate cpu line");
  // user nice system idle iowait irq softirq steal
  std::uint64_t v[8] = {};
  int n = 0;
  while (n < 8 && in >> v[n]) ++n;
  if (n < 4) fail(Errc::SamplingUnavailable, "short cpu line");
  CpuTimes t;
  for (int i = 0; i < n; ++i) t.total += v[i];
  t.busy = t.total - v[3] - (n > 4 ? v[4] : 0);
  return t;
}

std::uint64_t parse_meminfo(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.starts_with("MemAvailable:")) continue;
    std::istringstream fields(line.substr(13));
    std::uint64_t kib = 0;
    if (!(fields >> kib)) break;
    return kib * 1024;
  }
  fail(Errc::SamplingUnavailable, "MemAvailable not reported");
}

namespace {

std::string slurp(const char* path) {
  std::ifstream in(path);
  if (!in) fail(Errc::SamplingUnavailable, std::string("cannot read ") + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

HostStatsSampler::HostStatsSampler(Millis period, std::size_t capacity)
    : period_(period),
      capacity_(capacity),
      read_stat_([] { return slurp("/proc/stat"); }),
      read_meminfo_([] { return slurp("/proc/meminfo"); }) {}

void HostStatsSampler::set_readers(Reader proc_stat, Reader meminfo) {
  std::lock_guard lk(mu_);
  read_stat_ = std::move(proc_stat);
  read_meminfo_ = std::move(meminfo);
}

std::optional<TimePoint> HostStatsSampler::next_due() const {
  std::lock_guard lk(mu_);
  if (!last_at_) return std::nullopt;
  return *last_at_ + period_;
}

bool HostStatsSampler::maybe_sample(TimePoint now) {
  {
    std::lock_guard lk(mu_);
    if (last_at_ && now < *last_at_ + period_) return false;
  }
  try {
    sample(now);
  } catch (const Error&) {
    // recorded as a gap
  }
  return true;
}

HostStats HostStatsSampler::sample(TimePoint now) {
  std::lock_guard lk(mu_);
  // Timestamps stay strictly increasing even if the caller's clock does not.
  if (last_at_ && now <= *last_at_) now = *last_at_ + Millis{1};
  last_at_ = now;

  auto push = [&](HostStatsEntry e) {
    series_.push_back(std::move(e));
    while (series_.size() > capacity_) series_.pop_front();
  };

  try {
    const auto cpu = parse_proc_stat(read_stat_());
    const auto mem = parse_meminfo(read_meminfo_());
    double pct = 0.0;
    const CpuTimes base = last_cpu_.value_or(CpuTimes{});
    if (cpu.total > base.total && cpu.busy >= base.busy) {
      pct = 100.0 * static_cast<double>(cpu.busy - base.busy) / static_cast<double>(cpu.total - base.total);
    }
    last_cpu_ = cpu;
    HostStats s{now, std::clamp(pct, 0.0, 100.0), mem};
    push({now, s, {}});
    return s;
  } catch (const Error& e) {
    push({now, std::nullopt, e.detail()});
    throw;
  }
}

std::vector<HostStatsEntry> HostStatsSampler::series() const {
  std::lock_guard lk(mu_);
  return {series_.begin(), series_.end()};
}

}  // namespace iotgw::gateway
