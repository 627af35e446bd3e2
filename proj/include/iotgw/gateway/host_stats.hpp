#pragma once

#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>

#include "iotgw/clock.hpp"
#include "iotgw/json_codec.hpp"

namespace iotgw::gateway {

struct HostStats {
  TimePoint at{};
  double cpu_percent = 0.0;  // [0, 100]
  std::uint64_t free_memory_bytes = 0;
};

/// One slot of the exported series; a gap when the platform refused.
struct HostStatsEntry {
  TimePoint at{};
  std::optional<HostStats> stats;
  std::string gap_reason;
};

Json to_json(const HostStatsEntry& e);

/// Cumulative jiffies from the aggregate "cpu" line of /proc/stat.
struct CpuTimes {
  std::uint64_t busy = 0;
  std::uint64_t total = 0;
};
/// Throws Error(SamplingUnavailable).
CpuTimes parse_proc_stat(std::string_view text);
/// MemAvailable in bytes. Throws Error(SamplingUnavailable).
std::uint64_t parse_meminfo(std::string_view text);

/// Samples host CPU and free memory every `period`. The readers are
/// injectable so tests can simulate a refusing platform.
class HostStatsSampler {
 public:
  using Reader = std::function<std::string()>;

  explicit HostStatsSampler(Millis period = Millis{10'000}, std::size_t capacity = 8640);
  void set_readers(Reader proc_stat, Reader meminfo);

  /// Takes a sample if one is due at `now`. Returns true if it did.
  bool maybe_sample(TimePoint now);
  /// Unconditional sample. Throws Error(SamplingUnavailable) after recording a gap.
  HostStats sample(TimePoint now);

  std::vector<HostStatsEntry> series() const;
  Millis period() const noexcept { return period_; }
  std::optional<TimePoint> next_due() const;

 private:
  Millis period_;
  std::size_t capacity_;
  Reader read_stat_;
  Reader read_meminfo_;
  mutable std::mutex mu_;
  std::optional<CpuTimes> last_cpu_;
  std::optional<TimePoint> last_at_;
  std::deque<HostStatsEntry> series_;
};

}  // namespace iotgw::gateway
