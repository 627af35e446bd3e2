#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <vector>

#include "iotgw/core_model.hpp"

namespace iotgw::gateway {

struct ReadingQuery {
  std::optional<Timestamp> since;
  std::optional<std::string> node_id;
  std::optional<std::string> sensor_id;
};

struct QueryResult {
  std::vector<NormalizedReading> readings;
  std::vector<std::size_t> corrupt_lines;  // 1-based, skipped
};

/// Append-only JSON-lines file, one canonical reading per line.
class ReadingLog {
 public:
  /// Creates parent directories and the file if missing; existing lines are kept.
  explicit ReadingLog(std::filesystem::path path, std::uint64_t max_bytes = 1ull << 30);

  /// Throws Error(StorageFull) when the line would push the file past max_bytes
  /// or the write fails.
  void append(const NormalizedReading& r);
  QueryResult query(const ReadingQuery& q) const;
  std::uint64_t count() const;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::uint64_t max_bytes_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::uint64_t size_ = 0;
  std::uint64_t appended_ = 0;
};

}  // namespace iotgw::gateway
