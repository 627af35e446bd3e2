#include "iotgw/gateway/reading_log.hpp"

#include "iotgw/error.hpp"

namespace iotgw::gateway {

ReadingLog::ReadingLog(std::filesystem::path path, std::uint64_t max_bytes)
    : path_(std::move(path)), max_bytes_(max_bytes) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  out_.open(path_, std::ios::app | std::ios::binary);
  if (!out_) fail(Errc::StorageFull, "cannot open " + path_.string());
  std::error_code ec;
  size_ = std::filesystem::file_size(path_, ec);
}

void ReadingLog::append(const NormalizedReading& r) {
  const auto line = serialize_reading(r) + "\n";
  std::lock_guard lk(mu_);
  if (size_ + line.size() > max_bytes_) fail(Errc::StorageFull, path_.string());
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
  if (!out_) fail(Errc::StorageFull, path_.string());
  size_ += line.size();
  ++appended_;
}

QueryResult ReadingLog::query(const ReadingQuery& q) const {
  std::lock_guard lk(mu_);
  QueryResult result;
  std::ifstream in(path_, std::ios::binary);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      auto r = parse_reading(line);
      if (q.since && r.date() < *q.since) continue;
      if (q.node_id && r.node_id() != *q.node_id) continue;
      if (q.sensor_id && r.sensor_id() != *q.sensor_id) continue;
      result.readings.push_back(std::move(r));
    } catch (const std::exception&) {
      result.corrupt_lines.push_back(number);
    }
  }
  return result;
}

std::uint64_t ReadingLog::count() const {
  std::lock_guard lk(mu_);
  return appended_;
}

}  // namespace iotgw::gateway
