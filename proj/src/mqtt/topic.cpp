#include "iotgw/mqtt/topic.hpp"

#include <algorithm>
#include <cstdint>

namespace iotgw::mqtt {

bool valid_topic_name(std::string_view name) noexcept {
  if (name.empty() || name.size() > UINT16_MAX) return false;
  for (char c : name) {
    if (c == '\0' || c == '+' || c == '#') return false;
  }
  return true;
}

bool valid_topic_filter(std::string_view filter) noexcept {
  if (filter.empty() || filter.size() > UINT16_MAX) return false;
  for (std::size_t i = 0; i < filter.size(); ++i) {
    const char c = filter[i];
    if (c == '\0') return false;
    const bool level_start = i == 0 || filter[i - 1] == '/';
    const bool level_end = i + 1 == filter.size() || filter[i + 1] == '/';
    if (c == '+' && !(level_start && level_end)) return false;
    if (c == '#' && !(level_start && i + 1 == filter.size())) return false;
  }
  return true;
}

bool topic_matches(std::string_view filter, std::string_view name) noexcept {
  std::size_t f = 0;
  std::size_t n = 0;
  for (;;) {
    const auto f_end = std::min(filter.find('/', f), filter.size());
    const auto f_level = filter.substr(f, f_end - f);
    if (f_level == "#") return true;

    const auto n_end = std::min(name.find('/', n), name.size());
    const auto n_level = name.substr(n, n_end - n);
    if (f_level != "+" && f_level != n_level) return false;

    const bool f_last = f_end == filter.size();
    const bool n_last = n_end == name.size();
    if (f_last && n_last) return true;
    if (f_last) return false;
    if (n_last) {
      // "a/#" matches "a".
      return filter.substr(f_end) == "/#";
    }
    f = f_end + 1;
    n = n_end + 1;
  }
}

}  // namespace iotgw::mqtt
